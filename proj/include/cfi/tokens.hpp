#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cfi {

using TokenId = std::uint32_t;

// Reserved vocabulary slots. Every QA vocabulary starts with these three;
// data tokens occupy ids >= kFirstDataToken. The question/answer framing is
// carried by tokens, not strings, so learners stay purely token-based.
inline constexpr TokenId kQSep = 0;   // "Q:"
inline constexpr TokenId kASep = 1;   // "A:"
inline constexpr TokenId kEos = 2;    // end of sequence
inline constexpr TokenId kFirstDataToken = 3;

struct TokenSequence {
  std::vector<TokenId> tokens;

  TokenSequence() = default;
  TokenSequence(std::initializer_list<TokenId> ids) : tokens(ids) {}
  explicit TokenSequence(std::vector<TokenId> ids) : tokens(std::move(ids)) {}

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence& o) const { return tokens == o.tokens; }
};

// Training rendering of a QA pair: QSEP q ASEP a EOS.
std::vector<TokenId> render_training_tokens(std::span<const TokenId> question,
                                            std::span<const TokenId> answer);

// Extraction prompt: QSEP q ASEP.
std::vector<TokenId> render_prompt_tokens(std::span<const TokenId> question);

}  // namespace cfi
