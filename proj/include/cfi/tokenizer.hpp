#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cfi/tokens.hpp"

namespace cfi {

// Tokenizer for hand-written test corpora. The vocabulary file lists one
// token string per line; line k maps to id kFirstDataToken + k, after the
// reserved QSEP/ASEP/EOS slots. Whitespace mode splits on blanks; character
// mode maps each byte to a single-character vocabulary entry.
class Vocabulary {
 public:
  static Vocabulary from_file(const std::string& path);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  std::uint32_t size() const;  // including the reserved slots
  TokenId id_of(const std::string& token) const;
  const std::string& token_of(TokenId id) const;

  TokenSequence tokenize_whitespace(const std::string& text) const;
  TokenSequence tokenize_characters(const std::string& text) const;
  std::string render(const TokenSequence& seq) const;

 private:
  std::vector<std::string> tokens_;  // data tokens, id = index + offset
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace cfi
