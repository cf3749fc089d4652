#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfi/tokens.hpp"

namespace cfi {

// Fixed-order n-gram model with add-k smoothing. Sequences are padded on the
// left with order-1 BOS sentinels, so every position is scored with a full
// order-n context and P(w|ctx) = (count(ctx,w) + k) / (count(ctx) + k*V).
// With k > 0 every probability is positive and every loss finite.
class NgramModel {
 public:
  NgramModel(std::uint32_t order, double add_k, std::uint32_t vocab_size);

  void add_sequence(std::span<const TokenId> tokens);

  // Mean negative log-likelihood (natural log) over tokens[from..].
  double sequence_nll(std::span<const TokenId> tokens,
                      std::size_t from = 0) const;

  double token_log_prob(std::span<const TokenId> context, TokenId next) const;

  // Greedy continuation of prompt; stops before emitting EOS or after
  // max_len tokens. Argmax ties break toward the smallest token id.
  std::vector<TokenId> greedy_continue(std::span<const TokenId> prompt,
                                       std::size_t max_len) const;

  std::uint32_t order() const { return order_; }
  std::uint32_t vocab_size() const { return vocab_size_; }
  double add_k() const { return add_k_; }

  // Canonical byte serialization (sorted contexts); equal models serialize
  // to equal bytes.
  std::string serialize() const;
  static NgramModel deserialize(const std::string& bytes);

 private:
  struct ContextCounts {
    std::unordered_map<TokenId, std::uint64_t> followers;
    std::uint64_t total = 0;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<TokenId>& key) const;
  };

  std::vector<TokenId> context_at(std::span<const TokenId> padded,
                                  std::size_t pos) const;
  const ContextCounts* find(const std::vector<TokenId>& ctx) const;
  void check_tokens(std::span<const TokenId> tokens) const;

  std::uint32_t order_;
  double add_k_;
  std::uint32_t vocab_size_;
  TokenId bos_;  // sentinel, outside the vocabulary
  std::unordered_map<std::vector<TokenId>, ContextCounts, KeyHash> table_;
};

}  // namespace cfi
