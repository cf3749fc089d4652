#include "cfi/ngram_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cfi/error.hpp"
#include "cfi/hashing.hpp"

namespace cfi {

std::size_t NgramModel::KeyHash::operator()(
    const std::vector<TokenId>& key) const {
  return static_cast<std::size_t>(
      fnv1a64(key.data(), key.size() * sizeof(TokenId)));
}

NgramModel::NgramModel(std::uint32_t order, double add_k,
                       std::uint32_t vocab_size)
    : order_(order), add_k_(add_k), vocab_size_(vocab_size) {
  require(order_ >= 1, "ngram order must be >= 1");
  require(add_k_ > 0.0, "add_k must be positive");
  require(vocab_size_ >= 1 && vocab_size_ < 0xFFFFFFFFu,
          "vocab_size out of range");
  bos_ = vocab_size_;  // never a valid token, safe as padding
}

void NgramModel::check_tokens(std::span<const TokenId> tokens) const {
  for (TokenId t : tokens)
    if (t >= vocab_size_)
      fail("token id " + std::to_string(t) + " >= vocab_size " +
           std::to_string(vocab_size_));
}

std::vector<TokenId> NgramModel::context_at(std::span<const TokenId> padded,
                                            std::size_t pos) const {
  return std::vector<TokenId>(padded.begin() + pos,
                              padded.begin() + pos + order_ - 1);
}

void NgramModel::add_sequence(std::span<const TokenId> tokens) {
  check_tokens(tokens);
  std::vector<TokenId> padded(order_ - 1, bos_);
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    auto& entry = table_[context_at(padded, pos)];
    ++entry.followers[tokens[pos]];
    ++entry.total;
  }
}

const NgramModel::ContextCounts* NgramModel::find(
    const std::vector<TokenId>& ctx) const {
  const auto it = table_.find(ctx);
  return it == table_.end() ? nullptr : &it->second;
}

double NgramModel::token_log_prob(std::span<const TokenId> context,
                                  TokenId next) const {
  require(context.size() == order_ - 1, "context length must be order-1");
  if (next >= vocab_size_)
    fail("token id " + std::to_string(next) + " >= vocab_size " +
         std::to_string(vocab_size_));
  std::vector<TokenId> key(context.begin(), context.end());
  std::uint64_t count = 0;
  std::uint64_t total = 0;
  if (const ContextCounts* entry = find(key)) {
    total = entry->total;
    const auto it = entry->followers.find(next);
    if (it != entry->followers.end()) count = it->second;
  }
  return std::log((static_cast<double>(count) + add_k_) /
                  (static_cast<double>(total) + add_k_ * vocab_size_));
}

double NgramModel::sequence_nll(std::span<const TokenId> tokens,
                                std::size_t from) const {
  require(!tokens.empty(), "cannot score an empty sequence");
  require(from < tokens.size(), "score range is empty");
  check_tokens(tokens);
  std::vector<TokenId> padded(order_ - 1, bos_);
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  double nll = 0.0;
  for (std::size_t pos = from; pos < tokens.size(); ++pos)
    nll -= token_log_prob(
        std::span<const TokenId>(padded).subspan(pos, order_ - 1),
        tokens[pos]);
  return nll / static_cast<double>(tokens.size() - from);
}

std::vector<TokenId> NgramModel::greedy_continue(
    std::span<const TokenId> prompt, std::size_t max_len) const {
  check_tokens(prompt);
  std::vector<TokenId> window(order_ - 1, bos_);
  for (TokenId t : prompt) {
    if (order_ > 1) {
      window.erase(window.begin());
      window.push_back(t);
    }
  }
  std::vector<TokenId> out;
  while (out.size() < max_len) {
    TokenId best = 0;
    std::uint64_t best_count = 0;
    if (const ContextCounts* entry = find(window)) {
      // Smoothing is uniform over the vocabulary, so the argmax is the
      // highest raw count; ties and unseen contexts fall to the smallest id.
      for (const auto& [tok, cnt] : entry->followers) {
        if (cnt > best_count || (cnt == best_count && tok < best)) {
          best = tok;
          best_count = cnt;
        }
      }
    }
    if (best == kEos) break;
    out.push_back(best);
    if (order_ > 1) {
      window.erase(window.begin());
      window.push_back(best);
    }
  }
  return out;
}

std::string NgramModel::serialize() const {
  std::vector<const std::vector<TokenId>*> keys;
  keys.reserve(table_.size());
  for (const auto& [key, entry] : table_) keys.push_back(&key);
  std::sort(keys.begin(), keys.end(),
            [](const auto* a, const auto* b) { return *a < *b; });

  std::string out;
  auto put_u32 = [&out](std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
  };
  auto put_u64 = [&out](std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
  };
  out.append("CFINGRM1", 8);
  put_u32(order_);
  put_u32(vocab_size_);
  std::uint64_t kbits;
  std::memcpy(&kbits, &add_k_, 8);
  put_u64(kbits);
  put_u64(keys.size());
  for (const auto* key : keys) {
    for (TokenId t : *key) put_u32(t);
    const auto& entry = table_.at(*key);
    std::vector<std::pair<TokenId, std::uint64_t>> followers(
        entry.followers.begin(), entry.followers.end());
    std::sort(followers.begin(), followers.end());
    put_u64(followers.size());
    for (const auto& [tok, cnt] : followers) {
      put_u32(tok);
      put_u64(cnt);
    }
  }
  return out;
}

NgramModel NgramModel::deserialize(const std::string& bytes) {
  std::size_t off = 0;
  auto get_u32 = [&](const char* what) {
    if (off + 4 > bytes.size()) fail(std::string("ngram dump truncated at ") + what);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    off += 4;
    return v;
  };
  auto get_u64 = [&](const char* what) {
    if (off + 8 > bytes.size()) fail(std::string("ngram dump truncated at ") + what);
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + off, 8);
    off += 8;
    return v;
  };
  if (bytes.size() < 8 || bytes.compare(0, 8, "CFINGRM1") != 0)
    fail("not an ngram model dump");
  off = 8;
  const std::uint32_t order = get_u32("order");
  const std::uint32_t vocab = get_u32("vocab");
  const std::uint64_t kbits = get_u64("add_k");
  double add_k;
  std::memcpy(&add_k, &kbits, 8);
  NgramModel m(order, add_k, vocab);
  const std::uint64_t n_contexts = get_u64("contexts");
  for (std::uint64_t c = 0; c < n_contexts; ++c) {
    std::vector<TokenId> key(order - 1);
    for (auto& t : key) t = get_u32("context token");
    ContextCounts entry;
    const std::uint64_t n_followers = get_u64("followers");
    for (std::uint64_t f = 0; f < n_followers; ++f) {
      const TokenId tok = get_u32("follower token");
      const std::uint64_t cnt = get_u64("follower count");
      entry.followers[tok] = cnt;
      entry.total += cnt;
    }
    m.table_[std::move(key)] = std::move(entry);
  }
  return m;
}

}  // namespace cfi
