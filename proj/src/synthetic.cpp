#include "cfi/synthetic.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "cfi/error.hpp"
#include "cfi/rng.hpp"

namespace cfi {

namespace {

using Gram = std::vector<TokenId>;

std::set<Gram> grams_of(const std::vector<TokenId>& tokens,
                        std::uint32_t order) {
  std::set<Gram> out;
  if (tokens.size() >= order)
    for (std::size_t k = 0; k + order <= tokens.size(); ++k)
      out.insert(Gram(tokens.begin() + k, tokens.begin() + k + order));
  return out;
}

bool clashes(const std::set<Gram>& grams, const std::set<Gram>& used) {
  for (const auto& g : grams)
    if (used.count(g)) return true;
  return false;
}

}  // namespace

Dataset generate_qa_dataset(std::size_t n_records, std::uint32_t vocab_size,
                            std::size_t q_len, std::size_t a_len,
                            std::uint64_t seed,
                            std::uint32_t overlap_order) {
  require(n_records >= 1, "n_records must be >= 1");
  require(vocab_size > kFirstDataToken,
          "vocab_size must exceed the reserved token count");
  require(q_len >= 1 && a_len >= 1, "sequence lengths must be >= 1");
  require(overlap_order >= 1, "overlap_order must be >= 1");

  const std::uint32_t data_tokens = vocab_size - kFirstDataToken;
  RandomStream rng(seed, kTagSynthetic);
  auto draw_token = [&]() {
    return kFirstDataToken +
           static_cast<TokenId>(rng.uniform_u64(data_tokens));
  };

  // No n-gram of the requested order repeats anywhere across the corpus —
  // answers and questions alike — and final question tokens are pairwise
  // distinct, so greedy decoding of one record is never pulled onto
  // another's token path by a chance collision.
  std::set<Gram> used;
  std::set<TokenId> used_q_last;
  constexpr int kMaxTries = 10000;

  auto draw_sequence = [&](std::size_t len, bool is_question,
                           std::vector<TokenId>& out) {
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      std::vector<TokenId> tokens(len);
      for (auto& t : tokens) t = draw_token();
      if (is_question && used_q_last.count(tokens.back())) continue;
      const auto grams = grams_of(tokens, overlap_order);
      if (clashes(grams, used)) continue;
      used.insert(grams.begin(), grams.end());
      if (is_question) used_q_last.insert(tokens.back());
      out = std::move(tokens);
      return true;
    }
    return false;
  };

  std::vector<QARecord> records;
  records.reserve(n_records);
  for (std::size_t r = 0; r < n_records; ++r) {
    QARecord rec;
    rec.record_id = r;
    if (!draw_sequence(q_len, true, rec.question.tokens) ||
        !draw_sequence(a_len, false, rec.answer.tokens))
      fail("could not draw a low-overlap record " + std::to_string(r) +
           "; increase vocab_size");
    records.push_back(std::move(rec));
  }
  return Dataset::qa(vocab_size, std::move(records));
}

Dataset generate_vector_dataset(std::size_t n_records, std::size_t dim,
                                std::uint32_t n_classes, std::uint64_t seed,
                                double cluster_radius) {
  require(n_records >= 1, "n_records must be >= 1");
  require(dim >= 2, "dim must be >= 2");
  require(n_classes >= 2, "n_classes must be >= 2");

  RandomStream rng(seed, kTagSynthetic);

  // Class means: +/- axis directions first, then random unit directions.
  std::vector<std::vector<double>> means(n_classes,
                                         std::vector<double>(dim, 0.0));
  for (std::uint32_t c = 0; c < n_classes; ++c) {
    if (c < 2 * dim) {
      means[c][c / 2] = (c % 2 == 0 ? 1.0 : -1.0) * cluster_radius;
    } else {
      double norm = 0.0;
      for (auto& v : means[c]) {
        v = rng.gaussian();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : means[c]) v = v / norm * cluster_radius;
    }
  }

  std::vector<VectorRecord> records;
  records.reserve(n_records);
  for (std::size_t r = 0; r < n_records; ++r) {
    VectorRecord rec;
    rec.record_id = r;
    rec.label = static_cast<std::uint32_t>(r % n_classes);
    rec.features.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
      rec.features[k] = means[rec.label][k] + rng.gaussian();
    records.push_back(std::move(rec));
  }
  return Dataset::vectors(n_classes, std::move(records));
}

}  // namespace cfi
