#include "cfi/extraction.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "cfi/error.hpp"

namespace cfi {

namespace {

using NgramKey = std::vector<TokenId>;

std::map<NgramKey, std::uint64_t> ngram_counts(const std::vector<TokenId>& s,
                                               int order) {
  std::map<NgramKey, std::uint64_t> counts;
  if (static_cast<int>(s.size()) < order) return counts;
  for (std::size_t i = 0; i + order <= s.size(); ++i)
    ++counts[NgramKey(s.begin() + i, s.begin() + i + order)];
  return counts;
}

}  // namespace

std::vector<std::pair<std::uint64_t, std::uint64_t>> modified_precisions(
    const TokenSequence& candidate, const TokenSequence& reference,
    int max_order) {
  require(max_order >= 1, "max_order must be >= 1");
  require(!reference.empty(), "reference must be non-empty");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  out.reserve(max_order);
  for (int order = 1; order <= max_order; ++order) {
    const auto cand = ngram_counts(candidate.tokens, order);
    const auto ref = ngram_counts(reference.tokens, order);
    std::uint64_t matched = 0, total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      const auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(count, it->second);
    }
    out.emplace_back(matched, total);
  }
  return out;
}

double bleu(const TokenSequence& candidate, const TokenSequence& reference,
            int max_order, double smoothing_epsilon) {
  require(!reference.empty(), "reference must be non-empty");
  if (candidate.empty()) return 0.0;

  const auto precisions = modified_precisions(candidate, reference, max_order);
  double log_sum = 0.0;
  for (const auto& [matched, total] : precisions) {
    double p = total == 0 ? 0.0
                          : static_cast<double>(matched) /
                                static_cast<double>(total);
    if (p == 0.0) {
      if (smoothing_epsilon <= 0.0) return 0.0;
      p = smoothing_epsilon;
    }
    log_sum += std::log(p) / max_order;
  }

  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum);
}

std::vector<ExtractionResult> measure_extraction(
    const TrainedModel& model, const Dataset& dataset,
    const DuplicateGroupMap* groups, std::size_t max_len) {
  require(model.is_language_model(),
          "extraction requires a language model");
  require(dataset.modality() == Modality::kQa,
          "extraction requires a QA dataset");

  std::vector<ExtractionResult> results(dataset.size());
  const long long n = static_cast<long long>(dataset.size());
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < n; ++k) {
    const std::size_t t = static_cast<std::size_t>(k);
    const QARecord& record = dataset.qa_record(t);
    ExtractionResult& res = results[t];
    res.record_id = record.record_id;
    res.prompt = render_prompt_tokens(record.question.tokens);
    res.reference = record.answer.tokens;
    std::size_t cap = 2 * record.answer.size();
    if (max_len > 0) cap = std::min(cap, max_len);
    res.generated =
        greedy_decode(model, TokenSequence(res.prompt), cap).tokens;
    res.bleu = bleu(TokenSequence(res.generated), record.answer);
    res.group = (groups && groups->group_of(record.record_id).has_value())
                    ? GroupTag::kWithDuplicates
                    : GroupTag::kUnique;
  }
  return results;
}

void write_extraction_csv(const std::vector<ExtractionResult>& results,
                          const std::string& path) {
  std::string out = "record_id,group,bleu,gen_len,ref_len\n";
  char buf[96];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%llu,%s,%.17g,%zu,%zu\n",
                  static_cast<unsigned long long>(r.record_id),
                  group_tag_name(r.group), r.bleu, r.generated.size(),
                  r.reference.size());
    out += buf;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot open '" + path + "' for writing");
  f << out;
  if (!f) fail("write failed for '" + path + "'");
}

std::vector<std::optional<double>> load_extraction_bleu(
    const std::string& path, std::size_t n_targets) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open extraction file '" + path + "'");
  std::vector<std::optional<double>> out(n_targets);
  std::string line;
  if (!std::getline(f, line) || line.rfind("record_id,", 0) != 0)
    fail("'" + path + "' is not an extraction CSV");
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    unsigned long long id = 0;
    char group_buf[32];
    double score = 0.0;
    if (std::sscanf(line.c_str(), "%llu,%31[^,],%lf", &id, group_buf,
                    &score) != 3)
      fail(path + ":" + std::to_string(line_no) +
           ": malformed extraction row");
    if (id < n_targets) out[id] = score;
  }
  return out;
}

std::string extraction_path(const std::string& out_dir) {
  return out_dir + "/extraction.csv";
}

}  // namespace cfi
