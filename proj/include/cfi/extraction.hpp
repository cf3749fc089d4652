#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfi/dataset.hpp"
#include "cfi/duplicates.hpp"
#include "cfi/learner.hpp"

namespace cfi {

// Clipped modified n-gram precision counts (matches, candidate n-grams) for
// orders 1..max_order. N-grams are over token ids.
std::vector<std::pair<std::uint64_t, std::uint64_t>> modified_precisions(
    const TokenSequence& candidate, const TokenSequence& reference,
    int max_order = 4);

// Sentence BLEU: geometric mean of the clipped precisions with uniform 1/n
// weights, times the brevity penalty exp(1 - r/c) when c < r. Unsmoothed:
// any zero precision (including a candidate shorter than the order) zeroes
// the score. An optional smoothing epsilon replaces zero precisions for
// diagnostics only.
double bleu(const TokenSequence& candidate, const TokenSequence& reference,
            int max_order = 4, double smoothing_epsilon = 0.0);

struct ExtractionResult {
  std::uint64_t record_id = 0;
  std::vector<TokenId> prompt;
  std::vector<TokenId> generated;
  std::vector<TokenId> reference;
  double bleu = 0.0;
  GroupTag group = GroupTag::kUnique;
};

// Greedy-decodes an answer for every record from its "QSEP q ASEP" prompt
// and scores it against the reference answer. Generation stops at EOS or at
// twice the reference length (capped further by max_len when nonzero).
std::vector<ExtractionResult> measure_extraction(
    const TrainedModel& model, const Dataset& dataset,
    const DuplicateGroupMap* groups, std::size_t max_len = 0);

void write_extraction_csv(const std::vector<ExtractionResult>& results,
                          const std::string& path);

// Per-target BLEU column for the summary table; absent for records missing
// from the file.
std::vector<std::optional<double>> load_extraction_bleu(
    const std::string& path, std::size_t n_targets);

std::string extraction_path(const std::string& out_dir);

}  // namespace cfi
