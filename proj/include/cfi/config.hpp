#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfi/dataset.hpp"

namespace cfi {

struct LearnerSpec {
  enum class Kind { kNgramLm, kLinearClassifier };
  enum class LossTokens { kFull, kAnswerOnly };

  Kind kind = Kind::kNgramLm;
  // n-gram language model
  std::uint32_t ngram_order = 3;
  double add_k = 0.1;
  LossTokens loss_tokens = LossTokens::kFull;
  // linear classifier
  double lc_learning_rate = 0.5;
  std::uint32_t lc_iterations = 200;
  double lc_l2 = 1e-3;

  void validate() const;
  // Canonical text form; stable input for provenance hashing.
  std::string serialize() const;
  bool operator==(const LearnerSpec&) const = default;
};

std::uint64_t learner_spec_hash(const LearnerSpec& spec);

// Flat key=value run description. Unknown keys are an error; serialization
// writes every key so a persisted run re-reads to an identical config.
struct RunConfig {
  std::uint64_t master_seed = 1;
  std::uint32_t n_models = 512;
  double inclusion_prob = 0.5;
  LearnerSpec learner;
  Modality modality = Modality::kQa;
  std::string dataset_path;  // empty: <out_dir>/targets.<ext>
  std::string out_dir = "out";

  // Synthetic data knobs (gen-data / craft-dups).
  std::uint32_t gen_unique = 40;
  std::uint32_t gen_dup_groups = 8;
  std::uint32_t gen_n_dup = 5;
  std::uint32_t gen_vocab_size = 200;
  std::uint32_t gen_q_len = 8;
  std::uint32_t gen_a_len = 12;
  std::uint32_t gen_overlap_order = 2;
  std::uint32_t gen_dim = 8;
  std::uint32_t gen_n_classes = 4;
  double gen_perturb_scale = 0.05;

  // Extraction and stability defaults.
  std::uint32_t extract_model = 0;
  std::uint32_t extract_max_len = 0;  // 0: cap at 2x reference length
  std::vector<std::uint32_t> stability_m_values = {32, 128, 512};

  std::string serialize() const;
  void save(const std::string& path) const;
  static RunConfig parse(const std::string& content,
                         const std::string& context_name);
  static RunConfig load(const std::string& path);

  // Effective dataset path.
  std::string resolved_dataset_path() const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace cfi
