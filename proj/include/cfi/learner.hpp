#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfi/config.hpp"
#include "cfi/dataset.hpp"
#include "cfi/linear_model.hpp"
#include "cfi/ngram_model.hpp"

namespace cfi {

// A trained model plus its provenance. Training is a pure function of
// (training subset, spec, model_seed); both learner kinds are in fact
// deterministic and record the seed without consuming it.
class TrainedModel {
 public:
  const LearnerSpec& spec() const { return spec_; }
  std::uint64_t model_index() const { return model_index_; }
  std::uint64_t model_seed() const { return model_seed_; }
  Modality modality() const;
  bool is_language_model() const;

  const NgramModel& lm() const;
  const LinearClassifier& classifier() const;

  // Training metrics: one (iteration, loss) row per classifier iteration, a
  // single closed-form row for the n-gram learner.
  const std::vector<double>& training_curve() const { return curve_; }

  // Documented binary dump (debugging aid; see README).
  std::string serialize() const;

 private:
  friend TrainedModel train(const Dataset&, std::span<const std::size_t>,
                            const LearnerSpec&, std::uint64_t, std::uint64_t);

  LearnerSpec spec_;
  std::uint64_t model_index_ = 0;
  std::uint64_t model_seed_ = 0;
  std::shared_ptr<const NgramModel> lm_;
  std::shared_ptr<const LinearClassifier> clf_;
  std::vector<double> curve_;
};

TrainedModel train(const Dataset& dataset,
                   std::span<const std::size_t> included,
                   const LearnerSpec& spec, std::uint64_t model_seed,
                   std::uint64_t model_index = 0);

// Per-sample loss. QA records are scored on their full training rendering
// (QSEP q ASEP a EOS) unless the spec asks for answer-only tokens; vector
// records score the cross-entropy of the true label.
double loss(const TrainedModel& model, const QARecord& record);
double loss(const TrainedModel& model, const VectorRecord& record);
double loss(const TrainedModel& model, const Dataset& dataset,
            std::size_t index);

// Greedy decoding for language models; the returned continuation excludes
// the terminating EOS.
TokenSequence greedy_decode(const TrainedModel& model,
                            const TokenSequence& prompt, std::size_t max_len);

}  // namespace cfi
