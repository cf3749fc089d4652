#include "cfi/learner.hpp"

#include "cfi/error.hpp"
#include "cfi/reduce.hpp"

namespace cfi {

Modality TrainedModel::modality() const {
  return lm_ ? Modality::kQa : Modality::kVector;
}

bool TrainedModel::is_language_model() const { return lm_ != nullptr; }

const NgramModel& TrainedModel::lm() const {
  require(lm_ != nullptr, "not a language model");
  return *lm_;
}

const LinearClassifier& TrainedModel::classifier() const {
  require(clf_ != nullptr, "not a classifier");
  return *clf_;
}

std::string TrainedModel::serialize() const {
  return lm_ ? lm_->serialize() : clf_->serialize();
}

TrainedModel train(const Dataset& dataset,
                   std::span<const std::size_t> included,
                   const LearnerSpec& spec, std::uint64_t model_seed,
                   std::uint64_t model_index) {
  spec.validate();
  require(!included.empty(), "model " + std::to_string(model_index) +
                                 ": empty training subset");
  for (std::size_t idx : included)
    require(idx < dataset.size(), "training index out of range");

  TrainedModel m;
  m.spec_ = spec;
  m.model_index_ = model_index;
  m.model_seed_ = model_seed;

  if (spec.kind == LearnerSpec::Kind::kNgramLm) {
    require(dataset.modality() == Modality::kQa,
            "ngram_lm requires a QA dataset");
    auto lm = std::make_shared<NgramModel>(spec.ngram_order, spec.add_k,
                                           dataset.vocab_size());
    for (std::size_t idx : included) {
      const QARecord& r = dataset.qa_record(idx);
      lm->add_sequence(render_training_tokens(r.question.tokens,
                                              r.answer.tokens));
    }
    // Closed-form fit: log the mean training NLL as the single curve entry.
    std::vector<double> nlls;
    nlls.reserve(included.size());
    for (std::size_t idx : included) {
      const QARecord& r = dataset.qa_record(idx);
      nlls.push_back(lm->sequence_nll(
          render_training_tokens(r.question.tokens, r.answer.tokens)));
    }
    m.curve_ = {pairwise_sum(nlls) / static_cast<double>(nlls.size())};
    m.lm_ = std::move(lm);
  } else {
    require(dataset.modality() == Modality::kVector,
            "linear_classifier requires a vector dataset");
    auto clf = std::make_shared<LinearClassifier>(
        dataset.feature_dim(), dataset.n_classes(), spec.lc_learning_rate,
        spec.lc_iterations, spec.lc_l2);
    m.curve_ = clf->fit(dataset, included);
    m.clf_ = std::move(clf);
  }
  return m;
}

double loss(const TrainedModel& model, const QARecord& record) {
  require(model.is_language_model(),
          "modality mismatch: QA record scored against a classifier");
  const auto tokens =
      render_training_tokens(record.question.tokens, record.answer.tokens);
  std::size_t from = 0;
  if (model.spec().loss_tokens == LearnerSpec::LossTokens::kAnswerOnly)
    from = record.question.size() + 2;  // skip QSEP, question, ASEP
  return model.lm().sequence_nll(tokens, from);
}

double loss(const TrainedModel& model, const VectorRecord& record) {
  require(!model.is_language_model(),
          "modality mismatch: vector record scored against a language model");
  return model.classifier().nll(record);
}

double loss(const TrainedModel& model, const Dataset& dataset,
            std::size_t index) {
  return dataset.modality() == Modality::kQa
             ? loss(model, dataset.qa_record(index))
             : loss(model, dataset.vector_record(index));
}

TokenSequence greedy_decode(const TrainedModel& model,
                            const TokenSequence& prompt, std::size_t max_len) {
  require(model.is_language_model(),
          "greedy_decode requires a language model");
  return TokenSequence(model.lm().greedy_continue(prompt.tokens, max_len));
}

}  // namespace cfi
