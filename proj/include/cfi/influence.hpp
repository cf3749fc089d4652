#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfi/config.hpp"
#include "cfi/dataset.hpp"
#include "cfi/partition.hpp"
#include "cfi/sweep.hpp"

namespace cfi {

// N_t x N_t counterfactual influence matrix. value(t, i) is the influence of
// training on record i on the loss of target t: mean loss over models that
// exclude i minus mean loss over models that include i, so positive values
// mean i helps the prediction on t. The diagonal is self-influence.
class InfluenceMatrix {
 public:
  InfluenceMatrix(std::size_t n, std::uint64_t dataset_hash,
                  std::uint64_t partition_hash);

  std::size_t size() const { return n_; }
  double at(std::size_t t, std::size_t i) const { return values_[t * n_ + i]; }
  void set(std::size_t t, std::size_t i, double v) { values_[t * n_ + i] = v; }

  // Models including / excluding record i; both >= 1 and summing to M.
  std::uint64_t n_in(std::size_t i) const { return n_in_[i]; }
  std::uint64_t n_out(std::size_t i) const { return n_out_[i]; }
  void set_counts(std::size_t i, std::uint64_t in, std::uint64_t out);

  std::uint64_t dataset_hash() const { return dataset_hash_; }
  std::uint64_t partition_hash() const { return partition_hash_; }

  std::uint64_t hash() const;

 private:
  std::size_t n_;
  std::vector<double> values_;  // row-major [t][i]
  std::vector<std::uint64_t> n_in_, n_out_;
  std::uint64_t dataset_hash_;
  std::uint64_t partition_hash_;
};

// Empirical estimator over the model pool. Every row of P must have at
// least one included and one excluded model. Accumulation uses fixed-shape
// pairwise summation over ascending model index, so the result is identical
// at any parallelism.
InfluenceMatrix estimate_influence(const LossMatrix& losses,
                                   const PartitionMatrix& partitions);

// Serial reference; bitwise identical to estimate_influence.
InfluenceMatrix estimate_influence_serial(const LossMatrix& losses,
                                          const PartitionMatrix& partitions);

// Exact influence under Bernoulli(0.5) inclusion conditioned on a non-empty
// training set: trains one model per non-empty subset of the dataset. The
// in-expectation for record i averages the 2^(N-1) subsets containing i, the
// out-expectation the 2^(N-1)-1 non-empty subsets avoiding it.
InfluenceMatrix exact_influence_oracle(const Dataset& dataset,
                                       const LearnerSpec& spec,
                                       std::size_t n_max = 12);

void save_influence(const InfluenceMatrix& influence, const std::string& path);
InfluenceMatrix load_influence(const std::string& path);

// CSV export: target_id, source_id, influence.
void write_influence_csv(const InfluenceMatrix& influence,
                         const std::string& path);

std::string influence_path(const std::string& out_dir);
std::string influence_oracle_path(const std::string& out_dir);

}  // namespace cfi
