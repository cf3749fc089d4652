#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cfi {

// N_t x M binary inclusion matrix. bit(i, j) == 1 means record i is in the
// training subset of model j. Fully determined by (master_seed, n_records,
// n_models, inclusion_prob); immutable after creation.
class PartitionMatrix {
 public:
  PartitionMatrix(std::size_t n_records, std::size_t n_models,
                  double inclusion_prob, std::uint64_t master_seed,
                  std::vector<std::uint8_t> bits);

  std::size_t n_records() const { return n_records_; }
  std::size_t n_models() const { return n_models_; }
  double inclusion_prob() const { return inclusion_prob_; }
  std::uint64_t master_seed() const { return master_seed_; }

  std::uint8_t bit(std::size_t i, std::size_t j) const {
    return bits_[i * n_models_ + j];
  }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  // Ascending record indices of {i : p_ij = 1}.
  std::vector<std::size_t> column_subset(std::size_t j) const;
  // Number of models including record i.
  std::size_t row_in_count(std::size_t i) const;

  std::uint64_t hash() const;

 private:
  std::size_t n_records_;
  std::size_t n_models_;
  double inclusion_prob_;
  std::uint64_t master_seed_;
  std::vector<std::uint8_t> bits_;  // row-major, one byte per cell
};

// Each cell is an independent Bernoulli(inclusion_prob) draw from a
// counter-based generator keyed by (master_seed, i, j): the matrix does not
// depend on generation order, and the first m columns of a wider matrix
// equal the m-column matrix for the same seed.
PartitionMatrix generate_partition_matrix(std::size_t n_records,
                                          std::size_t n_models,
                                          double inclusion_prob,
                                          std::uint64_t master_seed);

// Serial reference; must match generate_partition_matrix bit for bit.
PartitionMatrix generate_partition_matrix_serial(std::size_t n_records,
                                                 std::size_t n_models,
                                                 double inclusion_prob,
                                                 std::uint64_t master_seed);

// Columns enumerate every non-empty subset of {0..n_records-1} exactly once
// (M = 2^n - 1, column j is the bitmask j+1). Feeding the resulting losses
// to estimate_influence reproduces the exact oracle.
PartitionMatrix enumeration_partition_matrix(std::size_t n_records);

// First n_models columns; equals generation at the smaller M.
PartitionMatrix slice_columns(const PartitionMatrix& p, std::size_t n_models);

void save_partitions(const PartitionMatrix& p, const std::string& path);
PartitionMatrix load_partitions(const std::string& path);

}  // namespace cfi
