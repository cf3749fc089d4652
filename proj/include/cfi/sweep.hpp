#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfi/config.hpp"
#include "cfi/dataset.hpp"
#include "cfi/partition.hpp"

namespace cfi {

struct SweepProvenance {
  std::uint64_t dataset_hash = 0;
  std::uint64_t partition_hash = 0;
  std::uint64_t spec_hash = 0;
  std::uint64_t master_seed = 0;

  bool operator==(const SweepProvenance&) const = default;
};

// N_t x M per-(target, model) losses. Columns are committed atomically: a
// column is either fully present or absent, never partial.
class LossMatrix {
 public:
  LossMatrix(std::size_t n_targets, std::size_t n_models,
             SweepProvenance provenance);

  std::size_t n_targets() const { return n_targets_; }
  std::size_t n_models() const { return n_models_; }
  const SweepProvenance& provenance() const { return prov_; }

  double at(std::size_t t, std::size_t j) const {
    return values_[t * n_models_ + j];
  }
  bool column_complete(std::size_t j) const { return complete_[j] != 0; }
  bool complete() const;
  std::size_t completed_columns() const;

  void set_column(std::size_t j, const std::vector<double>& column);
  std::vector<double> column(std::size_t j) const;

  std::uint64_t hash() const;

 private:
  std::size_t n_targets_;
  std::size_t n_models_;
  std::vector<double> values_;  // row-major [t][j]
  std::vector<std::uint8_t> complete_;
  SweepProvenance prov_;
};

struct SweepOptions {
  int workers = 0;           // 0: leave the OpenMP default alone
  bool dump_models = false;  // write <out>/models/model_<j>.bin
  // Fault-injection hook: abort (throw) once this many columns have been
  // committed in this run. 0 disables. Used by the interruption tests.
  std::size_t abort_after_columns = 0;
};

// Artifact paths derived from the run's output directory.
std::string loss_matrix_path(const std::string& out_dir);
std::string loss_journal_path(const std::string& out_dir);
std::string metrics_path(const std::string& out_dir);

// Trains one model per partition column, evaluates it on every record, and
// commits each column durably as it finishes. Restart resumes from the
// journal and skips committed columns; the result is a pure function of
// (dataset, partitions, spec, master_seed), independent of worker count and
// completion order.
LossMatrix run_sweep(const Dataset& dataset, const PartitionMatrix& partitions,
                     const LearnerSpec& spec, const RunConfig& config,
                     const SweepOptions& options = {});

// Serial reference; byte-identical artifacts to run_sweep.
LossMatrix run_sweep_serial(const Dataset& dataset,
                            const PartitionMatrix& partitions,
                            const LearnerSpec& spec, const RunConfig& config);

// Canonical serialization: header followed by checksummed column blocks in
// ascending column order.
void save_loss_matrix(const LossMatrix& losses, const std::string& path);
LossMatrix load_loss_matrix(const std::string& path);

// CSV export: target_id, model_0..model_{M-1}.
void write_loss_csv(const LossMatrix& losses, const std::string& path);

}  // namespace cfi
