#include "cfi/sweep.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cfi/error.hpp"
#include "cfi/hashing.hpp"
#include "cfi/learner.hpp"
#include "cfi/rng.hpp"

namespace fs = std::filesystem;

namespace cfi {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'I', 'L', 'O', 'S', 'S', '1'};
constexpr char kColumnMagic[8] = {'C', 'F', 'I', 'C', 'O', 'L', '1', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& off, const std::string& what) {
  if (off + sizeof(T) > in.size()) fail(what + ": truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

std::string header_bytes(std::size_t n_targets, std::size_t n_models,
                         const SweepProvenance& prov) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, n_targets);
  put<std::uint64_t>(out, n_models);
  put<std::uint64_t>(out, prov.dataset_hash);
  put<std::uint64_t>(out, prov.partition_hash);
  put<std::uint64_t>(out, prov.spec_hash);
  put<std::uint64_t>(out, prov.master_seed);
  return out;
}

struct MetricRow {
  std::uint64_t iteration;
  double value;
};

struct ColumnResult {
  std::uint64_t j = 0;
  std::vector<double> losses;
  std::vector<MetricRow> metrics;
};

std::string column_file_bytes(const ColumnResult& col,
                              const SweepProvenance& prov) {
  std::string out;
  out.append(kColumnMagic, sizeof(kColumnMagic));
  put<std::uint64_t>(out, prov.dataset_hash);
  put<std::uint64_t>(out, prov.partition_hash);
  put<std::uint64_t>(out, prov.spec_hash);
  put<std::uint64_t>(out, prov.master_seed);
  put<std::uint64_t>(out, col.j);
  put<std::uint64_t>(out, col.losses.size());
  for (double v : col.losses) put<double>(out, v);
  put<std::uint64_t>(out, col.metrics.size());
  for (const auto& row : col.metrics) {
    put<std::uint64_t>(out, row.iteration);
    put<double>(out, row.value);
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

bool parse_column_file(const std::string& in, const SweepProvenance& prov,
                       std::size_t n_targets, ColumnResult& col) {
  if (in.size() < sizeof(kColumnMagic) + 8 ||
      std::memcmp(in.data(), kColumnMagic, sizeof(kColumnMagic)) != 0)
    return false;
  const std::uint64_t expected = fnv1a64(in.data(), in.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, in.data() + in.size() - 8, 8);
  if (expected != stored) return false;

  std::size_t off = sizeof(kColumnMagic);
  SweepProvenance p;
  p.dataset_hash = get<std::uint64_t>(in, off, "column");
  p.partition_hash = get<std::uint64_t>(in, off, "column");
  p.spec_hash = get<std::uint64_t>(in, off, "column");
  p.master_seed = get<std::uint64_t>(in, off, "column");
  if (!(p == prov)) return false;
  col.j = get<std::uint64_t>(in, off, "column");
  const std::uint64_t n = get<std::uint64_t>(in, off, "column");
  if (n != n_targets) return false;
  col.losses.resize(n);
  for (auto& v : col.losses) v = get<double>(in, off, "column");
  const std::uint64_t rows = get<std::uint64_t>(in, off, "column");
  col.metrics.resize(rows);
  for (auto& row : col.metrics) {
    row.iteration = get<std::uint64_t>(in, off, "column");
    row.value = get<double>(in, off, "column");
  }
  return true;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail("cannot open '" + tmp + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) fail("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

std::string column_path(const std::string& dir, std::uint64_t j) {
  char name[32];
  std::snprintf(name, sizeof(name), "col_%08llu.bin",
                static_cast<unsigned long long>(j));
  return dir + "/" + name;
}

ColumnResult compute_column(const Dataset& dataset,
                            const PartitionMatrix& partitions,
                            const LearnerSpec& spec, std::uint64_t master_seed,
                            std::size_t j, const std::string& model_dump_dir) {
  ColumnResult col;
  col.j = j;
  const auto subset = partitions.column_subset(j);
  const TrainedModel model =
      train(dataset, subset, spec, derive_seed(master_seed, j), j);
  col.losses.resize(dataset.size());
  for (std::size_t t = 0; t < dataset.size(); ++t)
    col.losses[t] = loss(model, dataset, t);
  const auto& curve = model.training_curve();
  col.metrics.resize(curve.size());
  for (std::size_t it = 0; it < curve.size(); ++it)
    col.metrics[it] = {it, curve[it]};
  if (!model_dump_dir.empty())
    write_file_atomic(model_dump_dir + "/model_" + std::to_string(j) + ".bin",
                      model.serialize());
  return col;
}

void write_metrics_csv(const std::vector<ColumnResult>& columns,
                       const std::string& path) {
  std::vector<const ColumnResult*> order;
  order.reserve(columns.size());
  for (const auto& c : columns) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const ColumnResult* a, const ColumnResult* b) {
              return a->j < b->j;
            });
  std::string out = "model,iteration,loss\n";
  char buf[96];
  for (const auto* c : order)
    for (const auto& row : c->metrics) {
      std::snprintf(buf, sizeof(buf), "%llu,%llu,%.17g\n",
                    static_cast<unsigned long long>(c->j),
                    static_cast<unsigned long long>(row.iteration), row.value);
      out += buf;
    }
  write_file_atomic(path, out);
}

}  // namespace

LossMatrix::LossMatrix(std::size_t n_targets, std::size_t n_models,
                       SweepProvenance provenance)
    : n_targets_(n_targets),
      n_models_(n_models),
      values_(n_targets * n_models, 0.0),
      complete_(n_models, 0),
      prov_(provenance) {
  require(n_targets >= 1 && n_models >= 1, "loss matrix must be non-empty");
}

bool LossMatrix::complete() const {
  return completed_columns() == n_models_;
}

std::size_t LossMatrix::completed_columns() const {
  std::size_t n = 0;
  for (auto c : complete_) n += c;
  return n;
}

void LossMatrix::set_column(std::size_t j, const std::vector<double>& column) {
  require(j < n_models_, "column index out of range");
  require(column.size() == n_targets_, "column length mismatch");
  for (double v : column)
    require(std::isfinite(v), "non-finite loss in column " + std::to_string(j));
  for (std::size_t t = 0; t < n_targets_; ++t)
    values_[t * n_models_ + j] = column[t];
  complete_[j] = 1;
}

std::vector<double> LossMatrix::column(std::size_t j) const {
  require(j < n_models_, "column index out of range");
  std::vector<double> out(n_targets_);
  for (std::size_t t = 0; t < n_targets_; ++t) out[t] = at(t, j);
  return out;
}

std::uint64_t LossMatrix::hash() const {
  Fnv1a64 h;
  h.update_u64(n_targets_);
  h.update_u64(n_models_);
  for (double v : values_) h.update_f64(v);
  return h.digest();
}

std::string loss_matrix_path(const std::string& out_dir) {
  return out_dir + "/losses.bin";
}
std::string loss_journal_path(const std::string& out_dir) {
  return out_dir + "/loss_columns";
}
std::string metrics_path(const std::string& out_dir) {
  return out_dir + "/metrics.csv";
}

void save_loss_matrix(const LossMatrix& losses, const std::string& path) {
  require(losses.complete(), "refusing to save an incomplete loss matrix");
  std::string out =
      header_bytes(losses.n_targets(), losses.n_models(), losses.provenance());
  for (std::size_t j = 0; j < losses.n_models(); ++j) {
    std::string block;
    put<std::uint64_t>(block, j);
    for (std::size_t t = 0; t < losses.n_targets(); ++t)
      put<double>(block, losses.at(t, j));
    put<std::uint64_t>(block, fnv1a64(block));
    out += block;
  }
  write_file_atomic(path, out);
}

LossMatrix load_loss_matrix(const std::string& path) {
  const std::string in = read_file(path);
  std::size_t off = 0;
  if (in.size() < sizeof(kMagic) ||
      std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    fail("'" + path + "' is not a loss matrix file");
  off += sizeof(kMagic);
  if (get<std::uint32_t>(in, off, path) != kVersion)
    fail("loss matrix file '" + path + "': unsupported version");
  SweepProvenance prov;
  const auto n_targets = get<std::uint64_t>(in, off, path);
  const auto n_models = get<std::uint64_t>(in, off, path);
  prov.dataset_hash = get<std::uint64_t>(in, off, path);
  prov.partition_hash = get<std::uint64_t>(in, off, path);
  prov.spec_hash = get<std::uint64_t>(in, off, path);
  prov.master_seed = get<std::uint64_t>(in, off, path);

  LossMatrix m(n_targets, n_models, prov);
  std::vector<double> column(n_targets);
  for (std::size_t b = 0; b < n_models; ++b) {
    const std::size_t block_start = off;
    const auto j = get<std::uint64_t>(in, off, path);
    if (j >= n_models) fail("loss matrix file '" + path + "': bad column index");
    for (auto& v : column) v = get<double>(in, off, path);
    const std::uint64_t expected =
        fnv1a64(in.data() + block_start, off - block_start);
    const auto stored = get<std::uint64_t>(in, off, path);
    if (expected != stored)
      fail("loss matrix file '" + path + "': checksum mismatch in column " +
           std::to_string(j));
    m.set_column(j, column);
  }
  if (off != in.size()) fail("loss matrix file '" + path + "': trailing bytes");
  require(m.complete(), "loss matrix file '" + path + "' is incomplete");
  return m;
}

void write_loss_csv(const LossMatrix& losses, const std::string& path) {
  std::string out = "target_id";
  for (std::size_t j = 0; j < losses.n_models(); ++j)
    out += ",model_" + std::to_string(j);
  out += '\n';
  char buf[40];
  for (std::size_t t = 0; t < losses.n_targets(); ++t) {
    out += std::to_string(t);
    for (std::size_t j = 0; j < losses.n_models(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", losses.at(t, j));
      out += buf;
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

namespace {

SweepProvenance make_provenance(const Dataset& dataset,
                                const PartitionMatrix& partitions,
                                const LearnerSpec& spec,
                                std::uint64_t master_seed) {
  return SweepProvenance{dataset_hash(dataset), partitions.hash(),
                         learner_spec_hash(spec), master_seed};
}

// Shared sweep driver. `parallel` selects the OpenMP kernel or the serial
// reference loop; both commit through the same per-column atomic writes.
LossMatrix sweep_impl(const Dataset& dataset, const PartitionMatrix& partitions,
                      const LearnerSpec& spec, const RunConfig& config,
                      const SweepOptions& options, bool parallel) {
  require(dataset.size() == partitions.n_records(),
          "dataset size does not match partition row count");
  spec.validate();
  const SweepProvenance prov =
      make_provenance(dataset, partitions, spec, config.master_seed);
  const std::size_t n_targets = dataset.size();
  const std::size_t n_models = partitions.n_models();

  fs::create_directories(config.out_dir);
  const std::string final_path = loss_matrix_path(config.out_dir);
  const std::string journal_dir = loss_journal_path(config.out_dir);

  // A finished artifact for the same inputs is reused as-is.
  if (fs::exists(final_path)) {
    try {
      LossMatrix existing = load_loss_matrix(final_path);
      if (existing.provenance() == prov &&
          existing.n_targets() == n_targets &&
          existing.n_models() == n_models)
        return existing;
    } catch (const Error&) {
      // stale or damaged artifact: recompute below
    }
  }

  // Degenerate columns are rejected up front, before any training happens.
  for (std::size_t j = 0; j < n_models; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < n_targets && !any; ++i)
      any = partitions.bit(i, j) != 0;
    if (!any)
      fail("model " + std::to_string(j) +
           ": empty training subset (all-zero partition column); increase M "
           "or reseed");
  }

  fs::create_directories(journal_dir);
  std::string model_dump_dir;
  if (options.dump_models) {
    model_dump_dir = config.out_dir + "/models";
    fs::create_directories(model_dump_dir);
  }

  LossMatrix matrix(n_targets, n_models, prov);
  std::vector<ColumnResult> columns(n_models);
  std::vector<std::uint8_t> have(n_models, 0);

  // Resume: adopt committed columns with matching provenance, drop the rest.
  for (const auto& entry : fs::directory_iterator(journal_dir)) {
    if (!entry.is_regular_file()) continue;
    ColumnResult col;
    if (parse_column_file(read_file(entry.path().string()), prov, n_targets,
                          col) &&
        col.j < n_models && !have[col.j]) {
      matrix.set_column(col.j, col.losses);
      have[col.j] = 1;
      columns[col.j] = std::move(col);
    } else {
      fs::remove(entry.path());
    }
  }

  std::vector<std::size_t> todo;
  for (std::size_t j = 0; j < n_models; ++j)
    if (!have[j]) todo.push_back(j);

  if (parallel) {
    if (options.workers > 0) omp_set_num_threads(options.workers);
    bool failed = false;
    std::string error_message;
    std::size_t committed = 0;
    const long long n_todo = static_cast<long long>(todo.size());
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < n_todo; ++k) {
      bool skip;
#pragma omp atomic read
      skip = failed;
      if (skip) continue;
      const std::size_t j = todo[static_cast<std::size_t>(k)];
      try {
        ColumnResult col = compute_column(dataset, partitions, spec,
                                          config.master_seed, j,
                                          model_dump_dir);
        write_file_atomic(column_path(journal_dir, j),
                          column_file_bytes(col, prov));
        bool abort_now = false;
#pragma omp critical(cfi_sweep_commit)
        {
          matrix.set_column(j, col.losses);
          columns[j] = std::move(col);
          ++committed;
          if (options.abort_after_columns > 0 &&
              committed >= options.abort_after_columns) {
            if (error_message.empty())
              error_message = "sweep aborted by fault-injection hook";
            abort_now = true;
          }
        }
        if (abort_now) {
#pragma omp atomic write
          failed = true;
        }
      } catch (const std::exception& e) {
#pragma omp critical(cfi_sweep_commit)
        {
          if (error_message.empty()) error_message = e.what();
        }
#pragma omp atomic write
        failed = true;
      }
    }
    if (failed) fail(error_message);
  } else {
    std::size_t committed = 0;
    for (std::size_t j : todo) {
      ColumnResult col = compute_column(dataset, partitions, spec,
                                        config.master_seed, j, model_dump_dir);
      write_file_atomic(column_path(journal_dir, j),
                        column_file_bytes(col, prov));
      matrix.set_column(j, col.losses);
      columns[j] = std::move(col);
      ++committed;
      if (options.abort_after_columns > 0 &&
          committed >= options.abort_after_columns)
        fail("sweep aborted by fault-injection hook");
    }
  }

  require(matrix.complete(), "sweep finished with missing columns");
  save_loss_matrix(matrix, final_path);
  write_metrics_csv(columns, metrics_path(config.out_dir));
  fs::remove_all(journal_dir);
  return matrix;
}

}  // namespace

LossMatrix run_sweep(const Dataset& dataset, const PartitionMatrix& partitions,
                     const LearnerSpec& spec, const RunConfig& config,
                     const SweepOptions& options) {
  return sweep_impl(dataset, partitions, spec, config, options, true);
}

LossMatrix run_sweep_serial(const Dataset& dataset,
                            const PartitionMatrix& partitions,
                            const LearnerSpec& spec, const RunConfig& config) {
  return sweep_impl(dataset, partitions, spec, config, SweepOptions{}, false);
}

}  // namespace cfi
