#include "cfi/influence.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cfi/error.hpp"
#include "cfi/hashing.hpp"
#include "cfi/learner.hpp"
#include "cfi/reduce.hpp"

namespace cfi {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'I', 'I', 'N', 'F', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& off, const std::string& path) {
  if (off + sizeof(T) > in.size())
    fail("influence file '" + path + "' truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

void check_rows(const PartitionMatrix& partitions) {
  for (std::size_t i = 0; i < partitions.n_records(); ++i) {
    const std::size_t in_count = partitions.row_in_count(i);
    if (in_count == 0 || in_count == partitions.n_models())
      fail("record " + std::to_string(i) +
           ": one-sided partition row (record is " +
           (in_count == 0 ? "never included" : "always included") +
           "); increase M or reseed");
  }
}

// One target row: per source i, split the target's losses by row i of P and
// difference the two pairwise-summed means.
void fill_row(const LossMatrix& losses, const PartitionMatrix& partitions,
              std::size_t t, std::vector<double>& in_buf,
              std::vector<double>& out_buf, InfluenceMatrix& result) {
  const std::size_t n = partitions.n_records();
  const std::size_t m = partitions.n_models();
  for (std::size_t i = 0; i < n; ++i) {
    in_buf.clear();
    out_buf.clear();
    for (std::size_t j = 0; j < m; ++j) {
      const double v = losses.at(t, j);
      if (partitions.bit(i, j))
        in_buf.push_back(v);
      else
        out_buf.push_back(v);
    }
    const double mean_in =
        pairwise_sum(in_buf) / static_cast<double>(in_buf.size());
    const double mean_out =
        pairwise_sum(out_buf) / static_cast<double>(out_buf.size());
    result.set(t, i, mean_out - mean_in);
  }
}

InfluenceMatrix estimate_impl(const LossMatrix& losses,
                              const PartitionMatrix& partitions,
                              bool parallel) {
  require(losses.n_targets() == partitions.n_records(),
          "loss matrix rows do not match partition rows");
  require(losses.n_models() == partitions.n_models(),
          "loss matrix columns do not match partition columns");
  require(losses.complete(), "loss matrix has missing columns");
  if (losses.provenance().partition_hash != partitions.hash())
    fail("loss matrix was computed against a different partition matrix");
  check_rows(partitions);

  const std::size_t n = partitions.n_records();
  InfluenceMatrix result(n, losses.provenance().dataset_hash,
                         partitions.hash());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t in_count = partitions.row_in_count(i);
    result.set_counts(i, in_count, partitions.n_models() - in_count);
  }

  if (parallel) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel
    {
      std::vector<double> in_buf, out_buf;
      in_buf.reserve(partitions.n_models());
      out_buf.reserve(partitions.n_models());
#pragma omp for schedule(static)
      for (long long t = 0; t < nn; ++t)
        fill_row(losses, partitions, static_cast<std::size_t>(t), in_buf,
                 out_buf, result);
    }
  } else {
    std::vector<double> in_buf, out_buf;
    in_buf.reserve(partitions.n_models());
    out_buf.reserve(partitions.n_models());
    for (std::size_t t = 0; t < n; ++t)
      fill_row(losses, partitions, t, in_buf, out_buf, result);
  }
  return result;
}

}  // namespace

InfluenceMatrix::InfluenceMatrix(std::size_t n, std::uint64_t dataset_hash,
                                 std::uint64_t partition_hash)
    : n_(n),
      values_(n * n, 0.0),
      n_in_(n, 0),
      n_out_(n, 0),
      dataset_hash_(dataset_hash),
      partition_hash_(partition_hash) {
  require(n >= 1, "influence matrix must be non-empty");
}

void InfluenceMatrix::set_counts(std::size_t i, std::uint64_t in,
                                 std::uint64_t out) {
  require(i < n_, "record index out of range");
  n_in_[i] = in;
  n_out_[i] = out;
}

std::uint64_t InfluenceMatrix::hash() const {
  Fnv1a64 h;
  h.update_u64(n_);
  for (double v : values_) h.update_f64(v);
  for (auto v : n_in_) h.update_u64(v);
  for (auto v : n_out_) h.update_u64(v);
  return h.digest();
}

InfluenceMatrix estimate_influence(const LossMatrix& losses,
                                   const PartitionMatrix& partitions) {
  return estimate_impl(losses, partitions, true);
}

InfluenceMatrix estimate_influence_serial(const LossMatrix& losses,
                                          const PartitionMatrix& partitions) {
  return estimate_impl(losses, partitions, false);
}

InfluenceMatrix exact_influence_oracle(const Dataset& dataset,
                                       const LearnerSpec& spec,
                                       std::size_t n_max) {
  require(n_max <= 20, "oracle n_max too large");
  const std::size_t n = dataset.size();
  if (n > n_max)
    fail("oracle supports at most " + std::to_string(n_max) +
         " records, got " + std::to_string(n));
  require(n >= 2, "oracle needs at least 2 records");
  spec.validate();

  // One loss vector per non-empty subset; subset masks are 1..2^n-1.
  const std::size_t n_subsets = (std::size_t{1} << n) - 1;
  std::vector<std::vector<double>> subset_losses(n_subsets);
  const long long nn = static_cast<long long>(n_subsets);
#pragma omp parallel for schedule(dynamic)
  for (long long k = 0; k < nn; ++k) {
    const std::size_t mask = static_cast<std::size_t>(k) + 1;
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < n; ++i)
      if ((mask >> i) & 1) subset.push_back(i);
    const TrainedModel model = train(dataset, subset, spec, 0, mask);
    std::vector<double>& row = subset_losses[static_cast<std::size_t>(k)];
    row.resize(n);
    for (std::size_t t = 0; t < n; ++t) row[t] = loss(model, dataset, t);
  }

  InfluenceMatrix result(n, dataset_hash(dataset), 0);
  const std::uint64_t half = std::uint64_t{1} << (n - 1);
  std::vector<double> in_buf, out_buf;
  in_buf.reserve(n_subsets);
  out_buf.reserve(n_subsets);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      in_buf.clear();
      out_buf.clear();
      for (std::size_t k = 0; k < n_subsets; ++k) {
        const std::size_t mask = k + 1;
        if ((mask >> i) & 1)
          in_buf.push_back(subset_losses[k][t]);
        else
          out_buf.push_back(subset_losses[k][t]);
      }
      const double mean_in =
          pairwise_sum(in_buf) / static_cast<double>(in_buf.size());
      const double mean_out =
          pairwise_sum(out_buf) / static_cast<double>(out_buf.size());
      result.set(t, i, mean_out - mean_in);
      if (t == 0) result.set_counts(i, half, half - 1);
    }
  }
  return result;
}

void save_influence(const InfluenceMatrix& influence, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, influence.size());
  put<std::uint64_t>(out, influence.dataset_hash());
  put<std::uint64_t>(out, influence.partition_hash());
  for (std::size_t i = 0; i < influence.size(); ++i) {
    put<std::uint64_t>(out, influence.n_in(i));
    put<std::uint64_t>(out, influence.n_out(i));
  }
  for (std::size_t t = 0; t < influence.size(); ++t)
    for (std::size_t i = 0; i < influence.size(); ++i)
      put<double>(out, influence.at(t, i));
  put<std::uint64_t>(out, fnv1a64(out));

  const std::string tmp = path + ".tmp";
  std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot open '" + tmp + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f) fail("write failed for '" + tmp + "'");
  f.close();
  std::filesystem::rename(tmp, path);
}

InfluenceMatrix load_influence(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open influence file '" + path + "'");
  std::string in((std::istreambuf_iterator<char>(f)),
                 std::istreambuf_iterator<char>());
  if (in.size() < sizeof(kMagic) + 8 ||
      std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    fail("'" + path + "' is not an influence file");
  const std::uint64_t expected = fnv1a64(in.data(), in.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, in.data() + in.size() - 8, 8);
  if (expected != stored)
    fail("influence file '" + path + "': checksum mismatch");

  std::size_t off = sizeof(kMagic);
  if (get<std::uint32_t>(in, off, path) != kVersion)
    fail("influence file '" + path + "': unsupported version");
  const auto n = get<std::uint64_t>(in, off, path);
  const auto dhash = get<std::uint64_t>(in, off, path);
  const auto phash = get<std::uint64_t>(in, off, path);
  InfluenceMatrix m(n, dhash, phash);
  for (std::size_t i = 0; i < n; ++i) {
    const auto in_count = get<std::uint64_t>(in, off, path);
    const auto out_count = get<std::uint64_t>(in, off, path);
    m.set_counts(i, in_count, out_count);
  }
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < n; ++i)
      m.set(t, i, get<double>(in, off, path));
  return m;
}

void write_influence_csv(const InfluenceMatrix& influence,
                         const std::string& path) {
  std::string out = "target_id,source_id,influence\n";
  char buf[48];
  for (std::size_t t = 0; t < influence.size(); ++t)
    for (std::size_t i = 0; i < influence.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", t, i,
                    influence.at(t, i));
      out += buf;
    }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot open '" + path + "' for writing");
  f << out;
  if (!f) fail("write failed for '" + path + "'");
}

std::string influence_path(const std::string& out_dir) {
  return out_dir + "/influence.bin";
}
std::string influence_oracle_path(const std::string& out_dir) {
  return out_dir + "/influence_oracle.bin";
}

}  // namespace cfi
