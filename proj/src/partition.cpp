#include "cfi/partition.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "cfi/error.hpp"
#include "cfi/hashing.hpp"
#include "cfi/rng.hpp"

namespace cfi {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'I', 'P', 'A', 'R', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

// P(bit = 1) = threshold / 2^32; exact for inclusion_prob = 0.5.
std::uint64_t bernoulli_threshold(double p) {
  const double scaled = p * 4294967296.0;
  std::uint64_t thr = static_cast<std::uint64_t>(std::llround(scaled));
  if (thr < 1) thr = 1;
  if (thr > 0xFFFFFFFFull) thr = 0xFFFFFFFFull;
  return thr;
}

void check_args(std::size_t n_records, std::size_t n_models, double p) {
  require(n_records >= 2, "n_records must be >= 2");
  require(n_models >= 2, "n_models must be >= 2");
  require(p > 0.0 && p < 1.0, "inclusion_prob must be in (0, 1)");
  require(n_records < 0xFFFFFFFFull && n_models < 0xFFFFFFFFull,
          "matrix dimensions out of range");
}

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < bits.size(); ++k)
    if (bits[k]) packed[k >> 3] |= static_cast<std::uint8_t>(1u << (k & 7));
  return packed;
}

template <typename T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& off, const std::string& path) {
  if (off + sizeof(T) > in.size()) fail("partition file '" + path + "' truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

PartitionMatrix::PartitionMatrix(std::size_t n_records, std::size_t n_models,
                                 double inclusion_prob,
                                 std::uint64_t master_seed,
                                 std::vector<std::uint8_t> bits)
    : n_records_(n_records),
      n_models_(n_models),
      inclusion_prob_(inclusion_prob),
      master_seed_(master_seed),
      bits_(std::move(bits)) {
  require(bits_.size() == n_records_ * n_models_,
          "partition bit buffer size mismatch");
}

std::vector<std::size_t> PartitionMatrix::column_subset(std::size_t j) const {
  require(j < n_models_, "model index " + std::to_string(j) +
                             " out of range (M = " + std::to_string(n_models_) +
                             ")");
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < n_records_; ++i)
    if (bit(i, j)) subset.push_back(i);
  return subset;
}

std::size_t PartitionMatrix::row_in_count(std::size_t i) const {
  require(i < n_records_, "record index out of range");
  std::size_t c = 0;
  for (std::size_t j = 0; j < n_models_; ++j) c += bit(i, j);
  return c;
}

std::uint64_t PartitionMatrix::hash() const {
  const auto packed = pack_bits(bits_);
  Fnv1a64 h;
  h.update_u64(n_records_);
  h.update_u64(n_models_);
  h.update_f64(inclusion_prob_);
  h.update_u64(master_seed_);
  h.update(packed.data(), packed.size());
  return h.digest();
}

PartitionMatrix generate_partition_matrix(std::size_t n_records,
                                          std::size_t n_models,
                                          double inclusion_prob,
                                          std::uint64_t master_seed) {
  check_args(n_records, n_models, inclusion_prob);
  const std::uint64_t thr = bernoulli_threshold(inclusion_prob);
  std::vector<std::uint8_t> bits(n_records * n_models);
  const long long total = static_cast<long long>(n_records * n_models);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < total; ++k) {
    const std::uint32_t i = static_cast<std::uint32_t>(k / static_cast<long long>(n_models));
    const std::uint32_t j = static_cast<std::uint32_t>(k % static_cast<long long>(n_models));
    bits[static_cast<std::size_t>(k)] =
        keyed_u32(master_seed, i, j, kTagPartition) < thr ? 1 : 0;
  }
  return PartitionMatrix(n_records, n_models, inclusion_prob, master_seed,
                         std::move(bits));
}

PartitionMatrix generate_partition_matrix_serial(std::size_t n_records,
                                                 std::size_t n_models,
                                                 double inclusion_prob,
                                                 std::uint64_t master_seed) {
  check_args(n_records, n_models, inclusion_prob);
  const std::uint64_t thr = bernoulli_threshold(inclusion_prob);
  std::vector<std::uint8_t> bits(n_records * n_models);
  for (std::size_t i = 0; i < n_records; ++i)
    for (std::size_t j = 0; j < n_models; ++j)
      bits[i * n_models + j] =
          keyed_u32(master_seed, static_cast<std::uint32_t>(i),
                    static_cast<std::uint32_t>(j), kTagPartition) < thr
              ? 1
              : 0;
  return PartitionMatrix(n_records, n_models, inclusion_prob, master_seed,
                         std::move(bits));
}

PartitionMatrix enumeration_partition_matrix(std::size_t n_records) {
  require(n_records >= 2 && n_records <= 20,
          "enumeration partition supports 2..20 records");
  const std::size_t n_models = (std::size_t{1} << n_records) - 1;
  std::vector<std::uint8_t> bits(n_records * n_models);
  for (std::size_t j = 0; j < n_models; ++j) {
    const std::size_t mask = j + 1;
    for (std::size_t i = 0; i < n_records; ++i)
      bits[i * n_models + j] = (mask >> i) & 1;
  }
  return PartitionMatrix(n_records, n_models, 0.5, 0, std::move(bits));
}

PartitionMatrix slice_columns(const PartitionMatrix& p, std::size_t n_models) {
  require(n_models >= 2 && n_models <= p.n_models(),
          "slice_columns: invalid column count");
  std::vector<std::uint8_t> bits(p.n_records() * n_models);
  for (std::size_t i = 0; i < p.n_records(); ++i)
    for (std::size_t j = 0; j < n_models; ++j)
      bits[i * n_models + j] = p.bit(i, j);
  return PartitionMatrix(p.n_records(), n_models, p.inclusion_prob(),
                         p.master_seed(), std::move(bits));
}

void save_partitions(const PartitionMatrix& p, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, p.n_records());
  put<std::uint64_t>(out, p.n_models());
  put<double>(out, p.inclusion_prob());
  put<std::uint64_t>(out, p.master_seed());
  const auto packed = pack_bits(p.bits());
  out.append(reinterpret_cast<const char*>(packed.data()), packed.size());
  put<std::uint64_t>(out, fnv1a64(out));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail("write failed for '" + path + "'");
}

PartitionMatrix load_partitions(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open partition file '" + path + "'");
  std::string in((std::istreambuf_iterator<char>(f)),
                 std::istreambuf_iterator<char>());
  std::size_t off = 0;
  if (in.size() < sizeof(kMagic) ||
      std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    fail("'" + path + "' is not a partition file");
  off += sizeof(kMagic);
  const auto version = get<std::uint32_t>(in, off, path);
  if (version != kVersion)
    fail("partition file '" + path + "': unsupported version");
  const auto n_records = get<std::uint64_t>(in, off, path);
  const auto n_models = get<std::uint64_t>(in, off, path);
  const auto inclusion_prob = get<double>(in, off, path);
  const auto master_seed = get<std::uint64_t>(in, off, path);
  const std::size_t payload = (n_records * n_models + 7) / 8;
  if (off + payload + 8 != in.size())
    fail("partition file '" + path + "' has wrong size");
  const std::uint64_t expected = fnv1a64(in.data(), off + payload);
  std::uint64_t stored;
  std::memcpy(&stored, in.data() + off + payload, 8);
  if (expected != stored)
    fail("partition file '" + path + "': checksum mismatch");

  std::vector<std::uint8_t> bits(n_records * n_models);
  for (std::size_t k = 0; k < bits.size(); ++k)
    bits[k] = (static_cast<std::uint8_t>(in[off + (k >> 3)]) >> (k & 7)) & 1;
  return PartitionMatrix(n_records, n_models, inclusion_prob, master_seed,
                         std::move(bits));
}

}  // namespace cfi
