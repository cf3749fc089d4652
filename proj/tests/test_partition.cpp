#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "cfi/error.hpp"
#include "cfi/partition.hpp"
#include "test_util.hpp"

using namespace cfi;
using cfitest::TempDir;

TEST_CASE("generation is deterministic and matches the serial reference") {
  const auto a = generate_partition_matrix(17, 33, 0.5, 42);
  const auto b = generate_partition_matrix(17, 33, 0.5, 42);
  const auto c = generate_partition_matrix_serial(17, 33, 0.5, 42);
  CHECK(a.bits() == b.bits());
  CHECK(a.bits() == c.bits());
  const auto d = generate_partition_matrix(17, 33, 0.5, 43);
  CHECK(a.bits() != d.bits());
}

TEST_CASE("row sums concentrate near M/2 across 100 seeds") {
  // Chernoff puts each row sum of Bernoulli(0.5) over M=1000 in [400, 600]
  // except with probability < 1e-18; check empirically over many rows.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = generate_partition_matrix(15, 1000, 0.5, seed);
    for (std::size_t i = 0; i < p.n_records(); ++i) {
      const std::size_t s = p.row_in_count(i);
      CHECK(s >= 400);
      CHECK(s <= 600);
    }
  }
}

TEST_CASE("overall bit mean is near the inclusion probability") {
  const auto p = generate_partition_matrix(1000, 1000, 0.5, 7);
  std::size_t ones = 0;
  for (auto b : p.bits()) ones += b;
  const double mean = static_cast<double>(ones) / (1000.0 * 1000.0);
  CHECK(mean >= 0.49);
  CHECK(mean <= 0.51);
}

TEST_CASE("distinct rows are empirically uncorrelated") {
  const auto p = generate_partition_matrix(6, 10000, 0.5, 99);
  for (std::size_t a = 0; a < p.n_records(); ++a) {
    for (std::size_t b = a + 1; b < p.n_records(); ++b) {
      double corr = 0.0;
      for (std::size_t j = 0; j < p.n_models(); ++j)
        corr += (2.0 * p.bit(a, j) - 1.0) * (2.0 * p.bit(b, j) - 1.0);
      corr /= static_cast<double>(p.n_models());
      CHECK(std::abs(corr) <= 0.05);
    }
  }
}

TEST_CASE("column_subset returns ascending included indices") {
  // 3x4 hand matrix via the constructor
  PartitionMatrix p(3, 4, 0.5, 0,
                    {1, 0, 0, 1,  //
                     0, 0, 1, 1,  //
                     1, 0, 1, 0});
  CHECK(p.column_subset(0) == std::vector<std::size_t>{0, 2});
  CHECK(p.column_subset(1).empty());
  CHECK(p.column_subset(2) == std::vector<std::size_t>{1, 2});
  CHECK(p.column_subset(3) == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(p.column_subset(4), Error);
}

TEST_CASE("average column size approaches N/2 at p=0.5") {
  const auto p = generate_partition_matrix(100, 2000, 0.5, 5);
  double total = 0.0;
  for (std::size_t j = 0; j < p.n_models(); ++j)
    total += static_cast<double>(p.column_subset(j).size());
  const double mean = total / static_cast<double>(p.n_models());
  CHECK(mean > 47.0);
  CHECK(mean < 53.0);
}

TEST_CASE("first columns of a wider pool equal the narrower pool") {
  const auto wide = generate_partition_matrix(20, 64, 0.5, 11);
  const auto narrow = generate_partition_matrix(20, 16, 0.5, 11);
  CHECK(slice_columns(wide, 16).bits() == narrow.bits());
}

TEST_CASE("invalid arguments are rejected") {
  CHECK_THROWS_AS(generate_partition_matrix(1, 4, 0.5, 0), Error);
  CHECK_THROWS_AS(generate_partition_matrix(4, 1, 0.5, 0), Error);
  CHECK_THROWS_AS(generate_partition_matrix(4, 4, 0.0, 0), Error);
  CHECK_THROWS_AS(generate_partition_matrix(4, 4, 1.0, 0), Error);
}

TEST_CASE("partition files round trip") {
  TempDir dir("partition_io");
  const auto p = generate_partition_matrix(13, 29, 0.25, 1234);
  const std::string path = dir.file("p.bin");
  save_partitions(p, path);
  const auto back = load_partitions(path);
  CHECK(back.bits() == p.bits());
  CHECK(back.n_records() == 13);
  CHECK(back.n_models() == 29);
  CHECK(back.inclusion_prob() == 0.25);
  CHECK(back.master_seed() == 1234);
  CHECK(back.hash() == p.hash());
}

TEST_CASE("corrupted partition files fail the checksum") {
  TempDir dir("partition_corrupt");
  const auto p = generate_partition_matrix(13, 29, 0.5, 77);
  const std::string path = dir.file("p.bin");
  save_partitions(p, path);
  std::string bytes = cfitest::slurp(path);
  bytes[bytes.size() / 2] ^= 0x40;
  cfitest::spit(path, bytes);
  CHECK_THROWS_WITH_AS(load_partitions(path),
                       doctest::Contains("checksum mismatch"), Error);
}

TEST_CASE("partition file bytes are a stable format") {
  // Golden bytes: the generator is pure integer math and the format is
  // little-endian, so this exact file must come out of every build on every
  // platform. A change here is a format or RNG break.
  TempDir dir("partition_golden");
  const auto p = generate_partition_matrix(2, 8, 0.5, 1);
  const std::string path = dir.file("p.bin");
  save_partitions(p, path);
  const std::string bytes = cfitest::slurp(path);
  CHECK(bytes.size() == 8 + 4 + 8 + 8 + 8 + 8 + 2 + 8);
  CHECK(bytes.substr(0, 8) == "CFIPART1");

  static const char kGoldenHex[] =
      "4346495041525431010000000200000000000000080000000000000000000000"
      "0000e03f01000000000000007f01ca26824d892d23ae";
  std::string hex;
  for (unsigned char c : bytes) {
    char b[3];
    std::snprintf(b, sizeof(b), "%02x", c);
    hex += b;
  }
  CHECK(hex == kGoldenHex);

  const auto back = load_partitions(path);
  CHECK(back.bits() == p.bits());
}

TEST_CASE("enumeration matrix lists every non-empty subset once") {
  const auto p = enumeration_partition_matrix(3);
  CHECK(p.n_models() == 7);
  std::set<std::vector<std::size_t>> subsets;
  for (std::size_t j = 0; j < 7; ++j) subsets.insert(p.column_subset(j));
  CHECK(subsets.size() == 7);
  for (const auto& s : subsets) CHECK(!s.empty());
  // each record is in exactly 2^(n-1) subsets
  for (std::size_t i = 0; i < 3; ++i) CHECK(p.row_in_count(i) == 4);
}
