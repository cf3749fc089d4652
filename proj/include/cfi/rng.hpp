#pragma once

#include <array>
#include <cstdint>

namespace cfi {

// Domain-separation tags. Every consumer of the counter-based generator keys
// its draws with one of these so streams never collide across modules.
enum RngTag : std::uint32_t {
  kTagPartition = 1,
  kTagModelSeed = 2,
  kTagCraft = 3,
  kTagSynthetic = 4,
  kTagVectorDup = 5,
};

// Philox4x32-10 block function (Salmon et al., SC 2011). Pure: the output is
// a function of (counter, key) only, which is what makes per-cell keyed
// generation reproducible at any parallelism.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Single 32-bit draw keyed by (seed, a, b, tag).
std::uint32_t keyed_u32(std::uint64_t seed, std::uint32_t a, std::uint32_t b,
                        std::uint32_t tag);

// 64-bit seed derivation, e.g. the per-model seed hash(master_seed, j).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index,
                          std::uint32_t tag = kTagModelSeed);

// Sequential stream over Philox blocks. Deterministic in (seed, tag); used
// where a module needs many draws rather than one keyed cell.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint32_t tag = 0);

  std::uint64_t next_u64();
  // Unbiased draw in [0, bound); bound >= 1. Mask rejection, no floating
  // point, so identical on every platform.
  std::uint64_t uniform_u64(std::uint64_t bound);
  // [0, 1) with 53 random bits.
  double uniform_real();
  // Standard normal via Box-Muller.
  double gaussian();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t tag_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  unsigned pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cfi
