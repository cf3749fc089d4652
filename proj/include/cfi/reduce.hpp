#pragma once

#include <cstddef>
#include <span>

namespace cfi {

// Pairwise (tree) summation with a tree shape that depends only on the input
// length. Every caller summing the same values in the same order gets the
// same bits, independent of threading or call context.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace cfi
