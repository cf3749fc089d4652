#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfi/dataset.hpp"

namespace cfi {

// Multinomial logistic regression trained by full-batch gradient descent
// from zero initialization: a pure function of (samples, hyperparameters),
// no randomness anywhere.
class LinearClassifier {
 public:
  LinearClassifier(std::size_t dim, std::uint32_t n_classes,
                   double learning_rate, std::uint32_t iterations, double l2);

  // Fits on the given records; returns the regularized objective after each
  // iteration (one entry per iteration).
  std::vector<double> fit(const Dataset& data,
                          std::span<const std::size_t> included);

  // Cross-entropy of the true label, natural log.
  double nll(const VectorRecord& r) const;

  std::vector<double> logits(std::span<const double> features) const;

  std::string serialize() const;

  std::size_t dim() const { return dim_; }
  std::uint32_t n_classes() const { return n_classes_; }

 private:
  double objective(const Dataset& data,
                   std::span<const std::size_t> included) const;

  std::size_t dim_;
  std::uint32_t n_classes_;
  double learning_rate_;
  std::uint32_t iterations_;
  double l2_;
  std::vector<double> w_;  // n_classes x dim, row-major
  std::vector<double> b_;  // n_classes
};

}  // namespace cfi
