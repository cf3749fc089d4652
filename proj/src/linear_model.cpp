#include "cfi/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cfi/error.hpp"

namespace cfi {

namespace {

// log(sum exp(z)) with the max subtracted; returns the log-partition.
double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

LinearClassifier::LinearClassifier(std::size_t dim, std::uint32_t n_classes,
                                   double learning_rate,
                                   std::uint32_t iterations, double l2)
    : dim_(dim),
      n_classes_(n_classes),
      learning_rate_(learning_rate),
      iterations_(iterations),
      l2_(l2),
      w_(static_cast<std::size_t>(n_classes) * dim, 0.0),
      b_(n_classes, 0.0) {
  require(dim >= 1, "feature dimension must be >= 1");
  require(n_classes >= 2, "classifier needs >= 2 classes");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(iterations >= 1, "iteration count must be >= 1");
}

std::vector<double> LinearClassifier::logits(
    std::span<const double> features) const {
  require(features.size() == dim_, "feature dimension mismatch");
  std::vector<double> z(n_classes_, 0.0);
  for (std::uint32_t c = 0; c < n_classes_; ++c) {
    double acc = b_[c];
    const double* row = w_.data() + static_cast<std::size_t>(c) * dim_;
    for (std::size_t k = 0; k < dim_; ++k) acc += row[k] * features[k];
    z[c] = acc;
  }
  return z;
}

double LinearClassifier::nll(const VectorRecord& r) const {
  require(r.label < n_classes_, "label out of range");
  const auto z = logits(r.features);
  return log_sum_exp(z) - z[r.label];
}

double LinearClassifier::objective(
    const Dataset& data, std::span<const std::size_t> included) const {
  double ce = 0.0;
  for (std::size_t idx : included) ce += nll(data.vector_record(idx));
  ce /= static_cast<double>(included.size());
  double reg = 0.0;
  for (double w : w_) reg += w * w;
  return ce + 0.5 * l2_ * reg;
}

std::vector<double> LinearClassifier::fit(
    const Dataset& data, std::span<const std::size_t> included) {
  require(!included.empty(), "cannot fit on an empty subset");
  const double inv_n = 1.0 / static_cast<double>(included.size());
  std::vector<double> gw(w_.size());
  std::vector<double> gb(b_.size());
  std::vector<double> per_iter;
  per_iter.reserve(iterations_);

  for (std::uint32_t iter = 0; iter < iterations_; ++iter) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    // Fixed accumulation order over `included` keeps training bitwise
    // reproducible for a given subset.
    for (std::size_t idx : included) {
      const VectorRecord& r = data.vector_record(idx);
      auto z = logits(r.features);
      const double lse = log_sum_exp(z);
      for (std::uint32_t c = 0; c < n_classes_; ++c) {
        const double p = std::exp(z[c] - lse);
        const double g = p - (c == r.label ? 1.0 : 0.0);
        double* grow = gw.data() + static_cast<std::size_t>(c) * dim_;
        for (std::size_t k = 0; k < dim_; ++k) grow[k] += g * r.features[k];
        gb[c] += g;
      }
    }
    for (std::size_t k = 0; k < w_.size(); ++k)
      w_[k] -= learning_rate_ * (gw[k] * inv_n + l2_ * w_[k]);
    for (std::size_t c = 0; c < b_.size(); ++c)
      b_[c] -= learning_rate_ * gb[c] * inv_n;
    per_iter.push_back(objective(data, included));
  }
  return per_iter;
}

std::string LinearClassifier::serialize() const {
  std::string out;
  out.append("CFILIN1\0", 8);
  auto put_u64 = [&out](std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
  };
  put_u64(dim_);
  put_u64(n_classes_);
  auto put_f64 = [&out](double v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
  };
  for (double w : w_) put_f64(w);
  for (double b : b_) put_f64(b);
  return out;
}

}  // namespace cfi
