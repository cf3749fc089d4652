#pragma once

#include <cstdint>

#include "cfi/dataset.hpp"

namespace cfi {

// Seeded QA corpus whose answers share no n-gram of the given order with
// each other (rejection sampled), so unique records behave as unique under
// an order-n learner. Tokens are drawn from the non-reserved vocabulary.
Dataset generate_qa_dataset(std::size_t n_records, std::uint32_t vocab_size,
                            std::size_t q_len, std::size_t a_len,
                            std::uint64_t seed,
                            std::uint32_t overlap_order = 2);

// Seeded Gaussian class clusters, linearly separable at the default spread.
Dataset generate_vector_dataset(std::size_t n_records, std::size_t dim,
                                std::uint32_t n_classes, std::uint64_t seed,
                                double cluster_radius = 6.0);

}  // namespace cfi
