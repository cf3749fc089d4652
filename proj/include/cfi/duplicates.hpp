#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfi/dataset.hpp"
#include "cfi/influence.hpp"
#include "cfi/stats.hpp"

namespace cfi {

// Token-level Hamming distance on equal-length sequences; a crafted
// near-duplicate sits at 0 < d < epsilon from its source.
struct NearDuplicatePolicy {
  std::uint32_t epsilon = 2;

  static std::optional<std::size_t> distance(const TokenSequence& a,
                                             const TokenSequence& b);
  bool qualifies(const TokenSequence& source,
                 const TokenSequence& candidate) const;
};

struct DuplicateGroup {
  // member_ids[0] is the unmodified source record.
  std::vector<std::uint64_t> member_ids;
};

struct DuplicateGroupMap {
  std::vector<DuplicateGroup> groups;
  std::uint32_t n_dup = 0;
  std::uint64_t crafting_seed = 0;

  std::optional<std::size_t> group_of(std::uint64_t record_id) const;
  bool same_group(std::uint64_t a, std::uint64_t b) const;
};

// A_replace: n_dup records sharing the question; the first is the source
// verbatim, each of the others has exactly one answer token replaced by a
// different one, all answers pairwise distinct. Deterministic in seed.
std::vector<QARecord> craft_near_duplicates(const QARecord& record,
                                            std::uint32_t n_dup,
                                            std::uint32_t vocab_size,
                                            std::uint64_t seed);

// Vector analog: one coordinate perturbed by a seeded draw of the given
// scale, so the classification path is testable synthetically.
VectorRecord craft_vector_duplicate(const VectorRecord& record,
                                    std::uint64_t seed, double scale);

// D_t assembly: unique records first (byte-for-byte), then n_dup crafted
// members per source, all with fresh contiguous record ids.
std::pair<Dataset, DuplicateGroupMap> build_target_dataset(
    const Dataset& unique, const std::vector<QARecord>& dup_sources,
    std::uint32_t n_dup, std::uint64_t seed);

std::pair<Dataset, DuplicateGroupMap> build_target_dataset_vectors(
    const Dataset& unique, const std::vector<VectorRecord>& dup_sources,
    std::uint32_t n_dup, std::uint64_t seed, double perturb_scale);

struct DuplicateCandidate {
  std::size_t target_id = 0;
  std::size_t suspected_source = 0;  // most influential non-self sample
  double im = 0.0;                   // +inf when the margin is dominant
  double self_influence = 0.0;
};

// Appendix-D style surfacing: among targets whose self-influence exceeds the
// median, the smallest Top-1 Influence Margins point at near-duplicates.
std::vector<DuplicateCandidate> surface_duplicates(
    std::span<const TargetSummary> summaries, const InfluenceMatrix& influence,
    std::size_t k, std::vector<std::string>* warnings = nullptr);

void save_group_map(const DuplicateGroupMap& groups, const std::string& path);
DuplicateGroupMap load_group_map(const std::string& path);

std::string group_map_path(const std::string& out_dir);

}  // namespace cfi
