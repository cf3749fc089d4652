#include "cfi/duplicates.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "cfi/error.hpp"
#include "cfi/rng.hpp"

namespace cfi {

std::optional<std::size_t> NearDuplicatePolicy::distance(
    const TokenSequence& a, const TokenSequence& b) {
  if (a.size() != b.size()) return std::nullopt;
  std::size_t d = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.tokens[k] != b.tokens[k]) ++d;
  return d;
}

bool NearDuplicatePolicy::qualifies(const TokenSequence& source,
                                    const TokenSequence& candidate) const {
  const auto d = distance(source, candidate);
  return d.has_value() && *d > 0 && *d < epsilon;
}

std::optional<std::size_t> DuplicateGroupMap::group_of(
    std::uint64_t record_id) const {
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::uint64_t id : groups[g].member_ids)
      if (id == record_id) return g;
  return std::nullopt;
}

bool DuplicateGroupMap::same_group(std::uint64_t a, std::uint64_t b) const {
  const auto ga = group_of(a);
  return ga.has_value() && ga == group_of(b);
}

std::vector<QARecord> craft_near_duplicates(const QARecord& record,
                                            std::uint32_t n_dup,
                                            std::uint32_t vocab_size,
                                            std::uint64_t seed) {
  require(n_dup >= 1, "n_dup must be >= 1");
  require(vocab_size >= 2, "vocab_size must be >= 2");
  require(!record.answer.empty(), "answer must be non-empty");
  const std::size_t a_len = record.answer.size();
  // Distinct one-token variants available for this answer.
  const std::uint64_t capacity =
      static_cast<std::uint64_t>(a_len) * (vocab_size - 1);
  if (n_dup - 1 > capacity)
    fail("vocabulary too small to craft " + std::to_string(n_dup - 1) +
         " distinct near-duplicates of a length-" + std::to_string(a_len) +
         " answer");

  std::vector<QARecord> out;
  out.reserve(n_dup);
  out.push_back(record);

  RandomStream rng(seed, kTagCraft);
  std::vector<TokenSequence> answers = {record.answer};
  while (out.size() < n_dup) {
    const std::size_t pos = rng.uniform_u64(a_len);
    const TokenId original = record.answer.tokens[pos];
    // Draw from the vocabulary minus the original token.
    TokenId replacement =
        static_cast<TokenId>(rng.uniform_u64(vocab_size - 1));
    if (replacement >= original) ++replacement;

    TokenSequence answer = record.answer;
    answer.tokens[pos] = replacement;
    if (std::find(answers.begin(), answers.end(), answer) != answers.end())
      continue;  // resample until pairwise distinct
    answers.push_back(answer);
    QARecord dup;
    dup.record_id = record.record_id;  // re-assigned by build_target_dataset
    dup.question = record.question;
    dup.answer = std::move(answer);
    out.push_back(std::move(dup));
  }
  return out;
}

VectorRecord craft_vector_duplicate(const VectorRecord& record,
                                    std::uint64_t seed, double scale) {
  require(!record.features.empty(), "empty feature vector");
  require(scale > 0.0, "perturbation scale must be positive");
  RandomStream rng(seed, kTagVectorDup);
  VectorRecord out = record;
  const std::size_t pos = rng.uniform_u64(record.features.size());
  double delta = 0.0;
  while (delta == 0.0) delta = scale * rng.gaussian();
  out.features[pos] += delta;
  return out;
}

namespace {

template <typename Record>
void check_disjoint_ids(const std::vector<Record>& uniques,
                        const std::vector<Record>& sources) {
  std::unordered_set<std::uint64_t> ids;
  for (const auto& r : uniques) ids.insert(r.record_id);
  for (const auto& r : sources)
    if (ids.count(r.record_id))
      fail("duplicate source record_id " + std::to_string(r.record_id) +
           " collides with a unique record");
}

}  // namespace

std::pair<Dataset, DuplicateGroupMap> build_target_dataset(
    const Dataset& unique, const std::vector<QARecord>& dup_sources,
    std::uint32_t n_dup, std::uint64_t seed) {
  require(unique.modality() == Modality::kQa,
          "build_target_dataset expects a QA dataset");
  require(n_dup >= 1, "n_dup must be >= 1");
  check_disjoint_ids(unique.qa_records(), dup_sources);

  std::vector<QARecord> records;
  records.reserve(unique.size() + dup_sources.size() * n_dup);
  std::uint64_t next_id = 0;
  for (const auto& r : unique.qa_records()) {
    QARecord copy = r;
    copy.record_id = next_id++;
    records.push_back(std::move(copy));
  }

  DuplicateGroupMap map;
  map.n_dup = n_dup;
  map.crafting_seed = seed;
  for (std::size_t g = 0; g < dup_sources.size(); ++g) {
    auto members = craft_near_duplicates(dup_sources[g], n_dup,
                                         unique.vocab_size(),
                                         derive_seed(seed, g, kTagCraft));
    DuplicateGroup group;
    for (auto& member : members) {
      member.record_id = next_id++;
      group.member_ids.push_back(member.record_id);
      records.push_back(std::move(member));
    }
    map.groups.push_back(std::move(group));
  }
  return {Dataset::qa(unique.vocab_size(), std::move(records)),
          std::move(map)};
}

std::pair<Dataset, DuplicateGroupMap> build_target_dataset_vectors(
    const Dataset& unique, const std::vector<VectorRecord>& dup_sources,
    std::uint32_t n_dup, std::uint64_t seed, double perturb_scale) {
  require(unique.modality() == Modality::kVector,
          "build_target_dataset_vectors expects a vector dataset");
  require(n_dup >= 1, "n_dup must be >= 1");
  check_disjoint_ids(unique.vector_records(), dup_sources);

  std::vector<VectorRecord> records;
  records.reserve(unique.size() + dup_sources.size() * n_dup);
  std::uint64_t next_id = 0;
  for (const auto& r : unique.vector_records()) {
    VectorRecord copy = r;
    copy.record_id = next_id++;
    records.push_back(std::move(copy));
  }

  DuplicateGroupMap map;
  map.n_dup = n_dup;
  map.crafting_seed = seed;
  for (std::size_t g = 0; g < dup_sources.size(); ++g) {
    DuplicateGroup group;
    VectorRecord source = dup_sources[g];
    source.record_id = next_id++;
    group.member_ids.push_back(source.record_id);
    records.push_back(std::move(source));
    for (std::uint32_t k = 1; k < n_dup; ++k) {
      VectorRecord dup = craft_vector_duplicate(
          dup_sources[g], derive_seed(seed, g * n_dup + k, kTagVectorDup),
          perturb_scale);
      dup.record_id = next_id++;
      group.member_ids.push_back(dup.record_id);
      records.push_back(std::move(dup));
    }
    map.groups.push_back(std::move(group));
  }
  return {Dataset::vectors(unique.n_classes(), std::move(records)),
          std::move(map)};
}

std::vector<DuplicateCandidate> surface_duplicates(
    std::span<const TargetSummary> summaries, const InfluenceMatrix& influence,
    std::size_t k, std::vector<std::string>* warnings) {
  require(summaries.size() == influence.size(),
          "summaries do not match the influence matrix");
  if (k == 0) return {};

  std::vector<double> selfs;
  selfs.reserve(summaries.size());
  for (const auto& s : summaries) selfs.push_back(s.self_influence);
  const double med = median(selfs);

  std::vector<DuplicateCandidate> candidates;
  for (const auto& s : summaries) {
    if (!(s.self_influence > med)) continue;
    DuplicateCandidate c;
    c.target_id = s.target_id;
    c.self_influence = s.self_influence;
    c.im = s.margin.dominant ? std::numeric_limits<double>::infinity()
                             : s.margin.ratio;
    // Suspected duplicate: the most influential sample other than the
    // target itself, ties to the smallest id.
    std::size_t best = s.target_id == 0 ? 1 : 0;
    for (std::size_t i = 0; i < influence.size(); ++i) {
      if (i == s.target_id) continue;
      if (influence.at(s.target_id, i) > influence.at(s.target_id, best))
        best = i;
    }
    c.suspected_source = best;
    candidates.push_back(c);
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const DuplicateCandidate& a, const DuplicateCandidate& b) {
              return a.im < b.im || (a.im == b.im && a.target_id < b.target_id);
            });
  if (candidates.size() < k && warnings)
    warnings->push_back("only " + std::to_string(candidates.size()) +
                        " of the requested " + std::to_string(k) +
                        " candidates are eligible (self-influence above the "
                        "median)");
  if (candidates.size() > k) candidates.resize(k);
  return candidates;
}

void save_group_map(const DuplicateGroupMap& groups, const std::string& path) {
  std::string out = "group_id,member_record_id,is_source\n";
  char buf[64];
  for (std::size_t g = 0; g < groups.groups.size(); ++g) {
    const auto& members = groups.groups[g].member_ids;
    for (std::size_t k = 0; k < members.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%zu,%llu,%d\n", g,
                    static_cast<unsigned long long>(members[k]),
                    k == 0 ? 1 : 0);
      out += buf;
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot open '" + path + "' for writing");
  f << out;
  if (!f) fail("write failed for '" + path + "'");
}

DuplicateGroupMap load_group_map(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open group map '" + path + "'");
  DuplicateGroupMap map;
  std::string line;
  if (!std::getline(f, line) || line.rfind("group_id,", 0) != 0)
    fail("'" + path + "' is not a group map CSV");
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    unsigned long long g = 0, id = 0;
    int is_source = 0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%d", &g, &id, &is_source) != 3)
      fail(path + ":" + std::to_string(line_no) + ": malformed group map row");
    if (g >= map.groups.size()) map.groups.resize(g + 1);
    auto& members = map.groups[g].member_ids;
    if (is_source) {
      members.insert(members.begin(), id);
    } else {
      members.push_back(id);
    }
  }
  for (std::size_t g = 0; g < map.groups.size(); ++g) {
    require(!map.groups[g].member_ids.empty(),
            "group " + std::to_string(g) + " has no members");
    if (map.n_dup == 0)
      map.n_dup = static_cast<std::uint32_t>(map.groups[g].member_ids.size());
  }
  return map;
}

std::string group_map_path(const std::string& out_dir) {
  return out_dir + "/groups.csv";
}

}  // namespace cfi
