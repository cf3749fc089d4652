#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfi/influence.hpp"

namespace cfi {

struct DuplicateGroupMap;

enum class GroupTag { kUnique, kWithDuplicates, kHeldOut };
const char* group_tag_name(GroupTag g);

// Ratio of the largest to the second-largest influence on a target. The max
// runs over all sources including the target itself; ties on the max give a
// ratio of exactly 1. When the second-largest value is not positive the
// ratio is undefined and the margin is flagged dominant.
struct Top1Margin {
  bool dominant = false;
  double ratio = 0.0;        // valid when !dominant
  std::size_t argmax_source = 0;
  double max_value = 0.0;
  double second_value = 0.0;
};

struct TargetSummary {
  std::size_t target_id = 0;
  double self_influence = 0.0;
  Top1Margin margin;
  std::size_t rank_of_self = 0;  // 1-based rank in the sorted influence row
  GroupTag group = GroupTag::kUnique;
  std::optional<double> bleu;
};

std::vector<double> self_influence(const InfluenceMatrix& influence);

Top1Margin top1_influence_margin(const InfluenceMatrix& influence,
                                 std::size_t t);

// Descending by influence, ties broken by ascending source id.
std::vector<std::pair<std::size_t, double>> ranked_distribution(
    const InfluenceMatrix& influence, std::size_t t);

// Spearman rank correlation with average ranks for ties; absent when either
// side has zero rank variance.
std::optional<double> spearman(std::span<const double> a,
                               std::span<const double> b);

struct StabilityRow {
  std::size_t m = 0;
  std::optional<double> mean_spearman;       // absent for a single group
  std::vector<double> per_sample_std;        // one entry per target
  double std_p50 = 0.0;
  double std_p90 = 0.0;
};

struct StabilityReport {
  std::size_t m_max = 0;
  std::vector<StabilityRow> rows;
};

// Splits the model pool into M_max/m contiguous column groups, computes
// self-influence per group, and reports rank agreement and dispersion
// across groups for each m.
StabilityReport stability_analysis(const LossMatrix& losses,
                                   const PartitionMatrix& partitions,
                                   std::span<const std::size_t> m_values);

std::vector<TargetSummary> summarize_targets(
    const InfluenceMatrix& influence, const DuplicateGroupMap* groups,
    const std::vector<std::optional<double>>* bleu_by_target = nullptr);

struct GroupSummaryRow {
  GroupTag group = GroupTag::kUnique;
  std::size_t count = 0;
  double self_mean = 0.0, self_std = 0.0, self_median = 0.0;
  // Margin statistics cover targets with a defined (non-dominant) margin.
  std::size_t im_defined = 0;
  std::size_t im_dominant = 0;
  double im_mean = 0.0, im_std = 0.0, im_median = 0.0;
  std::size_t bleu_count = 0;
  double bleu_mean = 0.0, bleu_std = 0.0, bleu_median = 0.0;
};

std::vector<GroupSummaryRow> group_summary(
    std::span<const TargetSummary> summaries,
    std::vector<std::string>* warnings = nullptr);

// CSV artifacts.
void write_summary_csv(std::span<const TargetSummary> summaries,
                       const std::string& path);
std::vector<TargetSummary> load_summary_csv(const std::string& path);
void write_group_summary_csv(std::span<const GroupSummaryRow> rows,
                             const std::string& path);
void write_stability_csv(const StabilityReport& report,
                         const std::string& path);
StabilityReport load_stability_csv(const std::string& path);

std::string summary_path(const std::string& out_dir);
std::string group_summary_path(const std::string& out_dir);
std::string stability_path(const std::string& out_dir);

// Helpers shared with tests and reporting.
double median(std::vector<double> values);
double percentile(std::vector<double> values, double p);  // linear interp
double sample_std(std::span<const double> values);        // 0 when n < 2

}  // namespace cfi
