#include "cfi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "cfi/duplicates.hpp"
#include "cfi/error.hpp"
#include "cfi/reduce.hpp"

namespace cfi {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot open '" + path + "' for writing");
  f << content;
  if (!f) fail("write failed for '" + path + "'");
}

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v[a] < v[b] || (v[a] == v[b] && a < b);
  });
  std::vector<double> ranks(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k + 1;
    while (end < n && v[order[end]] == v[order[k]]) ++end;
    const double avg = (static_cast<double>(k + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t p = k; p < end; ++p) ranks[order[p]] = avg;
    k = end;
  }
  return ranks;
}

struct Moments {
  std::size_t n = 0;
  double mean = 0.0, std_dev = 0.0, med = 0.0;
};

Moments moments(std::vector<double> values) {
  Moments m;
  m.n = values.size();
  if (values.empty()) return m;
  m.mean = pairwise_sum(values) / static_cast<double>(values.size());
  m.std_dev = sample_std(values);
  m.med = median(std::move(values));
  return m;
}

}  // namespace

const char* group_tag_name(GroupTag g) {
  switch (g) {
    case GroupTag::kUnique: return "unique";
    case GroupTag::kWithDuplicates: return "with-duplicates";
    case GroupTag::kHeldOut: return "held-out";
  }
  return "unique";
}

double median(std::vector<double> values) {
  require(!values.empty(), "median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double percentile(std::vector<double> values, double p) {
  require(!values.empty(), "percentile of empty list");
  require(p >= 0.0 && p <= 100.0, "percentile out of range");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean =
      pairwise_sum(values) / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

std::vector<double> self_influence(const InfluenceMatrix& influence) {
  std::vector<double> out(influence.size());
  for (std::size_t t = 0; t < influence.size(); ++t) out[t] = influence.at(t, t);
  return out;
}

Top1Margin top1_influence_margin(const InfluenceMatrix& influence,
                                 std::size_t t) {
  const std::size_t n = influence.size();
  require(n >= 2, "margin needs at least 2 records");
  require(t < n, "target index out of range");

  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (influence.at(t, i) > influence.at(t, best)) best = i;

  double second = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (i != best) second = std::max(second, influence.at(t, i));

  Top1Margin m;
  m.argmax_source = best;
  m.max_value = influence.at(t, best);
  m.second_value = second;
  if (second <= 0.0) {
    m.dominant = true;
  } else {
    m.ratio = m.max_value / second;
  }
  return m;
}

std::vector<std::pair<std::size_t, double>> ranked_distribution(
    const InfluenceMatrix& influence, std::size_t t) {
  require(t < influence.size(), "target index out of range");
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(influence.size());
  for (std::size_t i = 0; i < influence.size(); ++i)
    out.emplace_back(i, influence.at(t, i));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second > b.second || (a.second == b.second && a.first < b.first);
  });
  return out;
}

std::optional<double> spearman(std::span<const double> a,
                               std::span<const double> b) {
  require(a.size() == b.size(), "spearman: length mismatch");
  require(a.size() >= 2, "spearman: need at least 2 values");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = ra[k] - mean;
    const double db = rb[k] - mean;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return std::nullopt;
  return cov / std::sqrt(va * vb);
}

StabilityReport stability_analysis(const LossMatrix& losses,
                                   const PartitionMatrix& partitions,
                                   std::span<const std::size_t> m_values) {
  require(losses.n_targets() == partitions.n_records() &&
              losses.n_models() == partitions.n_models(),
          "loss/partition shape mismatch");
  require(losses.complete(), "loss matrix has missing columns");
  const std::size_t m_max = partitions.n_models();
  const std::size_t n = partitions.n_records();

  StabilityReport report;
  report.m_max = m_max;

  std::vector<double> in_buf, out_buf;
  for (std::size_t m : m_values) {
    require(m >= 2, "stability m must be >= 2");
    if (m_max % m != 0)
      fail("stability m = " + std::to_string(m) + " does not divide M = " +
           std::to_string(m_max));
    const std::size_t n_groups = m_max / m;

    // Self-influence per contiguous column group.
    std::vector<std::vector<double>> selfs(n_groups,
                                           std::vector<double>(n, 0.0));
    for (std::size_t g = 0; g < n_groups; ++g) {
      const std::size_t j0 = g * m;
      for (std::size_t t = 0; t < n; ++t) {
        in_buf.clear();
        out_buf.clear();
        for (std::size_t j = j0; j < j0 + m; ++j) {
          const double v = losses.at(t, j);
          if (partitions.bit(t, j))
            in_buf.push_back(v);
          else
            out_buf.push_back(v);
        }
        if (in_buf.empty() || out_buf.empty())
          fail("record " + std::to_string(t) +
               ": one-sided partition inside group " + std::to_string(g) +
               " at m = " + std::to_string(m) + "; increase m or reseed");
        selfs[g][t] = pairwise_sum(out_buf) / static_cast<double>(out_buf.size()) -
                      pairwise_sum(in_buf) / static_cast<double>(in_buf.size());
      }
    }

    StabilityRow row;
    row.m = m;
    if (n_groups >= 2) {
      std::vector<double> rs;
      for (std::size_t g = 0; g < n_groups; ++g)
        for (std::size_t h = g + 1; h < n_groups; ++h)
          if (const auto r = spearman(selfs[g], selfs[h])) rs.push_back(*r);
      if (!rs.empty())
        row.mean_spearman = pairwise_sum(rs) / static_cast<double>(rs.size());
    }
    row.per_sample_std.resize(n, 0.0);
    if (n_groups >= 2) {
      std::vector<double> across(n_groups);
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t g = 0; g < n_groups; ++g) across[g] = selfs[g][t];
        row.per_sample_std[t] = sample_std(across);
      }
    }
    row.std_p50 = percentile(row.per_sample_std, 50.0);
    row.std_p90 = percentile(row.per_sample_std, 90.0);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<TargetSummary> summarize_targets(
    const InfluenceMatrix& influence, const DuplicateGroupMap* groups,
    const std::vector<std::optional<double>>* bleu_by_target) {
  const std::size_t n = influence.size();
  require(n >= 2, "summaries need at least 2 records");
  if (bleu_by_target)
    require(bleu_by_target->size() == n, "bleu vector length mismatch");

  std::vector<TargetSummary> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    TargetSummary& s = out[t];
    s.target_id = t;
    s.self_influence = influence.at(t, t);
    s.margin = top1_influence_margin(influence, t);
    // Rank of the diagonal entry under the ranked_distribution order.
    std::size_t rank = 1;
    const double self = s.self_influence;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == t) continue;
      const double v = influence.at(t, i);
      if (v > self || (v == self && i < t)) ++rank;
    }
    s.rank_of_self = rank;
    s.group = GroupTag::kUnique;
    if (groups && groups->group_of(t).has_value())
      s.group = GroupTag::kWithDuplicates;
    if (bleu_by_target) s.bleu = (*bleu_by_target)[t];
  }
  return out;
}

std::vector<GroupSummaryRow> group_summary(
    std::span<const TargetSummary> summaries,
    std::vector<std::string>* warnings) {
  std::vector<GroupTag> tags = {GroupTag::kUnique, GroupTag::kWithDuplicates};
  for (const auto& s : summaries)
    if (s.group == GroupTag::kHeldOut) {
      tags.push_back(GroupTag::kHeldOut);
      break;
    }

  std::vector<GroupSummaryRow> rows;
  for (GroupTag tag : tags) {
    std::vector<double> selfs, ims, bleus;
    std::size_t dominant = 0;
    for (const auto& s : summaries) {
      if (s.group != tag) continue;
      selfs.push_back(s.self_influence);
      if (s.margin.dominant)
        ++dominant;
      else
        ims.push_back(s.margin.ratio);
      if (s.bleu) bleus.push_back(*s.bleu);
    }
    if (selfs.empty()) {
      if (warnings)
        warnings->push_back(std::string("group '") + group_tag_name(tag) +
                            "' is empty; omitted from the summary");
      continue;
    }
    GroupSummaryRow row;
    row.group = tag;
    row.count = selfs.size();
    const Moments ms = moments(selfs);
    row.self_mean = ms.mean;
    row.self_std = ms.std_dev;
    row.self_median = ms.med;
    row.im_defined = ims.size();
    row.im_dominant = dominant;
    if (!ims.empty()) {
      const Moments mi = moments(ims);
      row.im_mean = mi.mean;
      row.im_std = mi.std_dev;
      row.im_median = mi.med;
    }
    row.bleu_count = bleus.size();
    if (!bleus.empty()) {
      const Moments mb = moments(bleus);
      row.bleu_mean = mb.mean;
      row.bleu_std = mb.std_dev;
      row.bleu_median = mb.med;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(std::span<const TargetSummary> summaries,
                       const std::string& path) {
  std::string out =
      "target_id,group,self_influence,im,rank_of_self,argmax_source,bleu\n";
  for (const auto& s : summaries) {
    out += std::to_string(s.target_id);
    out += ',';
    out += group_tag_name(s.group);
    out += ',' + fmt(s.self_influence);
    out += ',';
    out += s.margin.dominant ? "inf" : fmt(s.margin.ratio);
    out += ',' + std::to_string(s.rank_of_self);
    out += ',' + std::to_string(s.margin.argmax_source);
    out += ',';
    out += s.bleu ? fmt(*s.bleu) : "nan";
    out += '\n';
  }
  write_text_file(path, out);
}

void write_group_summary_csv(std::span<const GroupSummaryRow> rows,
                             const std::string& path) {
  std::string out =
      "group,count,self_mean,self_std,self_median,"
      "im_defined,im_dominant,im_mean,im_std,im_median,"
      "bleu_count,bleu_mean,bleu_std,bleu_median\n";
  for (const auto& r : rows) {
    out += group_tag_name(r.group);
    out += ',' + std::to_string(r.count);
    out += ',' + fmt(r.self_mean) + ',' + fmt(r.self_std) + ',' +
           fmt(r.self_median);
    out += ',' + std::to_string(r.im_defined) + ',' +
           std::to_string(r.im_dominant);
    out += ',' + fmt(r.im_mean) + ',' + fmt(r.im_std) + ',' + fmt(r.im_median);
    out += ',' + std::to_string(r.bleu_count);
    out += ',' + fmt(r.bleu_mean) + ',' + fmt(r.bleu_std) + ',' +
           fmt(r.bleu_median);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_stability_csv(const StabilityReport& report,
                         const std::string& path) {
  std::string out = "m,mean_spearman,std_p50,std_p90\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.m);
    out += ',';
    out += row.mean_spearman ? fmt(*row.mean_spearman) : "nan";
    out += ',' + fmt(row.std_p50) + ',' + fmt(row.std_p90) + '\n';
  }
  write_text_file(path, out);
}

StabilityReport load_stability_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open stability file '" + path + "'");
  StabilityReport report;
  std::string line;
  if (!std::getline(f, line) || line.rfind("m,", 0) != 0)
    fail("'" + path + "' is not a stability CSV");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    StabilityRow row;
    char spearman_buf[32];
    double p50 = 0.0, p90 = 0.0;
    unsigned long long m = 0;
    if (std::sscanf(line.c_str(), "%llu,%31[^,],%lf,%lf", &m, spearman_buf,
                    &p50, &p90) != 4)
      fail("'" + path + "': malformed stability row");
    row.m = m;
    if (std::strcmp(spearman_buf, "nan") != 0)
      row.mean_spearman = std::strtod(spearman_buf, nullptr);
    row.std_p50 = p50;
    row.std_p90 = p90;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string summary_path(const std::string& out_dir) {
  return out_dir + "/summary.csv";
}
std::string group_summary_path(const std::string& out_dir) {
  return out_dir + "/group_summary.csv";
}
std::string stability_path(const std::string& out_dir) {
  return out_dir + "/stability.csv";
}

}  // namespace cfi
