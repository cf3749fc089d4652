#include <doctest.h>

#include <algorithm>
#include <cstdio>

#include "cfi/report.hpp"
#include "test_util.hpp"

using namespace cfi;
using cfitest::TempDir;

namespace {

InfluenceMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  InfluenceMatrix m(rows.size(), 0, 0);
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < rows.size(); ++i) m.set(t, i, rows[t][i]);
  for (std::size_t i = 0; i < rows.size(); ++i) m.set_counts(i, 1, 1);
  return m;
}

std::size_t count_substr(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("a 3x3 heatmap renders nine cells") {
  const auto m = matrix_from({{2.0, -0.5, 0.1},
                              {0.0, 1.5, -0.2},
                              {0.3, 0.1, 1.0}});
  const std::string svg = render_heatmap_svg(m);
  // 9 colored cells plus the background and frame rects
  CHECK(count_substr(svg, "<rect") == 9 + 2);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}

TEST_CASE("svg emission is byte-deterministic") {
  const auto m = matrix_from({{1.0, 0.2}, {-0.4, 0.9}});
  TempDir dir("svg_bytes");
  emit_heatmap(m, dir.file("a.svg"));
  emit_heatmap(m, dir.file("b.svg"));
  CHECK(cfitest::slurp(dir.file("a.svg")) == cfitest::slurp(dir.file("b.svg")));

  emit_ranked_plot(m, 0, dir.file("r1.svg"));
  emit_ranked_plot(m, 0, dir.file("r2.svg"));
  CHECK(cfitest::slurp(dir.file("r1.svg")) ==
        cfitest::slurp(dir.file("r2.svg")));
}

TEST_CASE("diverging colors rank with the values") {
  // scale 2: strong positive is redder than weak positive; negatives blue.
  const std::string strong = heatmap_color(2.0, 2.0);
  const std::string weak = heatmap_color(0.2, 2.0);
  const std::string zero = heatmap_color(0.0, 2.0);
  const std::string neg = heatmap_color(-2.0, 2.0);
  CHECK(strong == "rgb(178,24,43)");
  CHECK(zero == "rgb(247,247,247)");
  CHECK(neg == "rgb(33,102,172)");
  // weak positive sits strictly between zero and strong in the red channel
  int rw, gw, bw;
  REQUIRE(std::sscanf(weak.c_str(), "rgb(%d,%d,%d)", &rw, &gw, &bw) == 3);
  CHECK(rw < 247);
  CHECK(rw > 178);
  CHECK(gw < 247);
}

TEST_CASE("heatmap highlights bright cells at duplicate coordinates") {
  // entries (0,1) and (1,0) form a bright off-diagonal pair; their fill
  // must rank redder than unrelated cells.
  const auto m = matrix_from({{2.0, 1.9, 0.0},
                              {1.8, 2.1, 0.1},
                              {0.0, 0.1, 1.0}});
  const std::string svg = render_heatmap_svg(m);
  const std::string dup_color = heatmap_color(1.9, 2.1);
  const std::string weak_color = heatmap_color(0.1, 2.1);
  CHECK(svg.find(dup_color) != std::string::npos);
  int rd, gd, bd, rw2, gw2, bw2;
  REQUIRE(std::sscanf(dup_color.c_str(), "rgb(%d,%d,%d)", &rd, &gd, &bd) == 3);
  REQUIRE(std::sscanf(weak_color.c_str(), "rgb(%d,%d,%d)", &rw2, &gw2, &bw2) ==
          3);
  CHECK(gd < gw2);  // saturated red has less green/blue than a pale cell
}

TEST_CASE("ranked plot labels the top bars with source ids") {
  const auto m = matrix_from({{0.5, 2.0, 1.0, -0.25},
                              {0, 1, 0, 0},
                              {0, 0, 1, 0},
                              {0, 0, 0, 1}});
  const std::string svg = render_ranked_svg(m, 0, 2);
  // top-2 labels: sources 1 then 2
  CHECK(svg.find(">1</text>") != std::string::npos);
  CHECK(svg.find(">2</text>") != std::string::npos);
  CHECK(svg.find(">3</text>") == std::string::npos);  // only 2 labels
  // bars for all four sources plus the background rect
  CHECK(count_substr(svg, "<rect") == 4 + 1);
}

TEST_CASE("stability plot draws both panels") {
  StabilityReport report;
  report.m_max = 64;
  for (std::size_t m : {16ul, 32ul}) {
    StabilityRow row;
    row.m = m;
    row.mean_spearman = m == 16 ? 0.7 : 0.9;
    row.per_sample_std = {0.1, 0.05};
    row.std_p50 = m == 16 ? 0.08 : 0.04;
    row.std_p90 = 0.1;
    report.rows.push_back(row);
  }
  const std::string svg = render_stability_svg(report);
  CHECK(count_substr(svg, "<polyline") == 2);
  CHECK(count_substr(svg, "m=16") == 2);
  TempDir dir("stability_svg");
  emit_stability_plot(report, dir.file("s.svg"));
  CHECK(!cfitest::slurp(dir.file("s.svg")).empty());
}
