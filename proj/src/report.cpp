#include "cfi/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cfi/error.hpp"

namespace cfi {

namespace {

std::string fmt(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void write_svg(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail("cannot open '" + path + "' for writing");
  f << body;
  if (!f) fail("write failed for '" + path + "'");
}

struct Rgb {
  int r, g, b;
};

// RdBu-style diverging stops: blue (negative), white (zero), red (positive).
constexpr Rgb kNeg{33, 102, 172};
constexpr Rgb kMid{247, 247, 247};
constexpr Rgb kPos{178, 24, 43};

int lerp_channel(int a, int b, double t) {
  return static_cast<int>(std::lround(a + (b - a) * t));
}

std::string svg_open(int width, int height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " +
         std::to_string(height) + "\">\n";
}

}  // namespace

std::string heatmap_color(double value, double scale) {
  double t = scale > 0.0 ? value / scale : 0.0;
  t = std::clamp(t, -1.0, 1.0);
  const Rgb& side = t < 0.0 ? kNeg : kPos;
  const double a = std::abs(t);
  const Rgb c{lerp_channel(kMid.r, side.r, a), lerp_channel(kMid.g, side.g, a),
              lerp_channel(kMid.b, side.b, a)};
  return "rgb(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
         std::to_string(c.b) + ")";
}

std::string render_heatmap_svg(const InfluenceMatrix& influence) {
  const std::size_t n = influence.size();
  double scale = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < n; ++i)
      scale = std::max(scale, std::abs(influence.at(t, i)));

  const int margin = 40;
  const int plot = 520;
  const double cell = static_cast<double>(plot) / static_cast<double>(n);
  const int width = plot + 2 * margin;
  const int height = plot + 2 * margin;

  std::string svg = svg_open(width, height);
  svg += "<rect width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) +
         "\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">influence of "
         "source i (x) on target t (y)</text>\n";
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = margin + cell * static_cast<double>(i);
      const double y = margin + cell * static_cast<double>(t);
      svg += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" +
             fmt(cell) + "\" height=\"" + fmt(cell) + "\" fill=\"" +
             heatmap_color(influence.at(t, i), scale) + "\"/>\n";
    }
  }
  svg += "<rect x=\"" + std::to_string(margin) + "\" y=\"" +
         std::to_string(margin) + "\" width=\"" + std::to_string(plot) +
         "\" height=\"" + std::to_string(plot) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + std::to_string(margin) + "\" y=\"" +
         std::to_string(height - 10) + "\" font-size=\"11\">scale: |I| &lt;= " +
         fmt(scale, 4) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

void emit_heatmap(const InfluenceMatrix& influence, const std::string& path) {
  write_svg(path, render_heatmap_svg(influence));
}

std::string render_ranked_svg(const InfluenceMatrix& influence, std::size_t t,
                              std::size_t n_labels) {
  const auto ranked = ranked_distribution(influence, t);
  const std::size_t n = ranked.size();

  double vmax = 0.0, vmin = 0.0;
  for (const auto& [id, v] : ranked) {
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
  }
  if (vmax == 0.0 && vmin == 0.0) vmax = 1.0;

  const int margin = 46;
  const int plot_w = 640;
  const int plot_h = 320;
  const int width = plot_w + 2 * margin;
  const int height = plot_h + 2 * margin;
  const double span = vmax - vmin;
  const double bar_w = static_cast<double>(plot_w) / static_cast<double>(n);
  auto y_of = [&](double v) {
    return margin + (vmax - v) / span * plot_h;
  };

  std::string svg = svg_open(width, height);
  svg += "<rect width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) +
         "\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">ranked "
         "influence on target " +
         std::to_string(t) + "</text>\n";
  const double y0 = y_of(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = ranked[k].second;
    const double x = margin + bar_w * static_cast<double>(k);
    const double top = v >= 0.0 ? y_of(v) : y0;
    const double h = std::abs(y_of(v) - y0);
    const char* color = ranked[k].first == t ? "#1a9850" : "#4575b4";
    svg += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(top) + "\" width=\"" +
           fmt(std::max(bar_w - 0.5, 0.5)) + "\" height=\"" + fmt(h) +
           "\" fill=\"" + std::string(color) + "\"/>\n";
    if (k < n_labels) {
      svg += "<text x=\"" + fmt(x + bar_w / 2) + "\" y=\"" +
             fmt(top - 4) + "\" font-size=\"9\" text-anchor=\"middle\">" +
             std::to_string(ranked[k].first) + "</text>\n";
    }
  }
  svg += "<line x1=\"" + std::to_string(margin) + "\" y1=\"" + fmt(y0) +
         "\" x2=\"" + std::to_string(margin + plot_w) + "\" y2=\"" + fmt(y0) +
         "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + std::to_string(margin) + "\" y=\"" +
         std::to_string(height - 8) +
         "\" font-size=\"11\">bars: sources ranked by influence; labels: "
         "source record ids; green: the target itself</text>\n";
  svg += "</svg>\n";
  return svg;
}

void emit_ranked_plot(const InfluenceMatrix& influence, std::size_t t,
                      const std::string& path, std::size_t n_labels) {
  write_svg(path, render_ranked_svg(influence, t, n_labels));
}

std::string render_stability_svg(const StabilityReport& report) {
  require(!report.rows.empty(), "stability report is empty");
  const int margin = 50;
  const int panel_w = 330;
  const int panel_h = 260;
  const int gap = 60;
  const int width = 2 * panel_w + gap + 2 * margin;
  const int height = panel_h + 2 * margin;

  double max_m = 0.0, max_std = 0.0;
  for (const auto& row : report.rows) {
    max_m = std::max(max_m, static_cast<double>(row.m));
    max_std = std::max(max_std, row.std_p50);
  }
  if (max_std == 0.0) max_std = 1.0;

  auto x_of = [&](int panel, double m) {
    const int x0 = margin + panel * (panel_w + gap);
    return x0 + m / max_m * panel_w;
  };

  std::string svg = svg_open(width, height);
  svg += "<rect width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" fill=\"white\"/>\n";

  // Panel 0: mean Spearman's R in [0, 1]; panel 1: median per-sample std.
  const char* titles[2] = {"mean Spearman R of self-influence",
                           "median per-sample std"};
  for (int panel = 0; panel < 2; ++panel) {
    const int x0 = margin + panel * (panel_w + gap);
    svg += "<rect x=\"" + std::to_string(x0) + "\" y=\"" +
           std::to_string(margin) + "\" width=\"" + std::to_string(panel_w) +
           "\" height=\"" + std::to_string(panel_h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + std::to_string(x0 + panel_w / 2) + "\" y=\"" +
           std::to_string(margin - 10) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + titles[panel] +
           "</text>\n";
  }

  std::string line0 = "<polyline fill=\"none\" stroke=\"#4575b4\" "
                      "stroke-width=\"2\" points=\"";
  std::string line1 = "<polyline fill=\"none\" stroke=\"#d73027\" "
                      "stroke-width=\"2\" points=\"";
  std::string marks;
  for (const auto& row : report.rows) {
    const double m = static_cast<double>(row.m);
    if (row.mean_spearman) {
      const double y =
          margin + (1.0 - std::clamp(*row.mean_spearman, 0.0, 1.0)) * panel_h;
      line0 += fmt(x_of(0, m)) + "," + fmt(y) + " ";
      marks += "<circle cx=\"" + fmt(x_of(0, m)) + "\" cy=\"" + fmt(y) +
               "\" r=\"3\" fill=\"#4575b4\"/>\n";
    }
    const double y1 = margin + (1.0 - row.std_p50 / max_std) * panel_h;
    line1 += fmt(x_of(1, m)) + "," + fmt(y1) + " ";
    marks += "<circle cx=\"" + fmt(x_of(1, m)) + "\" cy=\"" + fmt(y1) +
             "\" r=\"3\" fill=\"#d73027\"/>\n";
    for (int panel = 0; panel < 2; ++panel)
      marks += "<text x=\"" + fmt(x_of(panel, m)) + "\" y=\"" +
               std::to_string(margin + panel_h + 16) +
               "\" font-size=\"10\" text-anchor=\"middle\">m=" +
               std::to_string(row.m) + "</text>\n";
  }
  svg += line0 + "\"/>\n" + line1 + "\"/>\n" + marks;
  svg += "</svg>\n";
  return svg;
}

void emit_stability_plot(const StabilityReport& report,
                         const std::string& path) {
  write_svg(path, render_stability_svg(report));
}

}  // namespace cfi
