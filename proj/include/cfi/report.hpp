#pragma once

#include <string>

#include "cfi/duplicates.hpp"
#include "cfi/influence.hpp"
#include "cfi/stats.hpp"

namespace cfi {

// Self-contained SVG artifacts; fixed input gives byte-identical files.

// Influence matrix heatmap on a symmetric diverging scale centered at zero,
// so negative influence stays visible.
std::string render_heatmap_svg(const InfluenceMatrix& influence);
void emit_heatmap(const InfluenceMatrix& influence, const std::string& path);

// Ranked influence distribution for one target; the strongest bars are
// labeled with their source record ids.
std::string render_ranked_svg(const InfluenceMatrix& influence, std::size_t t,
                              std::size_t n_labels = 10);
void emit_ranked_plot(const InfluenceMatrix& influence, std::size_t t,
                      const std::string& path, std::size_t n_labels = 10);

// Mean Spearman's R and median per-sample std against the pool size m.
std::string render_stability_svg(const StabilityReport& report);
void emit_stability_plot(const StabilityReport& report,
                         const std::string& path);

// Cell fill used by the heatmap; exposed for tests that check color ranks.
std::string heatmap_color(double value, double scale);

}  // namespace cfi
