#pragma once

#include <string>
#include <vector>

#include "xirl/common/csv.hpp"

namespace xirl::app {

enum class PlotKind { kCurve, kRewardTrace };

PlotKind parse_plot_kind(std::string_view name);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Curve plots use step vs success_rate; trace plots draw learned_reward and
/// env_reward against frame_index (two series per file).
std::vector<Series> series_from_csv(const CsvTable& table, PlotKind kind, const std::string& label);

/// Standalone SVG. Identical inputs give identical bytes.
std::string render_svg(const std::vector<Series>& series, const std::string& x_label, const std::string& y_label);

}  // namespace xirl::app
