#include "app/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "xirl/common/errors.hpp"

namespace xirl::app {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 16.0;
constexpr double kTop = 16.0;
constexpr double kBottom = 48.0;
constexpr int kTicks = 5;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::vector<double> column(const CsvTable& t, std::string_view name) {
  if (t.column(name) < 0) throw FormatError(fmt::format("missing column '{}'", name));
  return t.values(name);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::string s = fmt::format("{:.2f}", v);
  return s == "-0.00" ? "0.00" : s;
}

}  // namespace

PlotKind parse_plot_kind(std::string_view name) {
  if (name == "curve") return PlotKind::kCurve;
  if (name == "reward-trace") return PlotKind::kRewardTrace;
  throw ConfigError(fmt::format("unknown plot kind '{}' (expected curve or reward-trace)", name));
}

std::vector<Series> series_from_csv(const CsvTable& table, PlotKind kind, const std::string& label) {
  if (kind == PlotKind::kCurve) {
    return {Series{label, column(table, "step"), column(table, "success_rate")}};
  }
  const auto x = column(table, "frame_index");
  return {Series{label + " learned", x, column(table, "learned_reward")},
          Series{label + " env", x, column(table, "env_reward")}};
}

std::string render_svg(const std::vector<Series>& series, const std::string& x_label, const std::string& y_label) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * ph; };

  std::string out;
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      int(kWidth), int(kHeight));
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  // axes
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", fmt(kLeft),
                     fmt(kTop + ph), fmt(kLeft + pw));
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", fmt(kLeft), fmt(kTop),
                     fmt(kTop + ph));
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = x0 + (x1 - x0) * i / kTicks;
    const double fy = y0 + (y1 - y0) * i / kTicks;
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", fmt(sx(fx)),
                       fmt(kTop + ph + 14), fmt::format("{:.4g}", fx));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", fmt(kLeft - 4), fmt(sy(fy) + 4),
                       fmt::format("{:.4g}", fy));
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", fmt(kLeft + pw / 2),
                     fmt(kHeight - 8), escape(x_label));
  out += fmt::format("<text x=\"14\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0})\">{1}</text>\n",
                     fmt(kTop + ph / 2), escape(y_label));
  // series
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kPalette[i % kPalette.size()];
    std::string pts;
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!pts.empty()) pts += ' ';
      pts += fmt(sx(s.x[k])) + "," + fmt(sy(s.y[k]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour, pts);
  }
  // legend
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = kTop + 8 + 14.0 * static_cast<double>(i);
    const char* colour = kPalette[i % kPalette.size()];
    out += fmt::format("<line class=\"legend\" x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                       fmt(kLeft + pw - 150), fmt(ly), fmt(kLeft + pw - 130), colour);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", fmt(kLeft + pw - 126), fmt(ly + 4),
                       escape(series[i].label));
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace xirl::app
