#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "centipede/experiment.hpp"
#include "centipede/gait_analysis.hpp"

namespace centipede {

inline const char* label_colour(PatternLabel l) {
  switch (l) {
    case PatternLabel::InPhase: return "#1f77b4";
    case PatternLabel::Peristaltic: return "#17becf";
    case PatternLabel::DirectLow: return "#ff7f0e";
    case PatternLabel::DirectHigh: return "#d62728";
    case PatternLabel::RetroLow: return "#2ca02c";
    case PatternLabel::RetroHigh: return "#9467bd";
    case PatternLabel::Unconverged: return "#ffffff";
  }
  return "#ffffff";
}

// Piecewise-linear sequential ramp, t clamped to [0, 1].
inline std::string sequential_colour(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84},
      {59, 82, 139},
      {33, 145, 140},
      {94, 201, 98},
      {253, 231, 37},
  }};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<unsigned>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<unsigned>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<unsigned>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

enum class HeatmapKind { Pattern, Distance };

struct HeatmapOptions {
  HeatmapKind kind = HeatmapKind::Pattern;
  std::string title;
  std::string axis_name = "axis";
  double cell_width = 18.0;
  double cell_height = 28.0;
};

struct HeatmapOutput {
  std::string svg;
  std::vector<std::string> warnings;  // one per missing cell
};

namespace detail {

inline std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), v.end());
  return v;
}

}  // namespace detail

// Renders cell summaries as an SVG grid: axis values left to right, beta
// bottom to top. Cells absent from `cells` are hatched and reported.
inline HeatmapOutput render_heatmap(const std::vector<CellSummary>& cells, const SweepGrid& grid,
                                    const HeatmapOptions& opt = {}) {
  using detail::fmt;
  HeatmapOutput out;
  std::vector<double> betas = grid.betas;
  std::vector<double> axes = grid.axis_values;
  for (const auto& c : cells) {
    betas.push_back(c.beta);
    axes.push_back(c.axis_value);
  }
  betas = detail::sorted_unique(betas);
  axes = detail::sorted_unique(axes);

  auto find = [&](double beta, double axis) -> const CellSummary* {
    for (const auto& c : cells)
      if (std::abs(c.beta - beta) < 1e-9 && std::abs(c.axis_value - axis) < 1e-9) return &c;
    return nullptr;
  };

  double dmin = 0.0;
  double dmax = 0.0;
  bool first = true;
  for (const auto& c : cells) {
    if (first) {
      dmin = dmax = c.mean_distance;
      first = false;
    }
    dmin = std::min(dmin, c.mean_distance);
    dmax = std::max(dmax, c.mean_distance);
  }
  const double span = dmax > dmin ? dmax - dmin : 1.0;

  const double left = 70.0;
  const double top = 40.0;
  const double cw = opt.cell_width;
  const double ch = opt.cell_height;
  const double plot_w = cw * static_cast<double>(axes.size());
  const double plot_h = ch * static_cast<double>(betas.size());
  const double legend_x = left + plot_w + 30.0;
  const double width = legend_x + 160.0;
  const double height = std::max(top + plot_h + 60.0, top + 7.0 * 20.0 + 40.0);

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, 0) << "\" height=\"" << fmt(height, 0)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<defs><pattern id=\"missing\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
       "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
       "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#888888\" stroke-width=\"2\"/></pattern></defs>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!opt.title.empty())
    s << "<text x=\"" << fmt(left, 0) << "\" y=\"20\" font-size=\"14\">" << detail::xml_escape(opt.title)
      << "</text>\n";

  for (std::size_t bi = 0; bi < betas.size(); ++bi) {
    const double y = top + plot_h - ch * static_cast<double>(bi + 1);
    for (std::size_t ai = 0; ai < axes.size(); ++ai) {
      const double x = left + cw * static_cast<double>(ai);
      const CellSummary* c = find(betas[bi], axes[ai]);
      std::string fill;
      if (!c) {
        fill = "url(#missing)";
        out.warnings.push_back("missing cell beta=" + fmt(betas[bi], 3) + " " + opt.axis_name + "=" +
                               fmt(axes[ai], 3));
      } else if (opt.kind == HeatmapKind::Pattern) {
        fill = label_colour(c->majority);
      } else {
        fill = sequential_colour((c->mean_distance - dmin) / span);
      }
      s << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(cw) << "\" height=\"" << fmt(ch)
        << "\" fill=\"" << fill << "\" stroke=\"#cccccc\" stroke-width=\"0.5\">";
      if (c)
        s << "<title>beta " << fmt(c->beta, 3) << ", " << detail::xml_escape(opt.axis_name) << ' '
          << fmt(c->axis_value, 3) << ": " << to_string(c->majority) << " (" << c->majority_count << '/' << c->trials
          << "), distance " << fmt(c->mean_distance, 3) << "</title>";
      s << "</rect>\n";
    }
    s << "<text x=\"" << fmt(left - 6.0) << "\" y=\"" << fmt(y + ch / 2.0 + 4.0) << "\" text-anchor=\"end\">"
      << fmt(betas[bi], 2) << "</text>\n";
  }

  const std::size_t tick_every = std::max<std::size_t>(1, axes.size() / 8);
  for (std::size_t ai = 0; ai < axes.size(); ai += tick_every) {
    const double x = left + cw * (static_cast<double>(ai) + 0.5);
    s << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + plot_h + 16.0) << "\" text-anchor=\"middle\">"
      << fmt(axes[ai], 2) << "</text>\n";
  }
  s << "<text x=\"" << fmt(left + plot_w / 2.0) << "\" y=\"" << fmt(top + plot_h + 36.0)
    << "\" text-anchor=\"middle\">" << detail::xml_escape(opt.axis_name) << "</text>\n";
  s << "<text x=\"16\" y=\"" << fmt(top + plot_h / 2.0) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fmt(top + plot_h / 2.0) << ")\">beta</text>\n";

  if (opt.kind == HeatmapKind::Pattern) {
    double y = top;
    for (PatternLabel l : kAllLabels) {
      s << "<rect x=\"" << fmt(legend_x) << "\" y=\"" << fmt(y) << "\" width=\"14\" height=\"14\" fill=\""
        << label_colour(l) << "\" stroke=\"#888888\" stroke-width=\"0.5\"/>";
      s << "<text x=\"" << fmt(legend_x + 20.0) << "\" y=\"" << fmt(y + 11.0) << "\">" << to_string(l) << "</text>\n";
      y += 20.0;
    }
    s << "<rect x=\"" << fmt(legend_x) << "\" y=\"" << fmt(y) << "\" width=\"14\" height=\"14\" fill=\"url(#missing)\""
      << " stroke=\"#888888\" stroke-width=\"0.5\"/><text x=\"" << fmt(legend_x + 20.0) << "\" y=\"" << fmt(y + 11.0)
      << "\">missing</text>\n";
  } else {
    const int steps = 10;
    for (int k = 0; k < steps; ++k) {
      const double t = 1.0 - static_cast<double>(k) / (steps - 1);
      s << "<rect x=\"" << fmt(legend_x) << "\" y=\"" << fmt(top + 14.0 * k) << "\" width=\"14\" height=\"14\" fill=\""
        << sequential_colour(t) << "\"/>\n";
    }
    s << "<text x=\"" << fmt(legend_x + 20.0) << "\" y=\"" << fmt(top + 11.0) << "\">" << fmt(dmax, 2) << "</text>\n";
    s << "<text x=\"" << fmt(legend_x + 20.0) << "\" y=\"" << fmt(top + 14.0 * (steps - 1) + 11.0) << "\">"
      << fmt(dmin, 2) << "</text>\n";
    s << "<text x=\"" << fmt(legend_x) << "\" y=\"" << fmt(top + 14.0 * steps + 16.0) << "\">distance</text>\n";
  }
  s << "</svg>\n";
  out.svg = s.str();
  return out;
}

}  // namespace centipede
