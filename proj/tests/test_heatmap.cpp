#include <gtest/gtest.h>

#include <regex>
#include <set>

#include "test_support.hpp"

using namespace centipede;

namespace {

CellSummary cell(double beta, double axis, PatternLabel label, double distance = 1.0) {
  CellSummary c;
  c.beta = beta;
  c.axis_value = axis;
  c.majority = label;
  c.majority_count = 10;
  c.trials = 10;
  c.mean_distance = distance;
  return c;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

SweepGrid grid_of(std::vector<double> betas, std::vector<double> axes) {
  SweepGrid g;
  g.betas = std::move(betas);
  g.axis_values = std::move(axes);
  return g;
}

const std::string kDataCell = "stroke=\"#cccccc\"";

}  // namespace

TEST(Palette, SevenDistinctEntriesWithWhiteReserved) {
  std::set<std::string> colours;
  for (PatternLabel l : kAllLabels) colours.insert(label_colour(l));
  EXPECT_EQ(colours.size(), 7u);
  EXPECT_STREQ(label_colour(PatternLabel::Unconverged), "#ffffff");
  EXPECT_EQ(sequential_colour(0.0), "#440154");
  EXPECT_EQ(sequential_colour(1.0), "#fde725");
  EXPECT_EQ(sequential_colour(2.0), sequential_colour(1.0));
}

TEST(Heatmap, SingleCell) {
  const auto out = render_heatmap({cell(1.5, 3.0, PatternLabel::RetroLow)}, grid_of({1.5}, {3.0}));
  EXPECT_EQ(count(out.svg, kDataCell), 1u);
  EXPECT_NE(out.svg.find(label_colour(PatternLabel::RetroLow)), std::string::npos);
  EXPECT_TRUE(out.warnings.empty());
  EXPECT_EQ(out.svg.rfind("<svg", 0), 0u);
}

TEST(Heatmap, Deterministic) {
  std::vector<CellSummary> cells;
  for (double b : {0.0, 0.5, 1.0})
    for (double a : {1.0, 2.0, 3.0}) cells.push_back(cell(b, a, PatternLabel::DirectHigh, a * b));
  const auto g = grid_of({0.0, 0.5, 1.0}, {1.0, 2.0, 3.0});
  HeatmapOptions opt;
  opt.kind = HeatmapKind::Distance;
  opt.title = "t";
  EXPECT_EQ(render_heatmap(cells, g, opt).svg, render_heatmap(cells, g, opt).svg);
  opt.kind = HeatmapKind::Pattern;
  EXPECT_EQ(render_heatmap(cells, g, opt).svg, render_heatmap(cells, g, opt).svg);
}

TEST(Heatmap, AllUnconvergedIsWhiteWithLegend) {
  std::vector<CellSummary> cells;
  for (double b : {0.0, 1.0})
    for (double a : {1.0, 2.0}) cells.push_back(cell(b, a, PatternLabel::Unconverged));
  const auto out = render_heatmap(cells, grid_of({0.0, 1.0}, {1.0, 2.0}));
  EXPECT_EQ(count(out.svg, "fill=\"#ffffff\" " + kDataCell), 4u);
  for (PatternLabel l : kAllLabels) EXPECT_NE(out.svg.find(">" + to_string(l) + "<"), std::string::npos);
}

TEST(Heatmap, MissingCellsAreHatchedAndReported) {
  const auto out = render_heatmap({cell(0.0, 1.0, PatternLabel::InPhase)}, grid_of({0.0, 1.0}, {1.0, 2.0}));
  EXPECT_EQ(out.warnings.size(), 3u);
  EXPECT_EQ(count(out.svg, "fill=\"url(#missing)\" " + kDataCell), 3u);
}

TEST(Heatmap, BetaZeroIsTheBottomRow) {
  const auto out = render_heatmap({cell(0.0, 1.0, PatternLabel::InPhase), cell(3.0, 1.0, PatternLabel::RetroHigh)},
                                  grid_of({0.0, 3.0}, {1.0}));
  const std::regex rect("<rect x=\"[0-9.]+\" y=\"([0-9.]+)\"[^>]*fill=\"(#[0-9a-f]+)\" stroke=\"#cccccc\"");
  double y_zero = -1;
  double y_three = -1;
  for (auto it = std::sregex_iterator(out.svg.begin(), out.svg.end(), rect); it != std::sregex_iterator(); ++it) {
    const double y = std::stod((*it)[1]);
    if ((*it)[2] == label_colour(PatternLabel::InPhase)) y_zero = y;
    if ((*it)[2] == label_colour(PatternLabel::RetroHigh)) y_three = y;
  }
  ASSERT_GE(y_zero, 0);
  ASSERT_GE(y_three, 0);
  EXPECT_GT(y_zero, y_three);
}

TEST(Heatmap, DistanceUsesTheSequentialScale) {
  HeatmapOptions opt;
  opt.kind = HeatmapKind::Distance;
  const auto out = render_heatmap({cell(0.0, 1.0, PatternLabel::InPhase, 2.0), cell(0.0, 2.0, PatternLabel::InPhase, 10.0)},
                                  grid_of({0.0}, {1.0, 2.0}), opt);
  EXPECT_NE(out.svg.find("fill=\"" + sequential_colour(0.0) + "\" " + kDataCell), std::string::npos);
  EXPECT_NE(out.svg.find("fill=\"" + sequential_colour(1.0) + "\" " + kDataCell), std::string::npos);
}
