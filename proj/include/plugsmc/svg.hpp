#ifndef PLUGSMC_SVG_HPP
#define PLUGSMC_SVG_HPP

#include <string>
#include <vector>

namespace plugsmc::svg {

struct Line {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  std::string label;
  double width = 1.5;
  bool markers = false;  ///< draw points instead of a polyline
};

struct Ribbon {
  std::vector<double> x, lower, upper;
  std::string color = "#1f77b4";
  double opacity = 0.15;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Ribbon> ribbons;
  std::vector<Line> lines;
  std::vector<double> horizontal_rules;
  int width = 760;
  int height = 420;
};

/// Renders a standalone SVG document. Non-finite points (and nonpositive ones
/// on a log axis) break polylines rather than being plotted.
std::string render(const Plot& plot);

/// Writes render(plot) to a file; throws IoError on failure.
void write(const Plot& plot, const std::string& path);

}  // namespace plugsmc::svg

#endif  // PLUGSMC_SVG_HPP
