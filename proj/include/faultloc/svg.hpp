#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace faultloc::svg {

std::string escape(std::string_view text);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool markers_only = false;  // scatter
};

// Non-finite points are skipped. Returns a complete SVG document.
std::string line_chart(const Axes& axes, const std::vector<Series>& series);

// Grouped bars: one group per category, one bar per series (series.y indexed by category).
std::string bar_chart(const Axes& axes, const std::vector<std::string>& categories,
                      const std::vector<Series>& series);

}  // namespace faultloc::svg
