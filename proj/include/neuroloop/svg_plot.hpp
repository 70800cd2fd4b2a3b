#pragma once

// Minimal static SVG line charts for run records.

#include <filesystem>
#include <string>
#include <vector>

#include "neuroloop/scenario.hpp"

namespace neuroloop {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> y;
};

/// One panel; NaN samples break the polyline.
std::string svg_line_chart(const std::string& title, const std::string& y_label,
                           const std::vector<double>& x, const std::vector<Series>& series);

/// states.svg (y0..y4 and ym), tracking.svg (controlled output vs reference)
/// and control.svg (u), written into dir.
void write_svg_panels(const RunRecord& record, OutputSignal controlled,
                      const std::filesystem::path& dir);

}  // namespace neuroloop
