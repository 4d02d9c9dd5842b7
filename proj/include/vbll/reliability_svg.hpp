#pragma once

// Self-contained SVG reliability diagrams. Output bytes depend only on the
// inputs.

#include <filesystem>
#include <string>
#include <vector>

#include "vbll/calib_metrics.hpp"

namespace vbll {

// One marker per non-empty bin at (mean confidence, empirical accuracy), on
// a unit square with the identity diagonal.
std::string reliability_svg(const ReliabilityBins& bins, const std::string& title);
void emit_reliability_svg(const ReliabilityBins& bins, const std::filesystem::path& path,
                          const std::string& title = "");

struct GridPanel {
  std::string row_label;     // configuration
  std::string column_label;  // dataset
  ReliabilityBins bins;
};

// rows x columns panels, row-major; rows are configurations, columns datasets.
std::string reliability_grid_svg(const std::vector<std::string>& row_labels,
                                 const std::vector<std::string>& column_labels,
                                 const std::vector<GridPanel>& panels);
void emit_reliability_grid_svg(const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& column_labels,
                               const std::vector<GridPanel>& panels,
                               const std::filesystem::path& path);

// Plot geometry, exposed so tests can map markers back to unit coordinates.
struct PanelGeometry {
  static constexpr double kSize = 240.0;
  static constexpr double kMarginLeft = 44.0;
  static constexpr double kMarginTop = 28.0;
  static constexpr double kMarginRight = 12.0;
  static constexpr double kMarginBottom = 36.0;
};

}  // namespace vbll
