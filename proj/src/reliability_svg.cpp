#include "vbll/reliability_svg.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vbll/error.hpp"

namespace vbll {
namespace {

using G = PanelGeometry;

constexpr double kPanelWidth = G::kMarginLeft + G::kSize + G::kMarginRight;
constexpr double kPanelHeight = G::kMarginTop + G::kSize + G::kMarginBottom;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

// Panel body in local coordinates (origin at the panel's top-left corner).
void panel(std::ostringstream& out, const ReliabilityBins& bins, const std::string& title) {
  const double x0 = G::kMarginLeft;
  const double y0 = G::kMarginTop;
  const double s = G::kSize;
  out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(s)
      << "\" height=\"" << fmt(s) << "\" fill=\"#ffffff\" stroke=\"#333333\"/>\n";
  for (int k = 1; k < 4; ++k) {
    const double t = s * k / 4.0;
    out << "<line class=\"grid\" x1=\"" << fmt(x0 + t) << "\" y1=\"" << fmt(y0) << "\" x2=\""
        << fmt(x0 + t) << "\" y2=\"" << fmt(y0 + s)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    out << "<line class=\"grid\" x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0 + t) << "\" x2=\""
        << fmt(x0 + s) << "\" y2=\"" << fmt(y0 + t)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
  out << "<line class=\"diagonal\" x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0 + s) << "\" x2=\""
      << fmt(x0 + s) << "\" y2=\"" << fmt(y0)
      << "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
  for (const auto& b : bins.bins) {
    if (b.count == 0) continue;
    const double cx = x0 + *b.confidence * s;
    const double cy = y0 + (1.0 - *b.accuracy) * s;
    out << "<circle class=\"bin\" cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy)
        << "\" r=\"3\" fill=\"#1f77b4\"><title>n=" << b.count << "</title></circle>\n";
  }
  out << "<text x=\"" << fmt(x0 + s / 2) << "\" y=\"" << fmt(y0 + s + 28)
      << "\" font-size=\"11\" text-anchor=\"middle\">confidence</text>\n";
  out << "<text x=\"12\" y=\"" << fmt(y0 + s / 2) << "\" font-size=\"11\" "
      << "text-anchor=\"middle\" transform=\"rotate(-90 12 " << fmt(y0 + s / 2)
      << ")\">accuracy</text>\n";
  if (!title.empty()) {
    out << "<text x=\"" << fmt(x0 + s / 2) << "\" y=\"" << fmt(y0 - 10)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  }
}

void write_file(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace

std::string reliability_svg(const ReliabilityBins& bins, const std::string& title) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kPanelWidth)
      << "\" height=\"" << fmt(kPanelHeight) << "\" viewBox=\"0 0 " << fmt(kPanelWidth) << ' '
      << fmt(kPanelHeight) << "\" font-family=\"sans-serif\">\n";
  out << "<g class=\"panel\">\n";
  panel(out, bins, title);
  out << "</g>\n</svg>\n";
  return out.str();
}

void emit_reliability_svg(const ReliabilityBins& bins, const std::filesystem::path& path,
                          const std::string& title) {
  write_file(reliability_svg(bins, title), path);
}

std::string reliability_grid_svg(const std::vector<std::string>& row_labels,
                                 const std::vector<std::string>& column_labels,
                                 const std::vector<GridPanel>& panels) {
  const std::size_t rows = row_labels.size();
  const std::size_t cols = column_labels.size();
  if (panels.size() != rows * cols) {
    throw InvalidArgument("grid needs " + std::to_string(rows * cols) + " panels, got " +
                          std::to_string(panels.size()));
  }
  const double label_w = 70.0;
  const double header_h = 24.0;
  const double width = label_w + kPanelWidth * static_cast<double>(cols);
  const double height = header_h + kPanelHeight * static_cast<double>(rows);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height)
      << "\" font-family=\"sans-serif\">\n";
  for (std::size_t c = 0; c < cols; ++c) {
    out << "<text x=\"" << fmt(label_w + kPanelWidth * (static_cast<double>(c) + 0.5))
        << "\" y=\"16\" font-size=\"13\" text-anchor=\"middle\">" << escape(column_labels[c])
        << "</text>\n";
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double top = header_h + kPanelHeight * static_cast<double>(r);
    out << "<text x=\"8\" y=\"" << fmt(top + kPanelHeight / 2) << "\" font-size=\"13\">"
        << escape(row_labels[r]) << "</text>\n";
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& p = panels[r * cols + c];
      out << "<g class=\"panel\" transform=\"translate("
          << fmt(label_w + kPanelWidth * static_cast<double>(c)) << ' ' << fmt(top) << ")\">\n";
      panel(out, p.bins, "");
      out << "</g>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

void emit_reliability_grid_svg(const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& column_labels,
                               const std::vector<GridPanel>& panels,
                               const std::filesystem::path& path) {
  write_file(reliability_grid_svg(row_labels, column_labels, panels), path);
}

}  // namespace vbll
