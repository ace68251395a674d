#pragma once

#include <string>
#include <vector>

namespace calderon {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = false;  // polyline instead of markers
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<PlotSeries> series;
  std::vector<std::string> notes;  // printed under the legend
  int width = 640;
  int height = 480;
};

// Self-contained SVG document. Points that cannot be drawn on a log axis are dropped.
std::string render_svg(const PlotSpec& spec);

}  // namespace calderon
