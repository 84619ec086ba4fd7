#ifndef GRPOLAB_SVG_HPP_
#define GRPOLAB_SVG_HPP_

#include <string>
#include <vector>

namespace grpolab {

struct SvgSeries {
  std::string label;
  std::string color;  // any SVG color literal
  std::vector<double> y;
};

// Dependency-free multi-line chart. All series share the x grid; y autoscales
// to the finite data range.
std::string svg_line_chart(const std::string& title,
                           const std::vector<double>& x,
                           const std::vector<SvgSeries>& series);

}  // namespace grpolab

#endif  // GRPOLAB_SVG_HPP_
