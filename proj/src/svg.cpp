#include "grpolab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grpolab/csv.hpp"

namespace grpolab {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kMargin = 56.0;

double scale(double value, double lo, double hi, double out_lo, double out_hi) {
  if (hi == lo) return 0.5 * (out_lo + out_hi);
  return out_lo + (value - lo) / (hi - lo) * (out_hi - out_lo);
}

}  // namespace

std::string svg_line_chart(const std::string& title,
                           const std::vector<double>& x,
                           const std::vector<SvgSeries>& series) {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool seen = false;
  for (double v : x) {
    if (!std::isfinite(v)) continue;
    x_lo = seen ? std::min(x_lo, v) : v;
    x_hi = seen ? std::max(x_hi, v) : v;
    seen = true;
  }
  seen = false;
  for (const SvgSeries& s : series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      y_lo = seen ? std::min(y_lo, v) : v;
      y_hi = seen ? std::max(y_hi, v) : v;
      seen = true;
    }
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << title << "</text>\n";

  // Axes.
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin
      << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
      << kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  for (const double frac : {0.0, 0.5, 1.0}) {
    const double xv = x_lo + frac * (x_hi - x_lo);
    const double yv = y_lo + frac * (y_hi - y_lo);
    out << "<text x=\""
        << scale(xv, x_lo, x_hi, kMargin, kWidth - kMargin) << "\" y=\""
        << kHeight - kMargin + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << format_double(xv) << "</text>\n";
    out << "<text x=\"" << kMargin - 6 << "\" y=\""
        << scale(yv, y_lo, y_hi, kHeight - kMargin, kMargin) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << format_double(yv) << "</text>\n";
  }

  double legend_y = kMargin;
  for (const SvgSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      out << scale(x[i], x_lo, x_hi, kMargin, kWidth - kMargin) << ','
          << scale(s.y[i], y_lo, y_hi, kHeight - kMargin, kMargin) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << legend_y
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\""
        << s.color << "\">" << s.label << "</text>\n";
    legend_y += 16.0;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace grpolab
