#include "dpminv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dpminv {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kPalette[] = {"#4472c4", "#ed7d31", "#70ad47", "#c00000",
                          "#7030a0", "#2aa8a8", "#8a6d3b", "#444444"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

double map_coord(double v, const Range& r, double a, double b) {
  return a + (v - r.lo) / (r.hi - r.lo) * (b - a);
}

std::string fmt_tick(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

void chart_header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2
      << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";
}

void axes(std::ostringstream& out, const std::string& x_label,
          const std::string& y_label, const Range& xr, const Range& yr,
          bool log_x, bool log_y) {
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
      << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double px = map_coord(fx, xr, kLeft, kWidth - kRight);
    out << "<text x=\"" << px << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double py = map_coord(fy, yr, kHeight - kBottom, kTop);
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\""
      << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 "
      << (kTop + kHeight - kBottom) / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series, bool log_x,
                      bool log_y) {
  Range xr, yr;
  std::vector<ChartSeries> mapped = series;
  for (auto& s : mapped) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      double x = s.xs[i], y = s.ys[i];
      if (log_x && !(x > 0)) continue;
      if (log_y && !(y > 0)) continue;
      if (log_x) x = std::log10(x);
      if (log_y) y = std::log10(y);
      xs.push_back(x);
      ys.push_back(y);
      xr.add(x);
      yr.add(y);
    }
    s.xs = std::move(xs);
    s.ys = std::move(ys);
  }
  xr.pad();
  yr.pad();

  std::ostringstream out;
  chart_header(out, title);
  axes(out, x_label, y_label, xr, yr, log_x, log_y);
  int color = 0;
  double legend_y = kTop + 6;
  for (const auto& s : mapped) {
    const char* c = kPalette[color++ % 8];
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      out << map_coord(s.xs[i], xr, kLeft, kWidth - kRight) << ","
          << map_coord(s.ys[i], yr, kHeight - kBottom, kTop) << " ";
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      out << "<circle cx=\"" << map_coord(s.xs[i], xr, kLeft, kWidth - kRight)
          << "\" cy=\"" << map_coord(s.ys[i], yr, kHeight - kBottom, kTop)
          << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    }
    out << "<rect x=\"" << kWidth - kRight - 170 << "\" y=\"" << legend_y - 9
        << "\" width=\"10\" height=\"10\" fill=\"" << c << "\"/>\n"
        << "<text x=\"" << kWidth - kRight - 155 << "\" y=\"" << legend_y
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.name
        << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_line_chart: cannot open " + path);
  f << out.str();
}

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& y_label,
                     const std::vector<std::pair<std::string, double>>& bars,
                     bool log_y) {
  Range yr;
  std::vector<double> vals;
  for (const auto& [name, v] : bars) {
    double y = v;
    if (log_y) {
      if (!(y > 0)) y = 1e-300;
      y = std::log10(y);
    }
    vals.push_back(y);
    yr.add(y);
  }
  if (log_y) yr.add(yr.lo - 1.0);
  else yr.add(0.0);
  yr.pad();

  std::ostringstream out;
  chart_header(out, title);
  axes(out, "", y_label, Range{0, 1}, yr, false, log_y);
  const double span = kWidth - kLeft - kRight;
  const double bw = span / std::max<std::size_t>(1, bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x = kLeft + bw * i + bw * 0.15;
    const double y = map_coord(vals[i], yr, kHeight - kBottom, kTop);
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bw * 0.7
        << "\" height=\"" << (kHeight - kBottom - y) << "\" fill=\""
        << kPalette[i % 8] << "\"/>\n";
    out << "<text x=\"" << x + bw * 0.35 << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << bars[i].first << "</text>\n";
  }
  out << "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_bar_chart: cannot open " + path);
  f << out.str();
}

}  // namespace dpminv
