#include "neuroloop/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "neuroloop/record_io.hpp"

namespace neuroloop {

namespace {

constexpr double kWidth = 900.0;
constexpr double kHeight = 300.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 30.0, kBottom = 40.0;
constexpr std::size_t kMaxPoints = 4000;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write to " + path.string() + " failed");
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& y_label,
                           const std::vector<double>& x, const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (double v : x) {
    x0 = std::min(x0, v);
    x1 = std::max(x1, v);
  }
  for (const auto& s : series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (!(x1 > x0)) { x0 = 0.0; x1 = 1.0; }
  if (!(y1 >= y0)) { y0 = -1.0; y1 = 1.0; }
  if (y1 - y0 < 1e-12) { y0 -= 1.0; y1 += 1.0; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
       fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"18\" text-anchor=\"middle\">" + escape(title) +
       "</text>\n";
  s += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) +
       "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    s += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(kHeight - kBottom + 15) +
         "\" text-anchor=\"middle\">" + fmt(xv) + "</text>\n";
    s += "<text x=\"" + fmt(kLeft - 5) + "\" y=\"" + fmt(py(yv) + 4) +
         "\" text-anchor=\"end\">" + fmt(yv) + "</text>\n";
  }
  s += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 5) +
       "\" text-anchor=\"middle\">t (s)</text>\n";
  s += "<text x=\"14\" y=\"" + fmt(kTop + ph / 2) + "\" transform=\"rotate(-90 14 " +
       fmt(kTop + ph / 2) + ")\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";

  const std::size_t stride = std::max<std::size_t>(1, x.size() / kMaxPoints);
  double legend_y = kTop + 14;
  for (const auto& ser : series) {
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        s += "<polyline fill=\"none\" stroke=\"" + ser.color + "\" stroke-width=\"1\" points=\"" +
             pts + "\"/>\n";
        pts.clear();
      }
    };
    const std::size_t n = std::min(x.size(), ser.y.size());
    for (std::size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(ser.y[i])) {
        flush();
        continue;
      }
      pts += fmt(px(x[i])) + "," + fmt(py(ser.y[i])) + " ";
    }
    flush();
    s += "<text x=\"" + fmt(kWidth - kRight - 5) + "\" y=\"" + fmt(legend_y) +
         "\" text-anchor=\"end\" fill=\"" + ser.color + "\">" + escape(ser.label) + "</text>\n";
    legend_y += 14;
  }
  s += "</svg>\n";
  return s;
}

void write_svg_panels(const RunRecord& record, OutputSignal controlled,
                      const std::filesystem::path& dir) {
  const std::size_t n = record.rows.size();
  std::vector<double> t(n);
  std::vector<Series> states;
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
  for (std::size_t j = 0; j < 5; ++j) {
    states.push_back({"y" + std::to_string(j), colors[j], std::vector<double>(n)});
  }
  states.push_back({"ym", "black", std::vector<double>(n)});
  Series out{controlled == OutputSignal::ym ? "ym" : "y1", "#1f77b4", std::vector<double>(n)};
  Series ref{"reference", "#d62728", std::vector<double>(n)};
  Series u{"u", "black", std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = record.rows[i];
    t[i] = r.t;
    for (std::size_t j = 0; j < 5; ++j) states[j].y[i] = r.y[j];
    states[5].y[i] = r.ym;
    out.y[i] = controlled == OutputSignal::ym ? r.ym : r.y[1];
    ref.y[i] = r.ystar;
    u.y[i] = r.u;
  }
  write_file(dir / "states.svg", svg_line_chart("Neural-mass states", "mV", t, states));
  write_file(dir / "tracking.svg", svg_line_chart("Tracking", "mV", t, {out, ref}));
  write_file(dir / "control.svg", svg_line_chart("Control input", "u", t, {u}));
}

}  // namespace neuroloop
