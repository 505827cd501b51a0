#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace c2p::eval {

struct Series {
  std::string name;
  std::string color;
  std::vector<double> x, y;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace detail

/// Minimal scatter plot with axes, ticks and a legend.
inline std::string scatter_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                               const std::vector<Series>& series) {
  const double w = 640, h = 480, l = 70, r = 20, t = 40, b = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        any = true;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
  x0 -= px, x1 += px, y0 = std::max(0.0, y0 - py), y1 += py;
  auto sx = [&](double v) { return l + (v - x0) / (x1 - x0) * (w - l - r); };
  auto sy = [&](double v) { return h - b - (v - y0) / (y1 - y0) * (h - t - b); };
  using detail::num;
  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + detail::escape(title) + "</text>\n";
  o += "<line x1=\"" + num(l) + "\" y1=\"" + num(h - b) + "\" x2=\"" + num(w - r) + "\" y2=\"" + num(h - b) + "\" stroke=\"black\"/>\n";
  o += "<line x1=\"" + num(l) + "\" y1=\"" + num(t) + "\" x2=\"" + num(l) + "\" y2=\"" + num(h - b) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double vx = x0 + (x1 - x0) * i / 5.0, vy = y0 + (y1 - y0) * i / 5.0;
    o += "<text x=\"" + num(sx(vx)) + "\" y=\"" + num(h - b + 18) + "\" text-anchor=\"middle\">" + num(vx) + "</text>\n";
    o += "<text x=\"" + num(l - 6) + "\" y=\"" + num(sy(vy) + 4) + "\" text-anchor=\"end\">" + num(vy) + "</text>\n";
  }
  o += "<text x=\"" + num(w / 2) + "\" y=\"" + num(h - 15) + "\" text-anchor=\"middle\">" + detail::escape(xlabel) + "</text>\n";
  o += "<text transform=\"translate(18," + num(h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape(ylabel) + "</text>\n";
  double ly = t + 10;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      o += "<circle cx=\"" + num(sx(s.x[i])) + "\" cy=\"" + num(sy(s.y[i])) + "\" r=\"3\" fill=\"" + s.color +
           "\" fill-opacity=\"0.6\"/>\n";
    }
    o += "<rect x=\"" + num(w - r - 110) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" + s.color + "\"/>\n";
    o += "<text x=\"" + num(w - r - 95) + "\" y=\"" + num(ly) + "\">" + detail::escape(s.name) + "</text>\n";
    ly += 16;
  }
  o += "</svg>\n";
  return o;
}

}  // namespace c2p::eval
