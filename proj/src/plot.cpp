#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lightcone/experiment.hpp"

namespace lightcone {

namespace {

constexpr double kW = 640.0;
constexpr double kH = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + num(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape_xml(title) +
         "</text>\n";
}

struct Axes {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

std::string frame(const Axes& a, const std::string& xlabel, const std::string& ylabel, int xticks, int yticks) {
  std::string s = "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kW - kLeft - kRight) +
                  "\" height=\"" + num(kH - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= xticks; ++k) {
    const double x = a.x0 + (a.x1 - a.x0) * k / xticks;
    s += "<text x=\"" + num(a.px(x)) + "\" y=\"" + num(kH - kBottom + 16) + "\" text-anchor=\"middle\">" +
         escape_xml(std::to_string(static_cast<long long>(std::lround(x * 100)) / 100.0).substr(0, 6)) + "</text>\n";
  }
  for (int k = 0; k <= yticks; ++k) {
    const double y = a.y0 + (a.y1 - a.y0) * k / yticks;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", y);
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(a.py(y) + 4) + "\" text-anchor=\"end\">" + buf + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + (kW - kLeft - kRight) / 2) + "\" y=\"" + num(kH - 12) +
       "\" text-anchor=\"middle\">" + escape_xml(xlabel) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(kTop + (kH - kTop - kBottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(kTop + (kH - kTop - kBottom) / 2) + ")\">" + escape_xml(ylabel) + "</text>\n";
  return s;
}

std::string polyline(const Axes& a, const std::vector<std::pair<double, double>>& pts, const std::string& style) {
  if (pts.empty()) return "";
  std::string s = "<polyline fill=\"none\" " + style + " points=\"";
  for (const auto& [x, y] : pts) s += num(a.px(x)) + "," + num(a.py(y)) + " ";
  s += "\"/>\n";
  return s;
}

}  // namespace

std::string svg_norm_plot(const CertificationReport& report, const std::string& title) {
  std::vector<std::pair<double, double>> meas;
  std::vector<std::pair<double, double>> env;
  for (const auto& r : report.rows) {
    if (r.measured > 0.0 && std::isfinite(r.measured)) meas.emplace_back(r.t, std::log10(r.measured));
    if (std::isfinite(r.exponent)) env.emplace_back(r.t, r.exponent / std::log(10.0));
  }
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const auto* v : {&meas, &env}) {
    for (const auto& [x, y] : *v) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x0 < x1)) {
    x0 = std::isfinite(x0) ? x0 - 1 : 0;
    x1 = x0 + 2;
  }
  if (!(y0 < y1)) {
    y0 = std::isfinite(y0) ? y0 - 1 : -1;
    y1 = y0 + 2;
  }
  const double pad = 0.05 * (y1 - y0);
  const Axes a{x0, x1, y0 - pad, y1 + pad};
  std::string s = header(title);
  s += frame(a, "t", "log10 norm", 6, 5);
  s += polyline(a, env, "stroke=\"#c0392b\" stroke-width=\"2\" stroke-dasharray=\"6,4\"");
  s += polyline(a, meas, "stroke=\"#1f4e9c\" stroke-width=\"2\"");
  for (const auto& [x, y] : meas) {
    s += "<circle cx=\"" + num(a.px(x)) + "\" cy=\"" + num(a.py(y)) + "\" r=\"3\" fill=\"#1f4e9c\"/>\n";
  }
  s += "<text x=\"" + num(kW - kRight - 8) + "\" y=\"" + num(kTop + 16) +
       "\" text-anchor=\"end\" fill=\"#1f4e9c\">measured</text>\n";
  s += "<text x=\"" + num(kW - kRight - 8) + "\" y=\"" + num(kTop + 32) +
       "\" text-anchor=\"end\" fill=\"#c0392b\">envelope (dashed)</text>\n";
  s += "</svg>\n";
  return s;
}

std::string svg_front_heatmap(const Matrix& amplitude, const std::vector<double>& times, int x_lower,
                              const std::string& title) {
  const auto nt = static_cast<int>(amplitude.rows());
  const auto nx = static_cast<int>(amplitude.cols());
  std::string s = header(title);
  if (nt == 0 || nx == 0) return s + "</svg>\n";
  const Axes a{static_cast<double>(x_lower) - 0.5, static_cast<double>(x_lower + nx) - 0.5, 0.0,
               static_cast<double>(nt)};
  const double cw = (kW - kLeft - kRight) / nx;
  const double ch = (kH - kTop - kBottom) / nt;
  // Colour on log10 |psi| clipped to [-16, 0].
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < nx; ++j) {
      const double v = std::abs(amplitude(i, j));
      const double l = v > 0.0 ? std::clamp(std::log10(v), -16.0, 0.0) : -16.0;
      const double u = (l + 16.0) / 16.0;
      const int r = static_cast<int>(std::lround(255 * u));
      const int g = static_cast<int>(std::lround(255 * u * u));
      const int b = static_cast<int>(std::lround(80 * (1 - u)));
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"rgb(%d,%d,%d)\"/>\n",
                    kLeft + j * cw, kH - kBottom - (i + 1) * ch, cw + 0.05, ch + 0.05, r, g, b);
      s += buf;
    }
  }
  s += frame(a, "x", "t", 6, 0);
  for (int i = 0; i < nt; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", times[static_cast<std::size_t>(i)]);
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(kH - kBottom - (i + 0.5) * ch + 4) +
         "\" text-anchor=\"end\">" + buf + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace lightcone
