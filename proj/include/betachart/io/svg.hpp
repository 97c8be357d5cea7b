#pragma once

// Self-contained SVG rendering of control charts: one panel per chart with
// the observations, step-wise LCL/UCL lines and the signalling points.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "betachart/io/report.hpp"

namespace betachart::io {

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Viewport of one panel; data y grows upwards.
struct Frame {
  double left, top, width, height;
  double x_min, x_max, y_min, y_max;

  double x(double t) const { return left + (t - x_min) / (x_max - x_min) * width; }
  double y(double v) const { return top + (y_max - v) / (y_max - y_min) * height; }
};

// Horizontal segment over [t - 0.5, t + 0.5] at every observation, joined
// by vertical risers.
inline std::string step_path(const Frame& f, const std::vector<ChartRow>& rows, bool upper) {
  std::string d;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = upper ? rows[i].ucl : rows[i].lcl;
    const double t = static_cast<double>(rows[i].t);
    d += (i == 0 ? "M" : "L") + px(f.x(t - 0.5)) + "," + px(f.y(v)) + " L" + px(f.x(t + 0.5)) +
         "," + px(f.y(v)) + " ";
  }
  return d;
}

}  // namespace detail

inline std::string render_svg(const std::vector<ChartSeries>& charts,
                              const std::string& title = "Control charts") {
  using detail::px;
  constexpr double kWidth = 760.0;
  constexpr double kPanel = 260.0;
  constexpr double kLeft = 70.0;
  constexpr double kRight = 170.0;
  constexpr double kTop = 40.0;
  constexpr double kGap = 50.0;
  const double height =
      kTop + static_cast<double>(charts.size()) * (kPanel + kGap) + (charts.empty() ? 40.0 : 0.0);

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << px(kWidth)
    << "\" height=\"" << px(height) << "\" viewBox=\"0 0 " << px(kWidth) << " " << px(height)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << px(kWidth) << "\" height=\"" << px(height)
    << "\" fill=\"white\"/>\n"
    << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << detail::xml_escape(title) << "</text>\n";

  for (std::size_t c = 0; c < charts.size(); ++c) {
    const auto& chart = charts[c];
    const auto& rows = chart.rows;
    double lo = 0.0;
    double hi = 1.0;
    if (!rows.empty()) {
      lo = hi = rows.front().y;
      for (const auto& r : rows) {
        for (double v : {r.y, r.lcl, r.ucl}) {
          if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
      }
    }
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    const double n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
    const detail::Frame f{kLeft,    kTop + static_cast<double>(c) * (kPanel + kGap),
                          kWidth - kLeft - kRight, kPanel,
                          0.5,      n + 0.5,
                          lo - pad, hi + pad};
    const std::string name(to_string(chart.kind));

    s << "<g class=\"chart\" id=\"chart-" << c << "\">\n";
    s << "<rect x=\"" << px(f.left) << "\" y=\"" << px(f.top) << "\" width=\"" << px(f.width)
      << "\" height=\"" << px(f.height) << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << px(f.left) << "\" y=\"" << px(f.top - 6) << "\">"
      << detail::xml_escape(name) << " (alpha = " << detail::tick_label(chart.alpha)
      << ")</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = f.y_min + (f.y_max - f.y_min) * k / 4.0;
      s << "<line x1=\"" << px(f.left - 4) << "\" y1=\"" << px(f.y(v)) << "\" x2=\""
        << px(f.left) << "\" y2=\"" << px(f.y(v)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px(f.left - 6) << "\" y=\"" << px(f.y(v) + 4)
        << "\" text-anchor=\"end\">" << detail::tick_label(v) << "</text>\n";
    }
    if (f.y_min < 0.0 && f.y_max > 0.0) {
      s << "<line x1=\"" << px(f.left) << "\" y1=\"" << px(f.y(0.0)) << "\" x2=\""
        << px(f.left + f.width) << "\" y2=\"" << px(f.y(0.0))
        << "\" stroke=\"#999999\" stroke-dasharray=\"2,3\"/>\n";
    }
    const std::size_t step = std::max<std::size_t>(1, rows.size() / 10);
    for (std::size_t i = 0; i < rows.size(); i += step) {
      const double t = static_cast<double>(rows[i].t);
      s << "<text x=\"" << px(f.x(t)) << "\" y=\"" << px(f.top + f.height + 14)
        << "\" text-anchor=\"middle\">" << rows[i].t << "</text>\n";
    }

    if (!rows.empty()) {
      s << "<path class=\"ucl\" d=\"" << detail::step_path(f, rows, true)
        << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.2\"/>\n";
      s << "<path class=\"lcl\" d=\"" << detail::step_path(f, rows, false)
        << "\" fill=\"none\" stroke=\"#2e86c1\" stroke-width=\"1.2\"/>\n";
      std::string line;
      for (const auto& r : rows) {
        line += px(f.x(static_cast<double>(r.t))) + "," + px(f.y(r.y)) + " ";
      }
      s << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"#555555\"/>\n";
    }
    for (const auto& r : rows) {
      const double cx = f.x(static_cast<double>(r.t));
      const double cy = f.y(r.y);
      if (r.signal) {
        s << "<circle class=\"signal\" cx=\"" << px(cx) << "\" cy=\"" << px(cy)
          << "\" r=\"5\" fill=\"none\" stroke=\"#e67e22\" stroke-width=\"2\"/>\n";
      }
      s << "<circle cx=\"" << px(cx) << "\" cy=\"" << px(cy) << "\" r=\"2.5\" fill=\"black\"/>\n";
    }

    const double lx = f.left + f.width + 15;
    double ly = f.top + 12;
    s << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly - 4) << "\" x2=\"" << px(lx + 20)
      << "\" y2=\"" << px(ly - 4) << "\" stroke=\"#c0392b\"/><text x=\"" << px(lx + 26)
      << "\" y=\"" << px(ly) << "\">UCL</text>\n";
    ly += 16;
    s << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly - 4) << "\" x2=\"" << px(lx + 20)
      << "\" y2=\"" << px(ly - 4) << "\" stroke=\"#2e86c1\"/><text x=\"" << px(lx + 26)
      << "\" y=\"" << px(ly) << "\">LCL</text>\n";
    ly += 16;
    std::string sig;
    if (chart.signals.empty()) {
      sig = "no signals";
    } else {
      sig = "signals: ";
      for (std::size_t i = 0; i < chart.signals.size(); ++i) {
        if (i == 8) {
          sig += ", ...";
          break;
        }
        sig += (i ? ", " : "") + std::to_string(chart.signals[i]);
      }
    }
    s << "<circle cx=\"" << px(lx + 10) << "\" cy=\"" << px(ly - 4)
      << "\" r=\"5\" fill=\"none\" stroke=\"#e67e22\" stroke-width=\"2\"/><text class=\"legend\" x=\""
      << px(lx + 26) << "\" y=\"" << px(ly) << "\">" << sig << "</text>\n";
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace betachart::io
