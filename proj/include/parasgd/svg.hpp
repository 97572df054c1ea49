#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "parasgd/analysis.hpp"
#include "parasgd/schemes.hpp"

// Static SVG renderers: rectangles and text for heatmaps, polylines for
// curves. No external plotting dependency; the figures are written once and
// read, not steered.
namespace parasgd::svg {

namespace detail {

inline std::string fmt(double v, const char* spec = "%.4g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct Color {
  int r = 0, g = 0, b = 0;
  std::string hex() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
  }
};

inline Color lerp(Color a, Color b, double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](int x, int y) { return static_cast<int>(std::lround(x + t * (y - x))); };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Blue through white to red.
inline std::string diverging_color(double t) {
  const Color lo{33, 102, 172}, mid{247, 247, 247}, hi{178, 24, 43};
  return (t < 0.5 ? lerp(lo, mid, t * 2.0) : lerp(mid, hi, (t - 0.5) * 2.0)).hex();
}

inline void text(std::ostringstream& out, double x, double y, const std::string& s,
                 const char* anchor = "middle", int size = 12, const char* fill = "#222222") {
  out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\"" << anchor
      << "\" font-family=\"sans-serif\" font-size=\"" << size << "\" fill=\"" << fill << "\">" << s
      << "</text>\n";
}

inline void rect(std::ostringstream& out, double x, double y, double w, double h,
                 const std::string& fill, const char* stroke = "#ffffff") {
  out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
}

inline std::vector<double> nice_ticks(double lo, double hi, int want = 5) {
  if (!(hi > lo)) return {lo};
  const double span = hi - lo;
  const double raw = span / want;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    ticks.push_back(t);
  }
  return ticks;
}

struct Frame {
  double x0, y0, x1, y1;  // plot area in pixel space (y grows down)
  double map_x(double t) const { return x0 + t * (x1 - x0); }
  double map_y(double t) const { return y1 - t * (y1 - y0); }
};

}  // namespace detail

/// Grid of (K, tau) cells colored by speedup; unreached cells are gray.
inline std::string render_heatmap(const SweepGrid& grid, const std::string& title) {
  using namespace detail;
  const double cell_w = 84, cell_h = 48, left = 110, top = 64, bottom = 70, right = 40;
  const double width = left + cell_w * static_cast<double>(grid.taus.size()) + right;
  const double height = top + cell_h * static_cast<double>(grid.workers.size()) + bottom;

  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (const SpeedupPoint& p : grid.cells) {
    if (!p.reached) continue;
    lo = any ? std::min(lo, p.speedup) : p.speedup;
    hi = any ? std::max(hi, p.speedup) : p.speedup;
    any = true;
  }
  if (!any || hi <= lo) hi = lo + 1.0;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n";
  rect(out, 0, 0, width, height, "#ffffff", "none");
  text(out, width / 2, 26, title, "middle", 15);

  for (std::size_t ki = 0; ki < grid.workers.size(); ++ki) {
    for (std::size_t ti = 0; ti < grid.taus.size(); ++ti) {
      const SpeedupPoint& p = grid.cell(ki, ti);
      const double x = left + cell_w * static_cast<double>(ti);
      const double y = top + cell_h * static_cast<double>(ki);
      if (p.reached) {
        rect(out, x, y, cell_w, cell_h, diverging_color((p.speedup - lo) / (hi - lo)));
        text(out, x + cell_w / 2, y + cell_h / 2 + 4, fmt(p.speedup, "%.2f"), "middle", 13);
      } else {
        rect(out, x, y, cell_w, cell_h, "#bbbbbb");
        text(out, x + cell_w / 2, y + cell_h / 2 + 4, "n/a", "middle", 13, "#550000");
      }
    }
  }
  for (std::size_t ti = 0; ti < grid.taus.size(); ++ti) {
    text(out, left + cell_w * (static_cast<double>(ti) + 0.5),
         top + cell_h * static_cast<double>(grid.workers.size()) + 20,
         std::to_string(grid.taus[ti]));
  }
  for (std::size_t ki = 0; ki < grid.workers.size(); ++ki) {
    text(out, left - 14, top + cell_h * (static_cast<double>(ki) + 0.5) + 4,
         std::to_string(grid.workers[ki]), "end");
  }
  text(out, left + cell_w * static_cast<double>(grid.taus.size()) / 2, height - 22,
       "tau (local steps per round)");
  text(out, 24, top + cell_h * static_cast<double>(grid.workers.size()) / 2,
       "K (workers)", "middle");
  text(out, width / 2, 46,
       "target accuracy " + fmt(grid.target, "%.3f") + ", gray = target not reached", "middle",
       11, "#555555");
  out << "</svg>\n";
  return out.str();
}

/// Naive and averaging-scheme speedup curves against synchronization
/// overhead (log x when every S is positive).
inline std::string render_overhead(std::span<const OverheadPoint> points,
                                   const std::string& title) {
  using namespace detail;
  const double width = 560, height = 400;
  const Frame f{80, 56, width - 30, height - 60};

  double s_lo = points.front().sync_seconds, s_hi = s_lo, y_hi = 1.0;
  for (const OverheadPoint& p : points) {
    s_lo = std::min(s_lo, p.sync_seconds);
    s_hi = std::max(s_hi, p.sync_seconds);
    y_hi = std::max({y_hi, p.naive, p.sparknet});
  }
  const bool logx = s_lo > 0.0 && s_hi / s_lo > 20.0;
  auto xt = [&](double s) {
    if (logx) return (std::log10(s) - std::log10(s_lo)) / (std::log10(s_hi) - std::log10(s_lo));
    return s_hi > s_lo ? (s - s_lo) / (s_hi - s_lo) : 0.5;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n";
  rect(out, 0, 0, width, height, "#ffffff", "none");
  text(out, width / 2, 28, title, "middle", 15);

  for (double tick : nice_ticks(0.0, y_hi)) {
    const double y = f.map_y(tick / y_hi);
    out << "<line x1=\"" << fmt(f.x0) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(f.x1)
        << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
    text(out, f.x0 - 8, y + 4, fmt(tick), "end", 11);
  }
  for (const OverheadPoint& p : points) {
    const double x = f.map_x(xt(p.sync_seconds));
    text(out, x, f.y1 + 18, fmt(p.sync_seconds), "middle", 11);
  }
  auto polyline = [&](auto value, const char* color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const OverheadPoint& p : points) {
      out << fmt(f.map_x(xt(p.sync_seconds))) << "," << fmt(f.map_y(value(p) / y_hi)) << " ";
    }
    out << "\"/>\n";
  };
  polyline([](const OverheadPoint& p) { return p.naive; }, "#2166ac");
  polyline([](const OverheadPoint& p) { return p.sparknet; }, "#b2182b");

  text(out, f.x1 - 8, f.y0 + 16, "averaging scheme (best tau)", "end", 12, "#b2182b");
  text(out, f.x1 - 8, f.y0 + 34, "naive minibatch splitting", "end", 12, "#2166ac");
  text(out, (f.x0 + f.x1) / 2, height - 14, "synchronization overhead S (units of C(b))");
  text(out, 20, (f.y0 + f.y1) / 2, "speedup", "middle", 12);
  out << "</svg>\n";
  return out.str();
}

/// Accuracy-versus-simulated-time overlay, one polyline per tau.
inline std::string render_tau_traces(std::span<const RunTrace> traces, const std::string& title) {
  using namespace detail;
  const double width = 620, height = 420;
  const Frame f{76, 56, width - 150, height - 60};
  const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                           "#e6ab02", "#a6761d", "#666666"};

  double t_hi = 1.0;
  for (const RunTrace& t : traces) {
    for (const EvalRecord& r : t.records) t_hi = std::max(t_hi, r.sim_time);
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n";
  rect(out, 0, 0, width, height, "#ffffff", "none");
  text(out, width / 2, 28, title, "middle", 15);

  for (double tick : nice_ticks(0.0, 1.0)) {
    const double y = f.map_y(tick);
    out << "<line x1=\"" << fmt(f.x0) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(f.x1)
        << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
    text(out, f.x0 - 8, y + 4, fmt(tick), "end", 11);
  }
  for (double tick : nice_ticks(0.0, t_hi)) {
    const double x = f.map_x(tick / t_hi);
    text(out, x, f.y1 + 18, fmt(tick), "middle", 11);
  }

  for (std::size_t i = 0; i < traces.size(); ++i) {
    const char* color = palette[i % (sizeof palette / sizeof palette[0])];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const EvalRecord& r : traces[i].records) {
      out << fmt(f.map_x(r.sim_time / t_hi)) << "," << fmt(f.map_y(r.accuracy)) << " ";
    }
    out << "\"/>\n";
    text(out, f.x1 + 12, f.y0 + 18 * static_cast<double>(i) + 6,
         "tau=" + std::to_string(traces[i].tau), "start", 12, color);
  }
  text(out, (f.x0 + f.x1) / 2, height - 14, "simulated seconds");
  text(out, 20, (f.y0 + f.y1) / 2, "accuracy", "middle", 12);
  out << "</svg>\n";
  return out.str();
}

}  // namespace parasgd::svg
