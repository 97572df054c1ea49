#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parasgd/analysis.hpp"
#include "parasgd/schemes.hpp"

namespace parasgd::csv {

/// Shortest decimal form that parses back to the identical double, so files
/// are byte-stable across runs and lossless to reread.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[40];
  std::string best;
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v && (best.empty() || std::strlen(buf) < best.size())) {
      best = buf;
    }
  }
  return best;
}

inline constexpr const char* kTraceHeader =
    "scheme,K,tau,b,round,serial_iters,parallel_iters,sim_time,accuracy";

inline void write_trace(std::ostream& out, std::span<const RunTrace> traces) {
  out << kTraceHeader << '\n';
  for (const RunTrace& t : traces) {
    for (const EvalRecord& r : t.records) {
      out << t.scheme << ',' << t.workers << ',' << t.tau << ',' << t.batch << ',' << r.rounds
          << ',' << r.serial_iters << ',' << r.parallel_iters << ',' << format_double(r.sim_time)
          << ',' << format_double(r.accuracy) << '\n';
    }
  }
}

inline void write_trace(std::ostream& out, const RunTrace& trace) {
  write_trace(out, std::span<const RunTrace>(&trace, 1));
}

/// Rebuilds traces from an emitted trace CSV: consecutive rows with the same
/// (scheme, K, tau, b) identity belong to one run. Only what the file
/// carries is reconstructed.
inline std::vector<RunTrace> parse_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace csv: empty file");
  if (line != kTraceHeader) throw std::runtime_error("trace csv: unexpected header");
  std::vector<RunTrace> traces;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw std::runtime_error("trace csv: malformed row: " + line);
    const int workers = std::stoi(cells[1]);
    const int tau = std::stoi(cells[2]);
    const int batch = std::stoi(cells[3]);
    if (traces.empty() || traces.back().scheme != cells[0] || traces.back().workers != workers ||
        traces.back().tau != tau || traces.back().batch != batch) {
      RunTrace t;
      t.scheme = cells[0];
      t.workers = workers;
      t.tau = tau;
      t.batch = batch;
      traces.push_back(std::move(t));
    }
    EvalRecord r;
    r.rounds = std::stol(cells[4]);
    r.serial_iters = std::stol(cells[5]);
    r.parallel_iters = std::stol(cells[6]);
    r.sim_time = std::strtod(cells[7].c_str(), nullptr);
    r.accuracy = std::strtod(cells[8].c_str(), nullptr);
    traces.back().records.push_back(r);
  }
  return traces;
}

inline constexpr const char* kHeatmapHeader = "K,tau,N_a,M_a,speedup,reached";

inline void write_heatmap_point(std::ostream& out, const SpeedupPoint& p) {
  out << p.workers << ',' << p.tau << ',' << p.serial_iters_to_target << ',';
  if (p.reached) {
    out << p.rounds_to_target;
  } else {
    out << "inf";
  }
  out << ',' << format_double(p.speedup) << ',' << (p.reached ? 1 : 0) << '\n';
}

inline void write_heatmap(std::ostream& out, const SweepGrid& grid) {
  out << kHeatmapHeader << '\n';
  for (const SpeedupPoint& p : grid.cells) write_heatmap_point(out, p);
}

/// Per-seed provenance behind the aggregated grid.
inline void write_heatmap_runs(std::ostream& out, const SweepGrid& grid) {
  out << "seed," << kHeatmapHeader << '\n';
  for (const SpeedupPoint& p : grid.runs) {
    out << p.seed << ',';
    write_heatmap_point(out, p);
  }
}

inline constexpr const char* kOverheadHeader = "S,naive_speedup,sparknet_speedup,best_tau";

inline void write_overhead(std::ostream& out, std::span<const OverheadPoint> points) {
  out << kOverheadHeader << '\n';
  for (const OverheadPoint& p : points) {
    out << format_double(p.sync_seconds) << ',' << format_double(p.naive) << ','
        << format_double(p.sparknet) << ',' << p.best_tau << '\n';
  }
}

}  // namespace parasgd::csv
