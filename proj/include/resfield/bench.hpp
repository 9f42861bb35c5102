#pragma once

// Runtime scaling in the number of target points.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <vector>

#include "resfield/error.hpp"
#include "resfield/metric_graph.hpp"
#include "resfield/resistance.hpp"
#include "resfield/simulate.hpp"

namespace resfield {

struct BenchRow {
  std::size_t target_points = 0;
  std::size_t points = 0;  // points actually simulated (edges * points per edge)
  double seconds = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double setup_seconds = 0.0;  // factorization, excluded from the rows
  double slope = 0.0;          // least-squares slope of log(seconds) on log(points)
  double max_doubling_ratio = 0.0;
};

/// 503 * 2^k for k in [k_min, k_max], scaled to any edge count.
inline std::vector<std::size_t> doubling_counts(std::size_t edges, int k_min = 5, int k_max = 10) {
  std::vector<std::size_t> counts;
  for (int k = k_min; k <= k_max; ++k) counts.push_back(edges << k);
  return counts;
}

inline double loglog_slope(const std::vector<BenchRow>& rows) {
  if (rows.size() < 2) throw ArgumentError("slope needs at least two timings");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    const double x = std::log(static_cast<double>(r.points));
    const double y = std::log(r.seconds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Times one simulate() per count. The factorization is timed separately and
/// the smallest size is run once untimed before measuring.
inline BenchReport benchmark(const MetricGraph& g, const SimConfig& cfg, const std::vector<std::size_t>& counts) {
  if (counts.empty()) throw ArgumentError("benchmark needs at least one point count");
  for (std::size_t k = 1; k < counts.size(); ++k)
    if (counts[k] <= counts[k - 1]) throw ArgumentError("benchmark point counts must be strictly increasing");
  using clock = std::chrono::steady_clock;
  BenchReport report;
  const auto t0 = clock::now();
  const LaplacianSystem sys = LaplacianSystem::build(g);
  report.setup_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  auto per_edge = [&](std::size_t count) {
    const std::size_t k = (count + g.edge_count() / 2) / g.edge_count();
    return k == 0 ? std::size_t{1} : k;
  };
  {
    const PointSet warm = discretize(g, per_edge(counts.front()), false);
    (void)simulate(g, sys, warm, cfg);
  }
  for (std::size_t count : counts) {
    const PointSet ps = discretize(g, per_edge(count), false);
    const auto start = clock::now();
    (void)simulate(g, sys, ps, cfg);
    report.rows.push_back({count, ps.size(), std::chrono::duration<double>(clock::now() - start).count()});
  }
  if (report.rows.size() >= 2) {
    report.slope = loglog_slope(report.rows);
    for (std::size_t k = 1; k < report.rows.size(); ++k)
      report.max_doubling_ratio = std::max(report.max_doubling_ratio, report.rows[k].seconds / report.rows[k - 1].seconds);
  }
  return report;
}

}  // namespace resfield
