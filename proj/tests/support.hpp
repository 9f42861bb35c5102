#pragma once

// Test fixtures: Monte Carlo summaries and an exact Gaussian sampler built by
// dense factorization of a known covariance.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "resfield/resfield.hpp"

namespace rftest {

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

inline Summary summarize(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

inline bool within(const Summary& s, double target, double k = 3.0) { return std::abs(s.mean - target) <= k * s.se; }

/// Products x_r * y_r, whose mean estimates the covariance of a zero-mean pair.
inline std::vector<double> products(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return out;
}

/// Values of one point across all replicates.
inline std::vector<double> column(const resfield::RealizationSet& real, std::size_t p) {
  std::vector<double> out(real.reps);
  for (std::size_t r = 0; r < real.reps; ++r) out[r] = real.at(p, r);
  return out;
}

/// Exact N(0, C) draws with C = cov_value(model, d_R) over a point set.
class DirectGaussian {
 public:
  explicit DirectGaussian(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    factor_ = llt.matrixL();
  }

  static DirectGaussian for_model(const resfield::ResistanceMatrix& dmat, const resfield::CovarianceModel& m) {
    const auto n = static_cast<Eigen::Index>(dmat.size());
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        c(i, j) = resfield::cov_value(m, dmat(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    return DirectGaussian(c);
  }

  resfield::RealizationSet draw(std::size_t reps, std::uint64_t seed) const {
    resfield::RealizationSet out;
    out.points = static_cast<std::size_t>(factor_.rows());
    out.reps = reps;
    out.values.resize(out.points * reps);
    auto rng = resfield::rng_substream(seed, 0, 0, resfield::StreamRole::Test);
    Eigen::VectorXd z(factor_.rows());
    for (std::size_t r = 0; r < reps; ++r) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
      const Eigen::VectorXd y = factor_.triangularView<Eigen::Lower>() * z;
      for (std::size_t p = 0; p < out.points; ++p) out.values[r * out.points + p] = y(static_cast<Eigen::Index>(p));
    }
    return out;
  }

 private:
  Eigen::MatrixXd factor_;
};

/// Path length between two points of a tree, by explicit search.
inline double tree_distance(const resfield::MetricGraph& g, const resfield::PointRef& p, const resfield::PointRef& q) {
  using namespace resfield;
  const std::size_t n = g.vertex_count();
  auto vertex_distances = [&](std::size_t src) {
    std::vector<double> d(n, -1.0);
    std::vector<std::size_t> stack{src};
    d[src] = 0.0;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t e : g.incident_edges(v)) {
        const std::size_t w = g.source(e) == v ? g.target(e) : g.source(e);
        if (d[w] < 0.0) {
          d[w] = d[v] + g.length(e);
          stack.push_back(w);
        }
      }
    }
    return d;
  };
  const PointLocation lp = locate(g, p);
  const PointLocation lq = locate(g, q);
  if (lp.edge && lq.edge && *lp.edge == *lq.edge) return std::abs(lp.arc - lq.arc);
  // Offsets from each point to the endpoints of its host.
  auto ends = [](const PointLocation& l) {
    return std::vector<std::pair<std::size_t, double>>{{l.lower, l.arc}, {l.upper, l.edge ? l.edge_length - l.arc : 0.0}};
  };
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [u, du] : ends(lp)) {
    const auto d = vertex_distances(u);
    for (const auto& [v, dv] : ends(lq)) best = std::min(best, du + d[v] + dv);
  }
  return best;
}

}  // namespace rftest
