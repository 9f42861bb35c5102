#pragma once

// Resistance metric on a graph with Euclidean edges.
//
// The auxiliary field Z is a vertex Gaussian vector with covariance L^{-1}
// (L the anchored Laplacian with conductances 1/length), linearly
// interpolated along edges, plus an independent standard Brownian bridge on
// every edge. The resistance distance is d_R(p,q) = var(Z(p) - Z(q)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "resfield/error.hpp"
#include "resfield/metric_graph.hpp"
#include "resfield/rng.hpp"

namespace resfield {

/// Edge-length spread beyond which L is considered too ill-conditioned.
inline constexpr double kMaxLengthRatio = 1e12;

/// Lexicographically smallest vertex id.
inline std::size_t default_anchor(const MetricGraph& g) {
  if (g.vertex_count() == 0) throw ArgumentError("graph has no vertices");
  std::size_t best = 0;
  for (std::size_t v = 1; v < g.vertex_count(); ++v)
    if (g.vertex(v).id < g.vertex(best).id) best = v;
  return best;
}

/// Anchored Laplacian and its sparse Cholesky factor. Immutable and cheap to
/// copy (the factor is shared), so one instance serves every simulated copy.
class LaplacianSystem {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;
  using Factor = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

  static LaplacianSystem build(const MetricGraph& g, std::optional<std::size_t> anchor = std::nullopt) {
    const std::size_t n = g.vertex_count();
    if (n == 0) throw ArgumentError("graph has no vertices");
    const std::size_t u0 = anchor.value_or(default_anchor(g));
    if (u0 >= n) throw ArgumentError("anchor vertex out of range");

    double min_len = std::numeric_limits<double>::infinity();
    double max_len = 0.0;
    for (const auto& e : g.edges()) {
      if (!(e.length > 0.0) || !std::isfinite(e.length))
        throw ValidationError("nonpositive edge length at edge '" + e.id + "'");
      min_len = std::min(min_len, e.length);
      max_len = std::max(max_len, e.length);
    }
    if (g.edge_count() > 0 && max_len / min_len > kMaxLengthRatio)
      throw NumericalError("edge length ratio max/min exceeds 1e12; Laplacian too ill-conditioned");

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(4 * g.edge_count() + 1);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      const int s = static_cast<int>(g.source(e));
      const int t = static_cast<int>(g.target(e));
      const double c = 1.0 / g.length(e);
      triplets.emplace_back(s, s, c);
      triplets.emplace_back(t, t, c);
      triplets.emplace_back(s, t, -c);
      triplets.emplace_back(t, s, -c);
    }
    triplets.emplace_back(static_cast<int>(u0), static_cast<int>(u0), 1.0);

    LaplacianSystem sys;
    sys.n_ = n;
    sys.anchor_ = u0;
    sys.matrix_.resize(static_cast<int>(n), static_cast<int>(n));
    sys.matrix_.setFromTriplets(triplets.begin(), triplets.end());
    sys.matrix_.makeCompressed();

    auto factor = std::make_shared<Factor>();
    factor->compute(sys.matrix_);
    if (factor->info() != Eigen::Success)
      throw NumericalError("Cholesky factorization of the Laplacian failed (check edge lengths)");
    const SparseMatrix lower = factor->matrixL();
    for (int k = 0; k < lower.outerSize(); ++k) {
      const double d = lower.coeff(k, k);
      if (!(d > 0.0) || !std::isfinite(d)) throw NumericalError("Laplacian is not strictly positive definite");
    }
    sys.factor_ = std::move(factor);
    return sys;
  }

  std::size_t size() const { return n_; }
  std::size_t anchor() const { return anchor_; }
  const SparseMatrix& matrix() const { return matrix_; }

  /// L^{-1} b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (static_cast<std::size_t>(b.size()) != n_) throw ArgumentError("dimension mismatch in Laplacian solve");
    return factor_->solve(b);
  }

  /// w^T L^{-1} w2 without forming the inverse.
  double covariance_form(std::span<const double> w, std::span<const double> w2) const {
    if (w.size() != n_ || w2.size() != n_) throw ArgumentError("dimension mismatch in covariance form");
    const Eigen::Map<const Eigen::VectorXd> a(w.data(), static_cast<Eigen::Index>(n_));
    const Eigen::Map<const Eigen::VectorXd> b(w2.data(), static_cast<Eigen::Index>(n_));
    return a.dot(factor_->solve(b.eval()));
  }

  /// Column v of L^{-1}.
  Eigen::VectorXd covariance_column(std::size_t v) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    e(static_cast<Eigen::Index>(v)) = 1.0;
    return factor_->solve(e);
  }

  /// Overwrites `out` (size n) with a draw from N(0, L^{-1}): with
  /// P L P^T = R R^T, x = P^T R^{-T} z has covariance L^{-1}.
  void sample_vertices(RandomStream& rng, Eigen::VectorXd& out) const {
    out.resize(static_cast<Eigen::Index>(n_));
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.normal();
    Eigen::VectorXd y = factor_->matrixU().solve(out);
    out = factor_->permutationPinv() * y;
  }

 private:
  std::size_t n_ = 0;
  std::size_t anchor_ = 0;
  SparseMatrix matrix_;
  std::shared_ptr<const Factor> factor_;
};

inline LaplacianSystem build_laplacian(const MetricGraph& g, std::optional<std::size_t> anchor = std::nullopt) {
  return LaplacianSystem::build(g, anchor);
}

inline double vertex_covariance_form(const LaplacianSystem& sys, std::span<const double> w,
                                     std::span<const double> w2) {
  return sys.covariance_form(w, w2);
}

namespace detail {

// Variance of a standard Brownian bridge pinned at 0 and len, evaluated at s.
inline double bridge_variance(double s, double len) { return s * (len - s) / len; }

}  // namespace detail

/// Analytic d_R between two canonical points: interpolation part through
/// L^{-1} plus the Brownian-bridge part.
inline double resistance_distance(const MetricGraph& g, const LaplacianSystem& sys, const PointRef& p,
                                  const PointRef& q) {
  const PointLocation lp = locate(g, canonical_point(g, p));
  const PointLocation lq = locate(g, canonical_point(g, q));

  Eigen::VectorXd diff = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.size()));
  diff(static_cast<Eigen::Index>(lp.lower)) += 1.0 - lp.weight;
  diff(static_cast<Eigen::Index>(lp.upper)) += lp.weight;
  diff(static_cast<Eigen::Index>(lq.lower)) -= 1.0 - lq.weight;
  diff(static_cast<Eigen::Index>(lq.upper)) -= lq.weight;
  double d = diff.dot(sys.solve(diff));

  if (lp.edge && lq.edge && *lp.edge == *lq.edge) {
    const double delta = std::abs(lp.arc - lq.arc);
    d += delta - delta * delta / lp.edge_length;
  } else {
    if (lp.edge) d += detail::bridge_variance(lp.arc, lp.edge_length);
    if (lq.edge) d += detail::bridge_variance(lq.arc, lq.edge_length);
  }
  return std::max(d, 0.0);
}

/// Dense symmetric matrix of pairwise resistance distances over a PointSet.
class ResistanceMatrix {
 public:
  ResistanceMatrix() = default;
  explicit ResistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline constexpr std::size_t kDefaultMatrixCap = 25'000'000;

/// All pairwise d_R. One Laplacian solve per vertex touched by the point set;
/// each pair then costs a handful of lookups.
inline ResistanceMatrix resistance_matrix(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps,
                                          std::size_t max_entries = kDefaultMatrixCap) {
  const std::size_t n = ps.size();
  if (n > 0 && n > max_entries / n)
    throw ArgumentError("resistance matrix of " + std::to_string(n) + " points exceeds the entry cap of " +
                        std::to_string(max_entries) + "; subsample pairs instead (see stats pair subsampling)");

  std::vector<std::ptrdiff_t> slot(sys.size(), -1);
  std::vector<std::size_t> touched;
  std::vector<PointLocation> loc;
  loc.reserve(n);
  for (const auto& p : ps) {
    loc.push_back(locate(g, p));
    for (std::size_t v : {loc.back().lower, loc.back().upper}) {
      if (slot[v] < 0) {
        slot[v] = static_cast<std::ptrdiff_t>(touched.size());
        touched.push_back(v);
      }
    }
  }
  const std::size_t k = touched.size();
  Eigen::MatrixXd sigma(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    const Eigen::VectorXd col = sys.covariance_column(touched[j]);
    for (std::size_t i = 0; i < k; ++i)
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col(static_cast<Eigen::Index>(touched[i]));
  }

  struct Weights {
    Eigen::Index a, b;
    double wa, wb;
  };
  std::vector<Weights> w(n);
  std::vector<double> self(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = {slot[loc[i].lower], slot[loc[i].upper], 1.0 - loc[i].weight, loc[i].weight};
    const auto& x = w[i];
    self[i] = x.wa * x.wa * sigma(x.a, x.a) + 2.0 * x.wa * x.wb * sigma(x.a, x.b) + x.wb * x.wb * sigma(x.b, x.b);
  }

  ResistanceMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = w[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& y = w[j];
      const double cross = x.wa * (y.wa * sigma(x.a, y.a) + y.wb * sigma(x.a, y.b)) +
                           x.wb * (y.wa * sigma(x.b, y.a) + y.wb * sigma(x.b, y.b));
      double d = self[i] + self[j] - 2.0 * cross;
      if (loc[i].edge && loc[j].edge && *loc[i].edge == *loc[j].edge) {
        const double delta = std::abs(loc[i].arc - loc[j].arc);
        d += delta - delta * delta / loc[i].edge_length;
      } else {
        if (loc[i].edge) d += detail::bridge_variance(loc[i].arc, loc[i].edge_length);
        if (loc[j].edge) d += detail::bridge_variance(loc[j].arc, loc[j].edge_length);
      }
      d = std::max(d, 0.0);
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Auxiliary field simulation

namespace detail {

struct BridgeStep {
  double mean_coef;  // multiplies the previous bridge value
  double sd;         // conditional standard deviation
};

/// Conditional law of B(s) given B(prev) for a bridge pinned to 0 at `len`:
/// mean (len - s)/(len - prev) * B(prev), variance (s - prev)(len - s)/(len - prev).
inline BridgeStep bridge_step(double len, double prev, double s) {
  const double remaining = len - prev;
  return {(len - s) / remaining, std::sqrt(std::max(0.0, (s - prev) * (len - s) / remaining))};
}

}  // namespace detail

/// Point-set specific precomputation for drawing copies of Z. Bridge
/// coefficients depend only on geometry, so they are computed once; the
/// vertex draw either goes through the sparse factor or, when the point set
/// touches only a few vertices, through a dense Cholesky factor of the
/// corresponding block of L^{-1} (same law, far fewer operations).
class AuxFieldSampler {
 public:
  static constexpr std::size_t kRestrictedVertexLimit = 48;

  AuxFieldSampler(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps) : sys_(&sys) {
    const std::size_t n = ps.size();
    lower_.resize(n);
    upper_.resize(n);
    weight_.resize(n);
    steps_.resize(n);

    std::vector<std::ptrdiff_t> slot(sys.size(), -1);
    std::vector<std::size_t> touched;
    for (const auto& p : ps) {
      const PointLocation l = locate(g, p);
      for (std::size_t v : {l.lower, l.upper})
        if (slot[v] < 0) {
          slot[v] = static_cast<std::ptrdiff_t>(touched.size());
          touched.push_back(v);
        }
    }
    restricted_ = touched.size() <= kRestrictedVertexLimit && touched.size() < sys.size();
    if (restricted_) {
      const auto k = static_cast<Eigen::Index>(touched.size());
      Eigen::MatrixXd block(k, k);
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::VectorXd col = sys.covariance_column(touched[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i < k; ++i) block(i, j) = col(static_cast<Eigen::Index>(touched[static_cast<std::size_t>(i)]));
      }
      Eigen::LLT<Eigen::MatrixXd> llt(block);
      if (llt.info() != Eigen::Success) throw NumericalError("covariance block of L^{-1} is not positive definite");
      block_factor_ = llt.matrixL();
    }

    std::optional<std::size_t> current_edge;
    double prev_arc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const PointLocation l = locate(g, ps[i]);
      lower_[i] = restricted_ ? static_cast<std::size_t>(slot[l.lower]) : l.lower;
      upper_[i] = restricted_ ? static_cast<std::size_t>(slot[l.upper]) : l.upper;
      weight_[i] = l.weight;
      if (!l.edge) {
        steps_[i] = {0.0, 0.0};
        current_edge.reset();
        continue;
      }
      if (current_edge != l.edge) {
        current_edge = l.edge;
        prev_arc = 0.0;
      }
      steps_[i] = detail::bridge_step(l.edge_length, prev_arc, l.arc);
      if (prev_arc == 0.0) steps_[i].mean_coef = 0.0;  // B(0) = 0
      prev_arc = l.arc;
    }
  }

  std::size_t size() const { return lower_.size(); }
  bool restricted() const { return restricted_; }

  /// One copy of Z at every point, drawn from `rng`.
  void sample(RandomStream& rng, std::span<double> out) {
    if (restricted_) {
      const auto k = block_factor_.rows();
      noise_.resize(k);
      for (Eigen::Index i = 0; i < k; ++i) noise_(i) = rng.normal();
      vertex_values_.noalias() = block_factor_.triangularView<Eigen::Lower>() * noise_;
    } else {
      sys_->sample_vertices(rng, vertex_values_);
    }
    const double* v = vertex_values_.data();
    double bridge = 0.0;
    const std::size_t n = lower_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weight_[i];
      const auto& step = steps_[i];
      if (step.sd > 0.0) {
        bridge = step.mean_coef * bridge + step.sd * rng.normal();
      } else {
        bridge = 0.0;
      }
      out[i] = (1.0 - w) * v[lower_[i]] + w * v[upper_[i]] + bridge;
    }
  }

 private:
  const LaplacianSystem* sys_;
  bool restricted_ = false;
  Eigen::MatrixXd block_factor_;
  Eigen::VectorXd noise_;
  Eigen::VectorXd vertex_values_;
  std::vector<std::size_t> lower_;
  std::vector<std::size_t> upper_;
  std::vector<double> weight_;
  std::vector<detail::BridgeStep> steps_;
};

struct AuxFieldRealization {
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t rep = 0;
  std::uint64_t copy = 0;
};

/// One draw of the auxiliary field at every point of `ps`.
inline AuxFieldRealization simulate_aux_field(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps,
                                              std::uint64_t seed, std::uint64_t rep = 0, std::uint64_t copy = 0) {
  AuxFieldSampler sampler(g, sys, ps);
  RandomStream rng = rng_substream(seed, rep, copy, StreamRole::AuxField);
  AuxFieldRealization out;
  out.values.resize(ps.size());
  out.seed = seed;
  out.rep = rep;
  out.copy = copy;
  sampler.sample(rng, out.values);
  return out;
}

}  // namespace resfield
