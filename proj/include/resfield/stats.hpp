#pragma once

// Validation statistics: binned empirical semi-variograms and semi-madograms,
// Student tests against model curves, Shapiro-Wilk (Royston's AS R94),
// one-sample Kolmogorov-Smirnov, and the batched normality experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "resfield/covmodels.hpp"
#include "resfield/error.hpp"
#include "resfield/resistance.hpp"
#include "resfield/rng.hpp"
#include "resfield/simulate.hpp"

namespace resfield {

// ---------------------------------------------------------------------------
// Binning and pairs

inline constexpr std::size_t kDefaultBinCount = 15;
inline constexpr double kDefaultBinSpan = 0.9;  // bins cover [0, 0.9 * max d_R]
inline constexpr std::size_t kDefaultPairCap = 5'000'000;

inline std::vector<double> equal_width_bins(double max_distance, std::size_t count = kDefaultBinCount,
                                            double span = kDefaultBinSpan) {
  if (!(max_distance > 0.0)) throw ArgumentError("bins need a positive maximum distance");
  if (count == 0) throw ArgumentError("bin count must be positive");
  std::vector<double> edges(count + 1);
  const double width = span * max_distance / static_cast<double>(count);
  for (std::size_t k = 0; k <= count; ++k) edges[k] = width * static_cast<double>(k);
  return edges;
}

/// Test lags placed relative to the distance range of the network:
/// fractions {0.04, 0.2, 0.4, 0.6, 0.8, 1} of 0.75 * max d_R.
inline std::vector<double> scale_relative_lags(double max_distance) {
  std::vector<double> lags;
  for (double f : {0.04, 0.2, 0.4, 0.6, 0.8, 1.0}) lags.push_back(f * 0.75 * max_distance);
  return lags;
}

struct PointPair {
  std::uint32_t i;
  std::uint32_t j;
  std::uint32_t bin;
};

/// The pairs that fall into bins, optionally thinned. Above `cap` pairs each
/// pair is kept independently with probability cap / total, drawn from the
/// PairSubsample stream of `seed`.
struct PairIndex {
  std::vector<double> edges;
  std::vector<PointPair> pairs;
  std::vector<std::vector<double>> bin_distances;
  std::size_t total_pairs = 0;
  bool subsampled = false;

  std::size_t bin_count() const { return edges.size() - 1; }

  static PairIndex build(const ResistanceMatrix& dmat, std::vector<double> edges, std::size_t cap = kDefaultPairCap,
                         std::uint64_t seed = 0) {
    if (edges.size() < 2) throw ArgumentError("need at least two bin edges");
    for (std::size_t k = 1; k < edges.size(); ++k)
      if (!(edges[k] > edges[k - 1])) throw ArgumentError("bin edges must be strictly increasing");
    PairIndex idx;
    idx.edges = std::move(edges);
    idx.bin_distances.resize(idx.bin_count());
    const std::size_t n = dmat.size();
    idx.total_pairs = n < 2 ? 0 : n * (n - 1) / 2;
    idx.subsampled = idx.total_pairs > cap;
    const double keep = idx.subsampled ? static_cast<double>(cap) / static_cast<double>(idx.total_pairs) : 1.0;
    RandomStream rng = rng_substream(seed, 0, 0, StreamRole::PairSubsample);
    const double lo = idx.edges.front();
    const double hi = idx.edges.back();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (idx.subsampled && rng.uniform_open() >= keep) continue;
        const double d = dmat(i, j);
        if (d < lo || d >= hi) continue;
        const auto it = std::upper_bound(idx.edges.begin(), idx.edges.end(), d);
        const auto bin = static_cast<std::uint32_t>(it - idx.edges.begin() - 1);
        idx.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), bin});
        idx.bin_distances[bin].push_back(d);
      }
    return idx;
  }
};

// ---------------------------------------------------------------------------
// Empirical estimators

enum class Estimator { Semivariogram, Semimadogram };

struct VariogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double center = 0.0;
  std::size_t count = 0;
  double mean = 0.0;                // across replicates
  std::vector<double> per_rep;      // one estimate per replicate
  std::vector<double> distances;    // d_R of the contributing pairs
};

struct VariogramEstimate {
  Estimator kind = Estimator::Semivariogram;
  std::vector<VariogramBin> bins;  // nonempty bins only
  std::vector<std::string> notices;
  std::size_t reps = 0;
};

namespace detail {

inline VariogramEstimate binned_estimate(const RealizationSet& real, const PairIndex& idx, Estimator kind) {
  const std::size_t nb = idx.bin_count();
  std::vector<std::size_t> counts(nb, 0);
  for (const auto& pr : idx.pairs) {
    if (pr.i >= real.points || pr.j >= real.points) throw ArgumentError("pair index does not match the realization");
    ++counts[pr.bin];
  }

  VariogramEstimate est;
  est.kind = kind;
  est.reps = real.reps;
  std::vector<double> sums(nb);
  std::vector<std::vector<double>> per_rep(nb, std::vector<double>(real.reps));
  for (std::size_t r = 0; r < real.reps; ++r) {
    std::fill(sums.begin(), sums.end(), 0.0);
    const double* y = real.values.data() + r * real.points;
    if (kind == Estimator::Semivariogram) {
      for (const auto& pr : idx.pairs) {
        const double diff = y[pr.i] - y[pr.j];
        sums[pr.bin] += diff * diff;
      }
    } else {
      for (const auto& pr : idx.pairs) sums[pr.bin] += std::abs(y[pr.i] - y[pr.j]);
    }
    for (std::size_t b = 0; b < nb; ++b)
      if (counts[b] > 0) per_rep[b][r] = 0.5 * sums[b] / static_cast<double>(counts[b]);
  }

  for (std::size_t b = 0; b < nb; ++b) {
    if (counts[b] == 0) {
      est.notices.push_back("bin [" + format_double(idx.edges[b]) + ", " + format_double(idx.edges[b + 1]) +
                            ") has no pairs; omitted");
      continue;
    }
    VariogramBin bin;
    bin.lo = idx.edges[b];
    bin.hi = idx.edges[b + 1];
    bin.center = 0.5 * (bin.lo + bin.hi);
    bin.count = counts[b];
    bin.per_rep = std::move(per_rep[b]);
    bin.mean = std::accumulate(bin.per_rep.begin(), bin.per_rep.end(), 0.0) / static_cast<double>(real.reps);
    bin.distances = idx.bin_distances[b];
    est.bins.push_back(std::move(bin));
  }
  return est;
}

}  // namespace detail

/// Per bin and replicate, the mean of (Y(u) - Y(v))^2 / 2 over its pairs.
inline VariogramEstimate empirical_semivariogram(const RealizationSet& real, const PairIndex& idx) {
  return detail::binned_estimate(real, idx, Estimator::Semivariogram);
}

/// Per bin and replicate, the mean of |Y(u) - Y(v)| / 2 over its pairs.
inline VariogramEstimate empirical_semimadogram(const RealizationSet& real, const PairIndex& idx) {
  return detail::binned_estimate(real, idx, Estimator::Semimadogram);
}

inline VariogramEstimate empirical_semivariogram(const RealizationSet& real, const ResistanceMatrix& dmat,
                                                 std::vector<double> edges) {
  return empirical_semivariogram(real, PairIndex::build(dmat, std::move(edges)));
}

inline VariogramEstimate empirical_semimadogram(const RealizationSet& real, const ResistanceMatrix& dmat,
                                                std::vector<double> edges) {
  return empirical_semimadogram(real, PairIndex::build(dmat, std::move(edges)));
}

// ---------------------------------------------------------------------------
// Model curves and Student tests

inline double semivariogram_value(const CovarianceModel& m, double d) { return 1.0 - cov_value(m, d); }

inline double semimadogram_value(const CovarianceModel& m, double d) {
  return std::sqrt(std::max(0.0, semivariogram_value(m, d)) / std::numbers::pi);
}

struct TheoreticalCurves {
  std::vector<double> gamma2;  // semi-variogram
  std::vector<double> gamma1;  // semi-madogram of a Gaussian field
};

inline TheoreticalCurves theoretical_curves(const CovarianceModel& m, std::span<const double> lags) {
  TheoreticalCurves c;
  for (double d : lags) {
    if (!(d >= 0.0)) throw ArgumentError("lags must be nonnegative");
    c.gamma2.push_back(semivariogram_value(m, d));
    c.gamma1.push_back(semimadogram_value(m, d));
  }
  return c;
}

/// Expected value of a bin's estimate: the model curve averaged over the
/// distances of the pairs in the bin.
inline double bin_theory(const VariogramBin& bin, Estimator kind, const CovarianceModel& m) {
  double total = 0.0;
  for (double d : bin.distances)
    total += kind == Estimator::Semivariogram ? semivariogram_value(m, d) : semimadogram_value(m, d);
  return total / static_cast<double>(bin.distances.size());
}

inline double student_critical_value(std::size_t df, double level = 0.05) {
  if (df == 0) throw ArgumentError("Student test needs at least two replicates");
  boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(boost::math::complement(dist, level / 2.0));
}

struct LagTest {
  double requested_lag = 0.0;
  double lag_center = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double theory = 0.0;
  double t_stat = 0.0;
  std::size_t df = 0;
  double critical = 0.0;
  bool accept = false;
};

struct TTestReport {
  std::vector<LagTest> lags;
  std::size_t accepted() const {
    return static_cast<std::size_t>(std::count_if(lags.begin(), lags.end(), [](const LagTest& t) { return t.accept; }));
  }
};

/// T = (mean - theory) / (s / sqrt(R)) from replicate estimates.
inline LagTest student_test(std::span<const double> values, double theory, double level = 0.05) {
  const std::size_t r = values.size();
  if (r < 2) throw ArgumentError("Student test needs at least two replicates");
  LagTest t;
  t.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(r);
  double ss = 0.0;
  for (double v : values) ss += (v - t.mean) * (v - t.mean);
  const double s = std::sqrt(ss / static_cast<double>(r - 1));
  t.theory = theory;
  const double diff = t.mean - theory;
  if (s > 0.0) {
    t.t_stat = diff / (s / std::sqrt(static_cast<double>(r)));
  } else {
    t.t_stat = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  t.df = r - 1;
  t.critical = student_critical_value(t.df, level);
  t.accept = std::abs(t.t_stat) < t.critical;
  return t;
}

/// One test per nonempty bin.
inline std::vector<LagTest> bin_tests(const VariogramEstimate& est, const CovarianceModel& m, double level = 0.05) {
  std::vector<LagTest> out;
  for (const auto& bin : est.bins) {
    LagTest t = student_test(bin.per_rep, bin_theory(bin, est.kind, m), level);
    t.requested_lag = bin.center;
    t.lag_center = bin.center;
    t.count = bin.count;
    out.push_back(t);
  }
  return out;
}

/// Student tests at the nonempty bin centers nearest the requested lags.
inline TTestReport variogram_ttest(const VariogramEstimate& est, const CovarianceModel& m, std::span<const double> lags,
                                   double level = 0.05) {
  if (est.bins.empty()) throw ArgumentError("variogram estimate has no bins");
  TTestReport report;
  for (double lag : lags) {
    if (!(lag >= 0.0) || !std::isfinite(lag)) throw ArgumentError("lag must be finite and nonnegative");
    const auto best = std::min_element(est.bins.begin(), est.bins.end(), [&](const auto& x, const auto& y) {
      return std::abs(x.center - lag) < std::abs(y.center - lag);
    });
    LagTest t = student_test(best->per_rep, bin_theory(*best, est.kind, m), level);
    t.requested_lag = lag;
    t.lag_center = best->center;
    t.count = best->count;
    report.lags.push_back(t);
  }
  return report;
}

inline TTestReport madogram_ttest(const VariogramEstimate& est, const CovarianceModel& m, std::span<const double> lags,
                                  double level = 0.05) {
  if (est.kind != Estimator::Semimadogram) throw ArgumentError("madogram test needs a semi-madogram estimate");
  return variogram_ttest(est, m, lags, level);
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk

struct ShapiroWilkResult {
  double w = 0.0;
  double p_value = 0.0;
};

namespace detail {

inline double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
  return r;
}

}  // namespace detail

/// W statistic and p-value following Royston's algorithm AS R94.
inline ShapiroWilkResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) throw ArgumentError("Shapiro-Wilk needs 3 <= n <= 5000, got n=" + std::to_string(n));

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;

  // Coefficients for the lower half of the order statistics.
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    const boost::math::normal_distribution<double> std_normal;
    const double an25 = an + 0.25;
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = boost::math::quantile(std_normal, (static_cast<double>(i + 1) - 0.375) / an25);
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + detail::poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  const double range = x.back() - x.front();
  if (range < 1e-19) throw ArgumentError("Shapiro-Wilk: sample has zero range");

  // W as the squared correlation between the scaled order statistics and the
  // antisymmetric coefficient vector; 1 - W is formed directly for accuracy.
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    coef[i] = a[i];
    coef[n - 1 - i] = -a[i];
  }
  double sx = 0.0;
  double sa = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i] / range;
    sa += coef[i];
  }
  sx /= an;
  sa /= an;
  double ssa = 0.0;
  double ssx = 0.0;
  double sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef[i] - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  ShapiroWilkResult res;
  res.w = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 6.0 / std::numbers::pi;
    constexpr double stqr = std::numbers::pi / 3.0;
    res.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(res.w)) - stqr));
    return res;
  }
  double y = std::log(w1);
  const double xx = std::log(an);
  double mean;
  double sd;
  if (n <= 11) {
    const double gamma = detail::poly(g, an);
    if (y >= gamma) {
      res.p_value = 1e-99;
      return res;
    }
    y = -std::log(gamma - y);
    mean = detail::poly(c3, an);
    sd = std::exp(detail::poly(c4, an));
  } else {
    mean = detail::poly(c5, xx);
    sd = std::exp(detail::poly(c6, xx));
  }
  res.p_value = boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(mean, sd), y));
  return res;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Survival function of the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample test against a continuous CDF; asymptotic p-value with
/// Stephens' finite-sample correction.
inline KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
  const std::size_t n = sample.size();
  if (n == 0) throw ArgumentError("KS test needs a nonempty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double an = static_cast<double>(n);
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / an - f, f - static_cast<double>(i) / an});
  }
  const double sn = std::sqrt(an);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// Normality experiment

struct BinomialBand {
  double lo = 0.0;
  double hi = 0.0;
};

/// 5% and 95% quantiles of Binomial(trials, p), as proportions.
inline BinomialBand binomial_band(std::size_t trials, double p, double coverage = 0.90) {
  boost::math::binomial_distribution<double> dist(static_cast<double>(trials), p);
  const double tail = 0.5 * (1.0 - coverage);
  auto quantile = [&](double q) {
    for (std::size_t k = 0; k <= trials; ++k)
      if (boost::math::cdf(dist, static_cast<double>(k)) >= q - 1e-12) return static_cast<double>(k);
    return static_cast<double>(trials);
  };
  const double t = static_cast<double>(trials);
  return {quantile(tail) / t, quantile(1.0 - tail) / t};
}

inline std::vector<double> default_alpha_grid() {
  std::vector<double> alphas;
  for (int k = 1; k <= 20; ++k) alphas.push_back(0.01 * k);
  return alphas;
}

/// Fixed weights for the linear combination, Unif(-10, 10) from the Weights
/// stream of `seed`.
inline std::vector<double> draw_weights(std::size_t n, std::uint64_t seed) {
  RandomStream rng = rng_substream(seed, 0, 0, StreamRole::Weights);
  std::vector<double> w(n);
  for (auto& v : w) v = rng.uniform(-10.0, 10.0);
  return w;
}

/// n points on n distinct random edges at t ~ Unif(0.05, 0.95), from the
/// Locations stream of `seed`.
inline PointSet random_locations(const MetricGraph& g, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > g.edge_count()) throw ArgumentError("need 1 <= n <= edge count random locations");
  RandomStream rng = rng_substream(seed, 0, 1, StreamRole::Locations);
  std::vector<std::size_t> edges;
  std::vector<PointRef> pts;
  while (pts.size() < n) {
    const auto e = static_cast<std::size_t>(rng() % g.edge_count());
    if (std::find(edges.begin(), edges.end(), e) != edges.end()) continue;
    edges.push_back(e);
    pts.push_back(canonical_point(g, e, rng.uniform(0.05, 0.95)));
  }
  return PointSet::canonical(g, std::move(pts));
}

struct NormalityRow {
  double alpha = 0.0;
  double proportion = 0.0;
  BinomialBand band;
  bool in_band = false;
};

struct NormalityReport {
  std::vector<NormalityRow> rows;
  std::size_t batches = 0;
  std::size_t runs_per_batch = 0;
  std::vector<double> p_values;  // one per batch

  double fraction_in_band() const {
    if (rows.empty()) return 0.0;
    const auto k = std::count_if(rows.begin(), rows.end(), [](const NormalityRow& r) { return r.in_band; });
    return static_cast<double>(k) / static_cast<double>(rows.size());
  }
};

/// Rejection proportions of Shapiro-Wilk applied, batch by batch, to the
/// linear combination sum_i weights[i] * Y(u_i) over independent realizations.
inline NormalityReport normality_from_realizations(const RealizationSet& real, std::span<const double> weights,
                                                   std::size_t runs_per_batch, std::span<const double> alphas) {
  if (weights.size() != real.points) throw ArgumentError("need one weight per location");
  if (runs_per_batch < 3 || real.reps % runs_per_batch != 0)
    throw ArgumentError("replicates must split into batches of at least 3 runs");
  NormalityReport report;
  report.runs_per_batch = runs_per_batch;
  report.batches = real.reps / runs_per_batch;
  std::vector<double> combo(runs_per_batch);
  for (std::size_t b = 0; b < report.batches; ++b) {
    for (std::size_t r = 0; r < runs_per_batch; ++r) {
      const auto y = real.replicate(b * runs_per_batch + r);
      double s = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * y[i];
      combo[r] = s;
    }
    report.p_values.push_back(shapiro_wilk(combo).p_value);
  }
  for (double alpha : alphas) {
    NormalityRow row;
    row.alpha = alpha;
    const auto rejected = std::count_if(report.p_values.begin(), report.p_values.end(), [&](double p) { return p < alpha; });
    row.proportion = static_cast<double>(rejected) / static_cast<double>(report.batches);
    row.band = binomial_band(report.batches, alpha);
    row.in_band = row.proportion >= row.band.lo - 1e-12 && row.proportion <= row.band.hi + 1e-12;
    report.rows.push_back(row);
  }
  return report;
}

inline NormalityReport normality_experiment(const MetricGraph& g, const LaplacianSystem& sys, SimConfig cfg,
                                            const PointSet& locations, std::span<const double> weights,
                                            std::size_t runs_per_batch = 100, std::size_t batches = 100,
                                            std::span<const double> alphas = {}) {
  const std::vector<double> grid = alphas.empty() ? default_alpha_grid() : std::vector<double>(alphas.begin(), alphas.end());
  cfg.reps = runs_per_batch * batches;
  const RealizationSet real = simulate(g, sys, locations, cfg);
  return normality_from_realizations(real, weights, runs_per_batch, grid);
}

}  // namespace resfield
