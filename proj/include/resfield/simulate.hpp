#pragma once

// Spectral, Poisson-dilution and germ-dilution simulation of Gaussian random
// fields isotropic in the resistance metric.
//
// Every copy m of every replicate r reads its randomness from the substreams
// (seed, r, m, role), so a run is a pure function of its SimConfig. Copies are
// processed in blocks of kCopiesPerBlock; block partial sums are folded into
// the replicate in block order whatever the thread count, which makes the
// output bit-identical for 1 or N threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "resfield/covmodels.hpp"
#include "resfield/error.hpp"
#include "resfield/metric_graph.hpp"
#include "resfield/resistance.hpp"
#include "resfield/rng.hpp"
#include "resfield/text.hpp"

namespace resfield {

enum class Algorithm { Spectral, Poisson, Germ };

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Spectral:
      return "spectral";
    case Algorithm::Poisson:
      return "poisson";
    case Algorithm::Germ:
      return "germ";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  s = trim(s);
  if (s == "spectral") return Algorithm::Spectral;
  if (s == "poisson") return Algorithm::Poisson;
  if (s == "germ") return Algorithm::Germ;
  throw ParseError("unknown algorithm '" + std::string(s) + "' (expected spectral, poisson or germ)");
}

/// Importance density for the single germ of the germ-dilution algorithm.
struct GermDensity {
  enum class Kind { Cauchy, Normal };
  Kind kind = Kind::Cauchy;
  double location = 0.0;
  double scale = 1.0;

  double density(double x) const {
    const double u = (x - location) / scale;
    if (kind == Kind::Cauchy) return 1.0 / (std::numbers::pi * scale * (1.0 + u * u));
    return std::exp(-0.5 * u * u) / (scale * std::sqrt(2.0 * std::numbers::pi));
  }

  double sample(RandomStream& rng) const {
    if (kind == Kind::Cauchy) return location + scale * std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
    return location + scale * rng.normal();
  }

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ArgumentError("germ density scale must be positive");
    if (!std::isfinite(location)) throw ArgumentError("germ density location must be finite");
  }

  std::string to_string() const {
    return std::string(kind == Kind::Cauchy ? "cauchy" : "normal") + ":location=" + format_double(location) +
           ",scale=" + format_double(scale);
  }

  friend bool operator==(const GermDensity&, const GermDensity&) = default;
};

/// `cauchy`, `normal`, optionally followed by `:location=..,scale=..`.
inline GermDensity parse_germ_density(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  const std::string_view head = trim(spec.substr(0, colon));
  GermDensity d;
  if (head == "cauchy") {
    d.kind = GermDensity::Kind::Cauchy;
  } else if (head == "normal") {
    d.kind = GermDensity::Kind::Normal;
  } else {
    throw ParseError("unknown germ density '" + std::string(head) + "' (expected cauchy or normal)");
  }
  if (colon != std::string_view::npos) {
    for (const std::string& item : split_csv_line(spec.substr(colon + 1))) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParseError("germ density parameter '" + item + "' lacks '='");
      const std::string key(trim(std::string_view(item).substr(0, eq)));
      const double value = parse_double(std::string_view(item).substr(eq + 1), "germ density parameter");
      if (key == "location") {
        d.location = value;
      } else if (key == "scale") {
        d.scale = value;
      } else {
        throw ParseError("unknown germ density parameter '" + key + "'");
      }
    }
  }
  d.validate();
  return d;
}

struct SimConfig {
  Algorithm algorithm = Algorithm::Spectral;
  CovarianceModel model;
  std::size_t copies = 1000;  // M
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  double lo = -50.0;  // Poisson interval I = [lo, hi]
  double hi = 50.0;
  bool adaptive_interval = false;  // Poisson with compact f: I spans each copy's Z range
  GermDensity germ;
  unsigned threads = 1;  // 0 = hardware concurrency; never affects the output

  void validate() const {
    model.validate();
    if (copies == 0) throw ArgumentError("M (copies) must be positive");
    if (reps == 0) throw ArgumentError("reps must be positive");
    switch (algorithm) {
      case Algorithm::Spectral:
        if (!is_spectral(model.family))
          throw ArgumentError("spectral algorithm needs an S-family model, got " + model.to_string());
        if (!has_spectral_sampler(model.family))
          throw ArgumentError("S5 sampler withheld: the published spectral density is invalid");
        break;
      case Algorithm::Poisson:
        if (!is_dilution(model.family))
          throw ArgumentError("poisson algorithm needs a D-family model, got " + model.to_string());
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
          throw ArgumentError("poisson interval needs finite lo < hi");
        if (adaptive_interval && !dilution_support_halfwidth(model))
          throw ArgumentError("adaptive interval needs a compactly supported dilution function (D1)");
        break;
      case Algorithm::Germ:
        if (!is_dilution(model.family))
          throw ArgumentError("germ algorithm needs a D-family model, got " + model.to_string());
        germ.validate();
        break;
    }
  }
};

/// Observed auxiliary-field range for a Poisson run with a fixed interval,
/// and the resulting bound on the covariance truncation bias: the f^2 mass
/// that falls outside I for the most extreme Z value seen on either side.
struct PoissonDiagnostics {
  double z_min = std::numeric_limits<double>::infinity();
  double z_max = -std::numeric_limits<double>::infinity();
  double truncation_bound = 0.0;
};

struct RealizationSet {
  std::size_t points = 0;
  std::size_t reps = 0;
  std::vector<double> values;  // replicate-major: values[r * points + p]
  SimConfig config;
  double wall_seconds = 0.0;
  std::optional<PoissonDiagnostics> poisson;

  double at(std::size_t p, std::size_t r) const { return values[r * points + p]; }
  std::span<const double> replicate(std::size_t r) const { return {values.data() + r * points, points}; }
};

inline constexpr std::size_t kCopiesPerBlock = 32;

namespace detail {

/// Calls `body(f)` with f a cheap callable for the model's dilution
/// function, so the family switch stays outside the per-point loop.
template <class Body>
void with_dilution_kernel(const CovarianceModel& m, Body&& body) {
  const double a = m.a;
  switch (m.family) {
    case Family::D1: {
      const double c = 1.0 / std::sqrt(a);
      const double half = 0.5 * a;
      body([c, half](double t) { return std::abs(t) <= half ? c : 0.0; });
      break;
    }
    case Family::D2: {
      const double c = std::pow(2.0 / std::numbers::pi, 0.25) * std::sqrt(a);
      const double a2 = a * a;
      body([c, a2](double t) { return c * std::exp(-a2 * t * t); });
      break;
    }
    default:
      body([&m](double t) { return dilution_eval(m, t); });
      break;
  }
}

/// Per-thread state: its own sampler (which owns scratch buffers) and buffers.
struct Worker {
  AuxFieldSampler sampler;
  std::vector<double> z;
  std::vector<double> partial;
  PoissonDiagnostics diag;

  Worker(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps)
      : sampler(g, sys, ps), z(ps.size()), partial(ps.size()) {}
};

inline void add_copy(const SimConfig& cfg, Worker& w, std::size_t rep, std::size_t copy) {
  const std::size_t n = w.z.size();
  RandomStream aux = rng_substream(cfg.seed, rep, copy, StreamRole::AuxField);
  w.sampler.sample(aux, w.z);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(cfg.copies));
  const double* z = w.z.data();
  double* out = w.partial.data();

  switch (cfg.algorithm) {
    case Algorithm::Spectral: {
      RandomStream rng = rng_substream(cfg.seed, rep, copy, StreamRole::Spectral);
      const double v = rng.uniform_open();
      const double phase = 2.0 * std::numbers::pi * rng.uniform_open();
      const double omega = sample_spectral(cfg.model, rng);
      const double amp = std::sqrt(-2.0 * std::log(v)) * inv_sqrt_m;
      for (std::size_t p = 0; p < n; ++p) out[p] += amp * std::cos(omega * z[p] + phase);
      break;
    }
    case Algorithm::Poisson: {
      RandomStream rng = rng_substream(cfg.seed, rep, copy, StreamRole::Poisson);
      double lo = cfg.lo;
      double hi = cfg.hi;
      const auto [zmin, zmax] = std::minmax_element(z, z + n);
      if (cfg.adaptive_interval) {
        const double half = *dilution_support_halfwidth(cfg.model);
        lo = *zmin - half;
        hi = *zmax + half;
      } else {
        w.diag.z_min = std::min(w.diag.z_min, *zmin);
        w.diag.z_max = std::max(w.diag.z_max, *zmax);
      }
      std::poisson_distribution<long> count(hi - lo);
      const long germs = count(rng);
      with_dilution_kernel(cfg.model, [&](auto f) {
        for (long k = 0; k < germs; ++k) {
          const double x = rng.uniform(lo, hi);
          const double weight = rng.rademacher() * inv_sqrt_m;
          for (std::size_t p = 0; p < n; ++p) out[p] += weight * f(z[p] - x);
        }
      });
      break;
    }
    case Algorithm::Germ: {
      RandomStream rng = rng_substream(cfg.seed, rep, copy, StreamRole::Germ);
      const double x = cfg.germ.sample(rng);
      const double density = cfg.germ.density(x);
      const double weight = rng.rademacher() * inv_sqrt_m / std::sqrt(density);
      if (!(density > 0.0) || !std::isfinite(weight))
        throw NumericalError("germ density underflow at x=" + format_double(x) +
                             "; use a heavier-tailed or wider germ density");
      with_dilution_kernel(cfg.model, [&](auto f) {
        for (std::size_t p = 0; p < n; ++p) out[p] += weight * f(z[p] - x);
      });
      break;
    }
  }
}

}  // namespace detail

/// Runs cfg.reps replicates at every point of `ps`. `sys` is factorized once
/// by the caller and shared read-only by all threads.
inline RealizationSet simulate(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps,
                               const SimConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = ps.size();
  const std::size_t blocks = (cfg.copies + kCopiesPerBlock - 1) / kCopiesPerBlock;
  const std::size_t items = cfg.reps * blocks;

  RealizationSet out;
  out.points = n;
  out.reps = cfg.reps;
  out.values.assign(n * cfg.reps, 0.0);
  out.config = cfg;

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, items));

  std::atomic<std::size_t> next_item{0};
  std::size_t reduced = 0;  // items folded so far, guarded by mu
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::condition_variable cv;
  std::vector<PoissonDiagnostics> diags(threads);

  auto run = [&](unsigned tid) {
    try {
      detail::Worker w(g, sys, ps);
      while (true) {
        const std::size_t item = next_item.fetch_add(1);
        if (item >= items) break;
        const std::size_t rep = item / blocks;
        const std::size_t block = item % blocks;
        std::fill(w.partial.begin(), w.partial.end(), 0.0);
        const std::size_t first = block * kCopiesPerBlock;
        const std::size_t last = std::min(cfg.copies, first + kCopiesPerBlock);
        for (std::size_t copy = first; copy < last; ++copy) {
          if (failed) return;
          detail::add_copy(cfg, w, rep, copy);
        }
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return failed || reduced == item; });
        if (failed) return;
        double* dst = out.values.data() + rep * n;
        for (std::size_t p = 0; p < n; ++p) dst[p] += w.partial[p];
        ++reduced;
        cv.notify_all();
      }
      diags[tid] = w.diag;
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
      failed = true;
      cv.notify_all();
    }
  };

  if (threads <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run, t);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  if (cfg.algorithm == Algorithm::Poisson && !cfg.adaptive_interval) {
    PoissonDiagnostics d;
    for (const auto& t : diags) {
      d.z_min = std::min(d.z_min, t.z_min);
      d.z_max = std::max(d.z_max, t.z_max);
    }
    d.truncation_bound = dilution_tail_mass(cfg.model, d.z_min - cfg.lo) + dilution_tail_mass(cfg.model, cfg.hi - d.z_max);
    out.poisson = d;
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline RealizationSet simulate_spectral(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps,
                                        SimConfig cfg) {
  cfg.algorithm = Algorithm::Spectral;
  return simulate(g, sys, ps, cfg);
}

inline RealizationSet simulate_poisson_dilution(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps,
                                                SimConfig cfg) {
  cfg.algorithm = Algorithm::Poisson;
  return simulate(g, sys, ps, cfg);
}

inline RealizationSet simulate_germ_dilution(const MetricGraph& g, const LaplacianSystem& sys, const PointSet& ps,
                                             SimConfig cfg) {
  cfg.algorithm = Algorithm::Germ;
  return simulate(g, sys, ps, cfg);
}

}  // namespace resfield
