#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "support.hpp"

using namespace resfield;

namespace {

CovarianceModel model(Family f, double a, double tau = 1.0) {
  CovarianceModel m;
  m.family = f;
  m.a = a;
  m.tau = tau;
  return m;
}

std::vector<double> d_grid(double a) {
  // 0 plus a log grid from 1e-3 to 1e3 * (2 / a^2).
  std::vector<double> d{0.0};
  const double hi = 1e3 * 2.0 / (a * a);
  for (int k = 0; k < 29; ++k) d.push_back(1e-3 * std::pow(hi / 1e-3, k / 28.0));
  return d;
}

// Golub-Welsch nodes and weights for weight exp(-x^2).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> x(n), w(n);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    w[k] = std::sqrt(std::numbers::pi) * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
  return {x, w};
}

// Golub-Welsch nodes and weights for unit weight on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> x(n), w(n);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    w[k] = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
  return {x, w};
}

}  // namespace

TEST(CovValue, Examples) {
  EXPECT_EQ(cov_value(model(Family::S1, 0.2), 0.0), 1.0);
  EXPECT_NEAR(cov_value(model(Family::S1, 0.2), 50.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(cov_value(model(Family::S6, 1.0, 1.0), 2.0), 0.5, 1e-15);
  EXPECT_NEAR(cov_value(model(Family::D2, 0.2), 25.0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(CovValue, UnitAtOriginAndMonotone) {
  for (Family f : kAllFamilies) {
    const CovarianceModel m = model(f, 0.7, 1.5);
    EXPECT_EQ(cov_value(m, 0.0), 1.0) << family_name(f);
    double prev = 1.0;
    for (double d : d_grid(m.a)) {
      const double c = cov_value(m, d);
      EXPECT_LE(c, prev + 1e-15) << family_name(f) << " d=" << d;
      // Positive until the tail underflows double precision.
      if (d <= 100.0 * 2.0 / (m.a * m.a)) {
        EXPECT_GT(c, 0.0) << family_name(f) << " d=" << d;
      }
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
      prev = c;
    }
  }
  EXPECT_THROW(cov_value(model(Family::S1, 1.0), -1.0), ArgumentError);
}

TEST(ParseModel, RoundTripAndErrors) {
  const CovarianceModel m = parse_model("S6:a=0.5,tau=2");
  EXPECT_EQ(m.family, Family::S6);
  EXPECT_DOUBLE_EQ(m.a, 0.5);
  EXPECT_DOUBLE_EQ(m.tau, 2.0);
  EXPECT_EQ(parse_model(m.to_string()).to_string(), m.to_string());
  EXPECT_EQ(parse_model("D2:a=0.2").family, Family::D2);
  EXPECT_THROW(parse_model("X9:a=1"), ParseError);
  EXPECT_THROW(parse_model("S1"), ParseError);
  EXPECT_THROW(parse_model("S1:a=-1"), ArgumentError);
}

TEST(CovOracle, PointMassIsExact) {
  const CovarianceModel m = model(Family::S1, 0.3);
  for (double d : d_grid(m.a)) EXPECT_EQ(cov_oracle(m, d), cov_value(m, d));
}

TEST(CovOracle, S6Grid) {
  const CovarianceModel m = model(Family::S6, 1.0, 1.0);
  for (double d = 0.1; d <= 10.0 + 1e-12; d += 0.1) EXPECT_NEAR(cov_oracle(m, d), cov_value(m, d), 1e-6) << d;
}

TEST(CovOracle, AllFamiliesOnLogGrid) {
  for (Family f : kAllFamilies)
    for (double a : {0.2, 1.0}) {
      const CovarianceModel m = model(f, a, 0.75);
      for (double d : d_grid(a))
        EXPECT_NEAR(cov_oracle(m, d), cov_value(m, d), 1e-6) << family_name(f) << " a=" << a << " d=" << d;
    }
}

TEST(CovOracle, CauchyAndBesselAgree) {
  for (double a : {0.2, 1.0, 3.0})
    for (double d : {0.01, 0.5, 2.0, 20.0})
      EXPECT_NEAR(cov_oracle(model(Family::S3, a), d), cov_oracle(model(Family::D3, a), d), 1e-6) << a << " " << d;
}

TEST(SpectralDensity, IsAProbabilityDensity) {
  for (Family f : {Family::S2, Family::S3, Family::S4, Family::S5, Family::S6, Family::S7, Family::S8}) {
    const CovarianceModel m = model(f, 0.8, 1.3);
    // Substitution w = tan(u) maps the real line to (-pi/2, pi/2).
    auto g = [&](double u) {
      const double c = std::cos(u);
      const double w = std::tan(u);
      const double v = spectral_density(m, w) / (c * c);
      return std::isfinite(v) ? v : 0.0;
    };
    double total = 0.0;
    // Split at the kinks and singularities of the compact/shifted densities.
    const double h = std::numbers::pi / 2;
    std::vector<double> cuts{-h, -std::atan(std::sqrt(2.0) * m.a), -std::atan(m.a), 0.0, std::atan(m.a),
                             std::atan(std::sqrt(2.0) * m.a), h};
    for (std::size_t k = 1; k < cuts.size(); ++k)
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, cuts[k - 1], cuts[k], 20, 1e-12);
    EXPECT_NEAR(total, 1.0, 2e-4) << family_name(f);
    for (double w : {-3.0, -0.5, 0.1, 1.0, 1.2, 5.0}) EXPECT_GE(spectral_density(m, w), 0.0);
  }
}

TEST(SampleSpectral, PointMass) {
  RandomStream rng = rng_substream(1, 0, 0, StreamRole::Test);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(sample_spectral(model(Family::S1, 0.37), rng), 0.37);
}

TEST(SampleSpectral, UniformPassesKs) {
  RandomStream rng = rng_substream(2, 0, 0, StreamRole::Test);
  const double a = 1.5;
  std::vector<double> w(10000);
  for (auto& v : w) v = sample_spectral(model(Family::S2, a), rng);
  const KsResult ks = ks_test(w, [a](double x) { return std::clamp((x + a) / (2 * a), 0.0, 1.0); });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(SampleSpectral, S8MixtureAtUnitDistance) {
  const CovarianceModel m = model(Family::S8, 0.9);
  RandomStream rng = rng_substream(3, 0, 0, StreamRole::Test);
  std::vector<double> v(100000);
  for (auto& x : v) {
    const double w = sample_spectral(m, rng);
    x = std::exp(-w * w / 2.0);
  }
  EXPECT_TRUE(rftest::within(rftest::summarize(v), std::exp(-m.a * std::sqrt(0.5))));
}

TEST(SampleSpectral, GaussianMixtureMatchesClosedForm) {
  for (Family f : {Family::S2, Family::S3, Family::S4, Family::S6, Family::S7, Family::S8}) {
    const CovarianceModel m = model(f, 0.6, 2.5);
    for (double d : {0.5 / (m.a * m.a), 2.0 / (m.a * m.a)}) {
      RandomStream rng = rng_substream(4, static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(d * 100), StreamRole::Test);
      std::vector<double> v(100000);
      for (auto& x : v) {
        const double w = sample_spectral(m, rng);
        x = std::exp(-d * w * w / 2.0);
      }
      const auto s = rftest::summarize(v);
      EXPECT_TRUE(rftest::within(s, cov_value(m, d))) << family_name(f) << " d=" << d << ": " << s.mean << " +- " << s.se
                                                      << " vs " << cov_value(m, d);
    }
  }
}

TEST(SampleSpectral, S5Withheld) {
  RandomStream rng = rng_substream(5, 0, 0, StreamRole::Test);
  EXPECT_THROW(sample_spectral(model(Family::S5, 1.0), rng), ArgumentError);
  EXPECT_FALSE(has_spectral_sampler(Family::S5));
}

TEST(Dilution, Examples) {
  EXPECT_EQ(dilution_eval(model(Family::D1, 1.0), 0.4), 1.0);
  EXPECT_EQ(dilution_eval(model(Family::D1, 1.0), 0.6), 0.0);
  EXPECT_NEAR(dilution_eval(model(Family::D2, 1.0), 0.0), std::pow(2.0 / std::numbers::pi, 0.25), 1e-15);
}

TEST(Dilution, BesselKernelHasUnitMass) {
  for (double a : {0.2, 1.0, 4.0}) {
    const CovarianceModel m = model(Family::D3, a);
    auto f2 = [&](double t) {
      const double v = dilution_eval(m, t);
      return v * v;
    };
    // Split at the clamp and at the decay scale.
    const double c = d3_clamp(a);
    double mass = 2.0 * c * f2(0.0);
    double lo = c;
    for (double hi : {1e-4 / a, 1e-2 / a, 1.0 / a, 10.0 / a, 80.0 / a}) {
      mass += 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f2, lo, hi, 20, 1e-12);
      lo = hi;
    }
    EXPECT_NEAR(mass, 1.0, 1e-4) << a;
  }
}

TEST(TransitiveCovariogram, Examples) {
  EXPECT_EQ(transitive_covariogram(model(Family::D1, 1.0), 0.0), 1.0);
  EXPECT_EQ(transitive_covariogram(model(Family::D1, 1.0), 1.0), 0.0);
  EXPECT_EQ(transitive_covariogram(model(Family::D2, 0.3), 0.0), 1.0);
  EXPECT_NEAR(transitive_covariogram(model(Family::D3, 0.3), 0.0), 1.0, 1e-6);
}

TEST(TransitiveCovariogram, Symmetric) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (Family f : {Family::D1, Family::D2, Family::D3})
    for (int k = 0; k < 10; ++k) {
      const CovarianceModel m = model(f, 0.8);
      const double h = u(gen);
      EXPECT_EQ(transitive_covariogram(m, h), transitive_covariogram(m, -h));
    }
}

TEST(TransitiveCovariogram, GaussHermiteMixtureMatchesClosedForm) {
  // D2 only: psi is smooth there. D1's triangle and D3's exp(-a|h|) have a
  // kink at 0 (and D1 compact support), where 64 symmetric nodes stall near 1e-2.
  const auto [x, w] = gauss_hermite(64);
  const CovarianceModel m = model(Family::D2, 0.5);
  for (double d : {0.05, 1.0, 8.0}) {
    // E psi(sqrt(d) Z) with Z ~ N(0,1) is (1/sqrt(pi)) sum w_k psi(sqrt(2d) x_k).
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * transitive_covariogram(m, std::sqrt(2.0 * d) * x[k]);
    s /= std::sqrt(std::numbers::pi);
    EXPECT_NEAR(s, cov_value(m, d), 1e-6) << "d=" << d;
  }
}

TEST(TransitiveCovariogram, D3IsExponential) {
  const CovarianceModel m = model(Family::D3, 0.5);
  for (double h : {0.0, 0.01, 0.3, 1.0, 4.0, 12.0})
    EXPECT_NEAR(transitive_covariogram(m, h), std::exp(-0.5 * h), 2e-6) << "h=" << h;
}

TEST(TransitiveCovariogram, HalfLineMixtureMatchesClosedForm) {
  // 2 * integral over z in [0, zmax] of psi(sqrt(d) z) phi(z), with the kink
  // at the endpoint; zmax is the D1 support edge or 12.
  const auto [x, w] = gauss_legendre(64);
  for (Family f : {Family::D1, Family::D2, Family::D3}) {
    const CovarianceModel m = model(f, 0.5);
    for (double d : {0.05, 1.0, 8.0, 40.0}) {
      const double sd = std::sqrt(d);
      const double zmax = f == Family::D1 ? std::min(m.a / sd, 12.0) : 12.0;
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double z = 0.5 * zmax * (x[k] + 1.0);
        s += w[k] * transitive_covariogram(m, sd * z) * std::exp(-0.5 * z * z);
      }
      s *= zmax / std::sqrt(2.0 * std::numbers::pi);
      EXPECT_NEAR(s, cov_value(m, d), 1e-6) << family_name(f) << " d=" << d;
    }
  }
}

TEST(DilutionTail, BoundsAndLimits) {
  for (Family f : {Family::D1, Family::D2, Family::D3}) {
    const CovarianceModel m = model(f, 0.7);
    EXPECT_NEAR(dilution_tail_mass(m, 1e-12), 0.5, 1e-4) << family_name(f);
    double prev = 0.5;
    for (double r : {0.1, 0.5, 1.0, 3.0, 10.0}) {
      const double t = dilution_tail_mass(m, r);
      EXPECT_LE(t, prev + 1e-12);
      EXPECT_GE(t, 0.0);
      prev = t;
    }
  }
  EXPECT_EQ(dilution_tail_mass(model(Family::D1, 1.0), 0.5), 0.0);
}
