#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qsllab/bath.hpp"
#include "qsllab/error.hpp"

using namespace qsllab;
using namespace qsllab::bath;

namespace {

constexpr double kPi = std::numbers::pi;

double gamma_zero_temperature(double lambda, double wc, double t) {
  return 2.0 * lambda * std::log1p(wc * wc * t * t);
}

}  // namespace

TEST(SpectralDensity, Examples) {
  EXPECT_EQ(spectral_density(OhmicLikeSpec{0.2, 50.0, 1.0}, 0.0), 0.0);
  EXPECT_NEAR(spectral_density(OhmicLikeSpec{0.2, 50.0, 1.0}, 50.0),
              0.2 * 50.0 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(spectral_density(OhmicLikeSpec{0.2, 50.0, 1.0}, 50.0), 3.679, 1e-3);
  EXPECT_NEAR(spectral_density(DrudeSpec{0.05, 5.0}, 5.0), 0.05 / kPi, 1e-15);
  EXPECT_THROW(spectral_density(OhmicLikeSpec{0.2, 50.0, 1.0}, -1.0), DomainError);
}

TEST(SpectralDensity, SubOhmicFormula) {
  const OhmicLikeSpec s{0.3, 10.0, 0.6};
  for (double w : {0.01, 0.5, 3.0, 40.0}) {
    EXPECT_NEAR(spectral_density(s, w),
                0.3 * std::pow(w, 0.6) * std::pow(10.0, 0.4) * std::exp(-w / 10.0),
                1e-13);
  }
}

TEST(SpectralDensity, InvalidSpecs) {
  EXPECT_THROW(validate(OhmicLikeSpec{0.2, 50.0, 0.0}), ParameterError);
  EXPECT_THROW(validate(OhmicLikeSpec{0.2, 0.0, 1.0}), ParameterError);
  EXPECT_THROW(validate(OhmicLikeSpec{-0.1, 50.0, 1.0}), ParameterError);
  EXPECT_THROW(validate(DrudeSpec{0.05, -1.0}), ParameterError);
}

TEST(Correlation, DecoupledBathIsZero) {
  const auto c = correlation_function(OhmicLikeSpec{0.0, 50.0, 1.0}, 1.0, 0.3);
  EXPECT_EQ(std::abs(c), 0.0);
}

TEST(Correlation, ImaginaryPartClosedForm) {
  const double lambda = 0.2, wc = 5.0;
  for (double T : {0.0, 1.0, 10.0}) {
    for (double t : {0.05, 0.3, 1.0}) {
      const auto c = correlation_function(OhmicLikeSpec{lambda, wc, 1.0}, T, t);
      const double u = 1.0 + wc * wc * t * t;
      const double expect = -lambda * 2.0 * wc * wc * wc * t / (u * u);
      EXPECT_NEAR(c.imag(), expect, 1e-8 * std::abs(expect)) << T << " " << t;
    }
  }
}

TEST(DecoherenceFactor, ZeroAtOrigin) {
  EXPECT_EQ(decoherence_factor(OhmicLikeSpec{0.2, 50.0, 1.0}, 1.0, 0.0).value, 0.0);
  EXPECT_EQ(decoherence_factor(OhmicLikeSpec{0.2, 50.0, 0.5}, 0.0, 0.0).value, 0.0);
}

TEST(DecoherenceFactor, ZeroTemperatureExample) {
  const double g = decoherence_factor(OhmicLikeSpec{0.2, 50.0, 1.0}, 0.0, 0.3).value;
  EXPECT_NEAR(g, 0.4 * std::log(226.0), 1e-8 * g);
  EXPECT_NEAR(g, 2.1682, 1e-4);
}

TEST(DecoherenceFactor, ZeroTemperatureOracleSweep) {
  for (double lambda : {0.001, 0.2}) {
    for (double t : {1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0}) {
      const double expect = gamma_zero_temperature(lambda, 50.0, t);
      const double g =
          decoherence_factor(OhmicLikeSpec{lambda, 50.0, 1.0}, 0.0, t).value;
      EXPECT_NEAR(g, expect, 1e-8 * expect) << lambda << " " << t;
    }
  }
}

TEST(DecoherenceFactor, TinyTemperatureIsZero) {
  const OhmicLikeSpec s{0.2, 50.0, 1.0};
  EXPECT_EQ(decoherence_factor(s, 1e-13, 0.7).value,
            decoherence_factor(s, 0.0, 0.7).value);
}

TEST(DecoherenceFactor, HighTemperatureAsymptote) {
  const double lambda = 0.001, wc = 50.0, T = 100.0, t = 1.0;
  const double expect =
      8.0 * lambda * T *
      (t * std::atan(wc * t) - std::log1p(wc * wc * t * t) / (2.0 * wc));
  const double g = decoherence_factor(OhmicLikeSpec{lambda, wc, 1.0}, T, t).value;
  EXPECT_NEAR(g, expect, 0.02 * expect);
}

TEST(DecoherenceFactor, MonotoneInTemperature) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const OhmicLikeSpec s{0.001 + 0.3 * u(rng), 1.0 + 60.0 * u(rng),
                          0.3 + 1.2 * u(rng)};
    const double t = 0.01 + 3.0 * u(rng);
    double prev = -1.0;
    for (double T : {0.0, 0.1, 0.5, 1.0, 3.0, 10.0}) {
      const double g = decoherence_factor(s, T, t).value;
      EXPECT_GE(g, 0.0);
      EXPECT_GE(g, prev * (1.0 - 1e-10));
      prev = g;
    }
  }
}

TEST(DecoherenceFactor, LinearInCoupling) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = 0.001 + 0.2 * u(rng);
    const double wc = 1.0 + 50.0 * u(rng);
    const double s = 0.3 + 1.2 * u(rng);
    const double T = 5.0 * u(rng);
    const double t = 0.01 + 2.0 * u(rng);
    const double g1 = decoherence_factor(OhmicLikeSpec{lambda, wc, s}, T, t).value;
    const double g2 =
        decoherence_factor(OhmicLikeSpec{2.0 * lambda, wc, s}, T, t).value;
    EXPECT_NEAR(g2, 2.0 * g1, 1e-10 * g2);
  }
}

TEST(DecoherenceFactor, TighterToleranceWithinReportedError) {
  const OhmicLikeSpec s{0.2, 50.0, 0.6};
  quad::Options loose = default_options();
  quad::Options tight = loose;
  tight.rel_tol *= 0.5;
  tight.abs_tol *= 0.5;
  for (double t : {0.05, 0.5, 2.0}) {
    const Value a = decoherence_factor(s, 1.0, t, loose);
    const Value b = decoherence_factor(s, 1.0, t, tight);
    EXPECT_LE(std::abs(a.value - b.value), a.error + b.error + 1e-15 * a.value);
  }
}

TEST(DecoherenceSamples, MatchesSinglePoints) {
  const OhmicLikeSpec s{0.2, 50.0, 1.0};
  const std::vector<double> times{0.0, 0.01, 0.2, 1.0, 2.5};
  const DecoherenceSamples d = decoherence_samples(s, 1.0, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double g = decoherence_factor(s, 1.0, times[i]).value;
    const double r = decoherence_rate(s, 1.0, times[i]).value;
    EXPECT_NEAR(d.gamma[i], g, 1e-9 + 1e-8 * g);
    EXPECT_NEAR(d.rate[i], r, 1e-9 + 1e-8 * std::abs(r));
  }
  EXPECT_EQ(d.gamma[0], 0.0);
}

TEST(DecoherenceRate, MatchesCentralDifference) {
  const OhmicLikeSpec s{0.2, 20.0, 1.0};
  const double h = 1e-4;
  for (double t : {0.1, 0.7, 2.0}) {
    const double fd = (decoherence_factor(s, 1.0, t + h).value -
                       decoherence_factor(s, 1.0, t - h).value) /
                      (2.0 * h);
    EXPECT_NEAR(decoherence_rate(s, 1.0, t).value, fd, 1e-6 * std::abs(fd));
  }
}

TEST(Pulsed, DecoupledIsZero) {
  EXPECT_EQ(decoherence_factor_pulsed(OhmicLikeSpec{0.0, 20.0, 1.0}, 1.0, 7, 0.05).value,
            0.0);
}

TEST(Pulsed, FasterPulsesSuppressDecoherence) {
  const OhmicLikeSpec s{0.2, 20.0, 1.0};
  const double slow = decoherence_factor_pulsed(s, 1.0, 10, 0.05).value;
  const double fast = decoherence_factor_pulsed(s, 1.0, 100, 0.005).value;
  EXPECT_LT(fast, slow);
  EXPECT_GT(fast, 0.0);
}

TEST(Pulsed, InvalidInterval) {
  EXPECT_THROW(decoherence_factor_pulsed(OhmicLikeSpec{0.2, 20.0, 1.0}, 1.0, 3, 0.0),
               ParameterError);
}

TEST(Pulsed, FilterFiniteAtPoles) {
  for (int n : {1, 4, 25}) {
    const double dt = 0.05;
    // (1 - cos(w 2 N dt)) tan^2(w dt / 2) -> 8 N^2 as w -> (2k+1) pi / dt.
    const double limit = 8.0 * n * n;
    EXPECT_NEAR(pulse_filter_pole_limit(n), limit, 1e-12 * limit);
    for (int k : {0, 3}) {
      const double pole = (2 * k + 1) * kPi / dt;
      EXPECT_NEAR(pulse_filter(pole, n, dt), limit, 1e-9 * limit);
      for (double off : {-1e-6, 1e-6}) {
        const double v = pulse_filter(pole + off, n, dt);
        ASSERT_TRUE(std::isfinite(v));
        EXPECT_NEAR(v, limit, 1e-4 * limit);
      }
    }
  }
}

TEST(Pulsed, LatticeMatchesSingleEvaluations) {
  const OhmicLikeSpec s{0.2, 20.0, 1.0};
  const auto lattice = decoherence_factor_pulsed_lattice(s, 1.0, 12, 0.05);
  ASSERT_EQ(lattice.size(), 13u);
  EXPECT_EQ(lattice[0].value, 0.0);
  for (int n : {1, 5, 12}) {
    const double g = decoherence_factor_pulsed(s, 1.0, n, 0.05).value;
    EXPECT_NEAR(lattice[n].value, g, 1e-7 * g);
  }
}

TEST(DrudeExpansion, Amplitudes) {
  const ExponentialExpansion e = drude_expansion(DrudeSpec{0.05, 5.0}, 5.0, 3);
  ASSERT_EQ(e.terms.size(), 4u);
  EXPECT_NEAR(e.terms[0].amplitude.real(), 0.25 / std::tan(0.5), 1e-14);
  EXPECT_NEAR(e.terms[0].amplitude.real(), 0.4576, 1e-4);
  EXPECT_NEAR(e.terms[0].amplitude.imag(), -0.25, 1e-15);
  EXPECT_EQ(e.terms[0].rate, 5.0);
  for (int k = 1; k <= 3; ++k) {
    const double nu = 2.0 * k * kPi * 5.0;
    EXPECT_NEAR(e.terms[k].rate, nu, 1e-12 * nu);
    EXPECT_EQ(e.terms[k].amplitude.imag(), 0.0);
    EXPECT_NEAR(e.terms[k].amplitude.real(),
                4.0 * 0.05 * 5.0 * 5.0 * nu / (nu * nu - 25.0), 1e-14);
  }
}

TEST(DrudeExpansion, DecoupledAmplitudesVanish) {
  const ExponentialExpansion e = drude_expansion(DrudeSpec{0.0, 5.0}, 2.0, 5);
  for (const auto& term : e.terms) EXPECT_EQ(std::abs(term.amplitude), 0.0);
}

TEST(DrudeExpansion, Errors) {
  // nu_1 = 2 pi T equals the cutoff.
  EXPECT_THROW(drude_expansion(DrudeSpec{0.05, 2.0 * kPi}, 1.0, 3), ParameterError);
  EXPECT_THROW(drude_expansion(DrudeSpec{0.05, 5.0}, 0.0, 3), ParameterError);
}

TEST(DrudeExpansion, TruncationSelfConsistency) {
  const DrudeSpec d{0.05, 5.0};
  const auto a = drude_expansion(d, 5.0, 40);
  const auto b = drude_expansion(d, 5.0, 80);
  for (double t = 0.05; t <= 2.0; t += 0.05) {
    EXPECT_LT(std::abs(a.correlation(t) - b.correlation(t)), 1e-8) << t;
  }
}

TEST(DrudeExpansion, MatchesDirectQuadrature) {
  const DrudeSpec d{0.05, 5.0};
  const auto e = drude_expansion(d, 5.0, 40);
  for (double t : {0.1, 0.25, 0.5, 1.0, 1.5, 2.0}) {
    const auto direct = correlation_function(d, 5.0, t);
    const auto series = e.correlation(t);
    EXPECT_LT(std::abs(series - direct), 1e-6 * std::abs(direct)) << t;
  }
}

TEST(DrudeExpansion, ImaginaryPart) {
  const DrudeSpec d{0.05, 5.0};
  const auto e = drude_expansion(d, 5.0, 10);
  for (double t : {0.05, 0.3, 1.0, 2.0}) {
    const double closed = -0.05 * 5.0 * std::exp(-5.0 * t);
    EXPECT_NEAR(e.correlation(t).imag(), closed, 1e-15);
    EXPECT_NEAR(correlation_function(d, 5.0, t).imag(), closed, 1e-7);
  }
}

TEST(DrudeExpansion, RemainderClosedForm) {
  const DrudeSpec d{0.05, 5.0};
  const double T = 2.0;
  const auto e = drude_expansion(d, T, 3);
  const auto big = drude_expansion(d, T, 200000);
  double tail = 0.0;
  for (std::size_t k = 4; k < big.terms.size(); ++k) {
    tail += big.terms[k].amplitude.real() / big.terms[k].rate;
  }
  // Terms past 200000 contribute about 2e-5 of the tail.
  EXPECT_NEAR(e.remainder(), tail, 5e-5 * tail);
}

TEST(MatsubaraCutoff, Rule) {
  const DrudeSpec d{0.05, 5.0};
  for (double T : {1.0, 5.0, 20.0}) {
    const int K = default_matsubara_cutoff(d, T, 1.0);
    EXPECT_GT(2.0 * kPi * T * K, 10.0 * 5.0);
    const auto a = drude_expansion(d, T, K);
    const auto b = drude_expansion(d, T, 2 * K);
    EXPECT_LT(std::abs(a.correlation(0.1) - b.correlation(0.1)), 1e-6);
  }
}
