#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "qsllab/quadrature.hpp"

namespace qsllab::bath {

// J(w) = coupling * w^s * wc^(1-s) * exp(-w/wc)
struct OhmicLikeSpec {
  double coupling = 0.0;
  double cutoff = 1.0;
  double ohmicity = 1.0;
};

// J(w) = 2 coupling wc w / (pi (wc^2 + w^2))
struct DrudeSpec {
  double coupling = 0.0;
  double cutoff = 1.0;
};

using SpectralDensity = std::variant<OhmicLikeSpec, DrudeSpec>;

void validate(const OhmicLikeSpec& spec);
void validate(const DrudeSpec& spec);
void validate(const SpectralDensity& spec);

double spectral_density(const SpectralDensity& spec, double omega);

// Temperatures below this are handled as exactly zero.
inline constexpr double kZeroTemperature = 1e-12;

// Default tolerances for bath integrals: well inside the 1e-9 absolute /
// 1e-8 relative contract on the decoherence factor.
quad::Options default_options();

struct Value {
  double value = 0.0;
  double error = 0.0;
};

// C(t) = int J(w) [coth(w/2T) cos(wt) - i sin(wt)] dw.
std::complex<double> correlation_function(const SpectralDensity& spec,
                                          double temperature, double t,
                                          const quad::Options& opts =
                                              default_options());

// Gamma(t) = 4 int J(w) coth(w/2T) (1 - cos wt) / w^2 dw.
Value decoherence_factor(const SpectralDensity& spec, double temperature,
                         double t,
                         const quad::Options& opts = default_options());

// dGamma/dt = 4 int J(w) coth(w/2T) sin(wt) / w dw.
Value decoherence_rate(const SpectralDensity& spec, double temperature,
                       double t,
                       const quad::Options& opts = default_options());

// Gamma, its first and second time derivatives on a set of times, sharing
// one frequency mesh.
struct DecoherenceSamples {
  std::vector<double> gamma, rate, curvature;
  std::vector<double> gamma_error, rate_error, curvature_error;
  std::size_t evaluations = 0;
};
DecoherenceSamples decoherence_samples(
    const SpectralDensity& spec, double temperature,
    std::span<const double> times, bool with_curvature = true,
    const quad::Options& opts = default_options());

// (1 - cos(w t_2N)) tan^2(w dt/2) with t_2N = 2 N dt, finite at the poles of
// the tangent.
double pulse_filter(double omega, int cycles, double interval);
// Value of pulse_filter at w = (2k+1) pi / dt.
double pulse_filter_pole_limit(int cycles);

// Gamma_p(N, dt) = 4 int J coth (1 - cos w t_2N)/w^2 tan^2(w dt / 2) dw.
Value decoherence_factor_pulsed(const OhmicLikeSpec& spec, double temperature,
                                int cycles, double interval,
                                const quad::Options& opts = default_options());
// Gamma_p for N = 0..max_cycles in one pass.
std::vector<Value> decoherence_factor_pulsed_lattice(
    const OhmicLikeSpec& spec, double temperature, int max_cycles,
    double interval, const quad::Options& opts = default_options());

struct ExpansionTerm {
  std::complex<double> amplitude;  // zeta_k
  double rate;                     // nu_k
};

// Drude correlation function as a sum of decaying exponentials.
struct ExponentialExpansion {
  std::vector<ExpansionTerm> terms;
  int cutoff = 0;
  double temperature = 0.0;
  DrudeSpec spec;

  std::complex<double> correlation(double t) const;
  // Sum over k > cutoff of Re(zeta_k)/nu_k, in closed form.
  double remainder() const;
};

ExponentialExpansion drude_expansion(const DrudeSpec& spec, double temperature,
                                     int cutoff);

// Smallest K with nu_K > 10 max(wc, system_frequency), doubled until the
// partial sums at probe_time change by less than 1e-6. A non-positive
// probe_time selects 1 / (2 max(wc, system_frequency)).
int default_matsubara_cutoff(const DrudeSpec& spec, double temperature,
                             double system_frequency, double probe_time = 0.0);

}  // namespace qsllab::bath
