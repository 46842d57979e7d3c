#include "qsllab/bath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qsllab/error.hpp"

namespace qsllab::bath {

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

double effective_temperature(double temperature) {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ParameterError("temperature must be finite and non-negative");
  }
  return temperature < kZeroTemperature ? 0.0 : temperature;
}

double coth(double x) {
  if (x < 1e-4) {
    const double x2 = x * x;
    return 1.0 / x + x * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * 2.0 / 945.0));
  }
  if (x > 40.0) return 1.0;
  return 1.0 / std::tanh(x);
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

enum class Kind { kGamma, kRate, kCurvature, kCorrRe, kCorrIm };

// Prefactor and large-frequency power p of the kernel |K(w)| <= pref / w^p.
struct KernelBound {
  double pref;
  double power;
};

KernelBound kernel_bound(Kind kind) {
  switch (kind) {
    case Kind::kGamma: return {8.0, 2.0};
    case Kind::kRate: return {4.0, 1.0};
    case Kind::kCurvature: return {4.0, 0.0};
    case Kind::kCorrRe: return {1.0, 0.0};
    case Kind::kCorrIm: return {1.0, 0.0};
  }
  return {1.0, 0.0};
}

bool thermal(Kind kind) { return kind != Kind::kCorrIm; }

struct Probe {
  Kind kind;
  double t;
  double upper = 0.0;       // numeric integration stops here
  double tail = 0.0;        // analytic contribution beyond upper
  double tail_error = 0.0;  // bound on what the tail treatment misses
};

// Evaluates J(w) and J(w) coth(w / 2T) without variant dispatch.
struct Weight {
  bool drude = false;
  double lambda = 0.0, wc = 1.0, s = 1.0, temperature = 0.0;
  double drude_c = 0.0;  // 2 lambda wc / pi
  double ohmic_pref = 0.0;

  explicit Weight(const SpectralDensity& spec, double temp) : temperature(temp) {
    if (const auto* o = std::get_if<OhmicLikeSpec>(&spec)) {
      lambda = o->coupling;
      wc = o->cutoff;
      s = o->ohmicity;
      ohmic_pref = lambda * std::pow(wc, 1.0 - s);
    } else {
      const auto& d = std::get<DrudeSpec>(spec);
      drude = true;
      lambda = d.coupling;
      wc = d.cutoff;
      drude_c = 2.0 * lambda * wc / kPi;
    }
  }

  double j(double w) const {
    if (drude) return drude_c * w / (wc * wc + w * w);
    if (w == 0.0) return 0.0;
    return ohmic_pref * std::pow(w, s) * std::exp(-w / wc);
  }
  double occupation(double w) const {
    return temperature == 0.0 ? 1.0 : coth(w / (2.0 * temperature));
  }
};

// n-th derivative of 1/(w - a) at w.
cplx pole_derivative(double w, cplx a, int n) {
  double fact = 1.0;
  for (int k = 2; k <= n; ++k) fact *= k;
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  return sign * fact / std::pow(cplx(w) - a, n + 1);
}

// n-th derivatives at W of J, J/w and J/w^2 for the Drude density.
double drude_h(const Weight& wt, Kind kind, double w, int n) {
  const cplx a(0.0, wt.wc);
  const cplx d = pole_derivative(w, a, n);
  switch (kind) {
    case Kind::kRate:
      return wt.drude_c / wt.wc * d.imag();
    case Kind::kGamma: {
      double fact = 1.0;
      for (int k = 2; k <= n; ++k) fact *= k;
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      const double inv = sign * fact / std::pow(w, n + 1);
      return wt.drude_c / (wt.wc * wt.wc) * (inv - d.real());
    }
    default:
      return wt.drude_c * d.real();
  }
}

constexpr int kIbpTerms = 6;

// int_W^inf h(w) e^{iwt} dw by repeated integration by parts, plus the
// bound |h^{(M-1)}(W)| / t^M on the remainder.
void drude_oscillatory_tail(const Weight& wt, Kind kind, double w, double t,
                            cplx& value, double& bound) {
  const cplx z(0.0, -1.0 / t);  // 1/(i t)
  cplx zp = z;
  cplx sum = 0.0;
  for (int n = 0; n < kIbpTerms; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    sum += sign * drude_h(wt, kind, w, n) * zp;
    zp *= z;
  }
  value = -std::polar(1.0, w * t) * sum;
  bound = std::abs(drude_h(wt, kind, w, kIbpTerms - 1)) /
          std::pow(t, kIbpTerms);
}

double drude_prefactor(Kind kind) {
  switch (kind) {
    case Kind::kGamma:
    case Kind::kRate:
    case Kind::kCurvature: return 4.0;
    default: return 1.0;
  }
}

void set_drude_tail(const Weight& wt, Probe& p, const quad::Options& opts) {
  double w = std::max(50.0 * wt.wc, 40.0 * wt.temperature);
  const double target = 1e-2 * opts.abs_tol;
  cplx e;
  double bound = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    drude_oscillatory_tail(wt, p.kind, w, p.t, e, bound);
    if (drude_prefactor(p.kind) * bound <= target) break;
    w *= 1.25;
  }
  const double pref = drude_prefactor(p.kind);
  double tail = 0.0;
  switch (p.kind) {
    case Kind::kGamma:
      tail = pref * (wt.drude_c / (2.0 * wt.wc * wt.wc) *
                         std::log1p(wt.wc * wt.wc / (w * w)) -
                     e.real());
      break;
    case Kind::kRate: tail = pref * e.imag(); break;
    case Kind::kCurvature:
    case Kind::kCorrRe: tail = pref * e.real(); break;
    case Kind::kCorrIm: tail = -e.imag(); break;
  }
  double coth_miss = 0.0;
  if (thermal(p.kind) && wt.temperature > 0.0) {
    const double q = std::exp(-w / wt.temperature);
    coth_miss = pref * std::abs(drude_h(wt, p.kind, w, 0)) * 2.0 *
                wt.temperature * q / (1.0 - q);
    if (p.kind == Kind::kGamma) coth_miss *= 2.0;
  }
  p.upper = w;
  p.tail = tail;
  p.tail_error = pref * bound + coth_miss;
}

// Bound on int_W^inf |w^q| e^{-w/wc} dw.
double exp_tail(double w, double q, double wc) {
  const double denom = 1.0 - std::max(q, 0.0) * wc / w;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return wc * std::pow(w, q) * std::exp(-w / wc) / denom;
}

double ohmic_upper(const Weight& wt, double pref, double power,
                   const quad::Options& opts, double& bound) {
  double w = std::max(50.0 * wt.wc, 40.0 * wt.temperature);
  w = std::max(w, 2.0 * wt.wc * std::max(wt.s - power, 0.0) + 50.0 * wt.wc);
  const double target = 1e-2 * opts.abs_tol;
  for (int iter = 0; iter < 400; ++iter) {
    bound = pref * wt.ohmic_pref * wt.occupation(w) *
            exp_tail(w, wt.s - power, wt.wc);
    if (bound <= target) break;
    w *= 1.1;
  }
  return w;
}

struct BatchResult {
  std::vector<double> values;
  std::vector<double> errors;
  std::size_t evaluations = 0;
};

// Leading small-frequency exponent of the integrand for non-pulsed kernels.
double endpoint_exponent(const Weight& wt, bool any_thermal) {
  if (wt.drude) return (wt.temperature > 0.0 && any_thermal) ? 0.0 : 1.0;
  return (wt.temperature > 0.0 && any_thermal) ? wt.s - 1.0 : wt.s;
}

// Integrates every probe over [0, upper] on a shared mesh and adds tails.
BatchResult integrate_probes(const Weight& wt, std::vector<Probe>& probes,
                             const quad::Options& opts) {
  const std::size_t n = probes.size();
  BatchResult out;
  out.values.assign(n, 0.0);
  out.errors.assign(n, 0.0);
  if (n == 0) return out;

  auto integrand = [&](double w, std::span<double> y) {
    const double j = wt.j(w);
    const double jth = j * wt.occupation(w);
    for (std::size_t i = 0; i < n; ++i) {
      const Probe& p = probes[i];
      if (w >= p.upper) {
        y[i] = 0.0;
        continue;
      }
      switch (p.kind) {
        case Kind::kGamma: {
          const double sc = sinc(0.5 * w * p.t);
          y[i] = 2.0 * jth * p.t * p.t * sc * sc;
          break;
        }
        case Kind::kRate: y[i] = 4.0 * jth * p.t * sinc(w * p.t); break;
        case Kind::kCurvature: y[i] = 4.0 * jth * std::cos(w * p.t); break;
        case Kind::kCorrRe: y[i] = jth * std::cos(w * p.t); break;
        case Kind::kCorrIm: y[i] = -j * std::sin(w * p.t); break;
      }
    }
  };

  // Segment boundaries: distinct upper limits in ascending order.
  std::vector<double> uppers;
  for (const Probe& p : probes)
    if (p.upper > 0.0) uppers.push_back(p.upper);
  std::sort(uppers.begin(), uppers.end());
  uppers.erase(std::unique(uppers.begin(), uppers.end()), uppers.end());
  if (uppers.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      out.values[i] = probes[i].tail;
      out.errors[i] = probes[i].tail_error;
    }
    return out;
  }

  // Panels span one period of the fastest active oscillation.
  double first_panel = 0.0;
  std::vector<double> breaks;
  double lo = 0.0;
  for (double hi : uppers) {
    double t_active = 0.0;
    for (const Probe& p : probes)
      if (p.upper >= hi) t_active = std::max(t_active, p.t);
    double h = 5.0 * wt.wc;
    if (t_active > 0.0) h = std::min(h, 2.0 * kPi / t_active);
    if (breaks.empty()) {
      first_panel = std::min({h, wt.wc, hi});
      breaks.push_back(first_panel);
      lo = first_panel;
    }
    if (hi <= lo) continue;
    const auto count = static_cast<long>(std::ceil((hi - lo) / h));
    for (long k = 1; k <= count; ++k) {
      breaks.push_back(k == count ? hi : lo + h * static_cast<double>(k));
    }
    lo = hi;
  }

  quad::VectorEstimate bulk =
      quad::integrate_vector(integrand, n, breaks, opts);
  out.evaluations += bulk.evaluations;

  // First panel [0, w1]: substitute w = w1 v^m so an integrable w^beta
  // endpoint becomes regular in v.
  bool any_thermal = false;
  for (const Probe& p : probes) any_thermal = any_thermal || thermal(p.kind);
  const double beta = endpoint_exponent(wt, any_thermal);
  const double w1 = first_panel;
  const double m = beta < 0.0 ? 1.0 / (beta + 1.0) : 1.0;
  std::vector<double> tmp(n);
  auto first = [&](double v, std::span<double> y) {
    const double w = w1 * std::pow(v, m);
    const double jac = m * w1 * std::pow(v, m - 1.0);
    integrand(w, y);
    for (double& z : y) z *= jac;
  };
  const double unit[2] = {0.0, 1.0};
  quad::VectorEstimate head = quad::integrate_vector(first, n, unit, opts);
  out.evaluations += head.evaluations;

  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = head.values[i] + bulk.values[i] + probes[i].tail;
    out.errors[i] = head.errors[i] + bulk.errors[i] + probes[i].tail_error;
  }
  return out;
}

void prepare(const Weight& wt, std::vector<Probe>& probes,
             const quad::Options& opts) {
  for (Probe& p : probes) {
    if (wt.drude) {
      if (p.t == 0.0) {
        if (p.kind == Kind::kCurvature || p.kind == Kind::kCorrRe) {
          throw DomainError(
              "Drude correlation diverges at t = 0; use t > 0");
        }
        p.upper = 0.0;  // identically zero integrand
        continue;
      }
      set_drude_tail(wt, p, opts);
    } else {
      const KernelBound kb = kernel_bound(p.kind);
      double bound = 0.0;
      p.upper = ohmic_upper(wt, kb.pref, kb.power, opts, bound);
      p.tail_error = bound;
    }
  }
}

Weight make_weight(const SpectralDensity& spec, double temperature) {
  validate(spec);
  return Weight(spec, effective_temperature(temperature));
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("time must be finite and non-negative");
  }
}

bool zero_coupling(const Weight& wt) { return wt.lambda == 0.0; }

void require_accuracy(double value, double error, const char* what) {
  const double allowed = std::max(1e-9, 1e-8 * std::abs(value));
  if (!(error <= allowed)) {
    throw AccuracyError(std::string(what) + " quadrature error " +
                            std::to_string(error) + " above tolerance",
                        error, allowed);
  }
}

}  // namespace

void validate(const OhmicLikeSpec& spec) {
  if (!(spec.coupling >= 0.0) || !std::isfinite(spec.coupling))
    throw ParameterError("coupling must be finite and non-negative");
  if (!(spec.cutoff > 0.0) || !std::isfinite(spec.cutoff))
    throw ParameterError("cutoff frequency must be positive");
  if (!(spec.ohmicity > 0.0) || !std::isfinite(spec.ohmicity))
    throw ParameterError("ohmicity must be positive");
}

void validate(const DrudeSpec& spec) {
  if (!(spec.coupling >= 0.0) || !std::isfinite(spec.coupling))
    throw ParameterError("coupling must be finite and non-negative");
  if (!(spec.cutoff > 0.0) || !std::isfinite(spec.cutoff))
    throw ParameterError("cutoff frequency must be positive");
}

void validate(const SpectralDensity& spec) {
  std::visit([](const auto& s) { validate(s); }, spec);
}

quad::Options default_options() {
  quad::Options o;
  o.abs_tol = 1e-13;
  o.rel_tol = 1e-11;
  o.max_intervals = 400000;
  return o;
}

double spectral_density(const SpectralDensity& spec, double omega) {
  validate(spec);
  if (!(omega >= 0.0)) throw DomainError("spectral density needs omega >= 0");
  return Weight(spec, 0.0).j(omega);
}

std::complex<double> correlation_function(const SpectralDensity& spec,
                                          double temperature, double t,
                                          const quad::Options& opts) {
  const Weight wt = make_weight(spec, temperature);
  check_time(t);
  if (zero_coupling(wt)) return 0.0;
  std::vector<Probe> probes{{Kind::kCorrRe, t}, {Kind::kCorrIm, t}};
  prepare(wt, probes, opts);
  BatchResult r = integrate_probes(wt, probes, opts);
  for (std::size_t i = 0; i < 2; ++i) {
    const double allowed = std::max(1e-9, 1e-8 * std::abs(r.values[i]));
    if (!(r.errors[i] <= allowed)) {
      throw AccuracyError("correlation function quadrature error " +
                              std::to_string(r.errors[i]),
                          r.errors[i], allowed);
    }
  }
  return {r.values[0], r.values[1]};
}

Value decoherence_factor(const SpectralDensity& spec, double temperature,
                         double t, const quad::Options& opts) {
  const Weight wt = make_weight(spec, temperature);
  check_time(t);
  if (t == 0.0 || zero_coupling(wt)) return {};
  std::vector<Probe> probes{{Kind::kGamma, t}};
  prepare(wt, probes, opts);
  BatchResult r = integrate_probes(wt, probes, opts);
  require_accuracy(r.values[0], r.errors[0], "decoherence factor");
  return {std::max(r.values[0], 0.0), r.errors[0]};
}

Value decoherence_rate(const SpectralDensity& spec, double temperature,
                       double t, const quad::Options& opts) {
  const Weight wt = make_weight(spec, temperature);
  check_time(t);
  if (t == 0.0 || zero_coupling(wt)) return {};
  std::vector<Probe> probes{{Kind::kRate, t}};
  prepare(wt, probes, opts);
  BatchResult r = integrate_probes(wt, probes, opts);
  require_accuracy(r.values[0], r.errors[0], "decoherence rate");
  return {r.values[0], r.errors[0]};
}

DecoherenceSamples decoherence_samples(const SpectralDensity& spec,
                                       double temperature,
                                       std::span<const double> times,
                                       bool with_curvature,
                                       const quad::Options& opts) {
  const Weight wt = make_weight(spec, temperature);
  DecoherenceSamples out;
  const std::size_t n = times.size();
  out.gamma.assign(n, 0.0);
  out.rate.assign(n, 0.0);
  out.curvature.assign(n, 0.0);
  out.gamma_error.assign(n, 0.0);
  out.rate_error.assign(n, 0.0);
  out.curvature_error.assign(n, 0.0);
  if (zero_coupling(wt) || n == 0) return out;

  std::vector<Probe> probes;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < n; ++i) {
    check_time(times[i]);
    if (times[i] > 0.0) {
      probes.push_back({Kind::kGamma, times[i]});
      owner.push_back(i);
      probes.push_back({Kind::kRate, times[i]});
      owner.push_back(i);
    }
    if (with_curvature && !(wt.drude && times[i] == 0.0)) {
      probes.push_back({Kind::kCurvature, times[i]});
      owner.push_back(i);
    }
  }
  prepare(wt, probes, opts);
  BatchResult r = integrate_probes(wt, probes, opts);
  out.evaluations = r.evaluations;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const std::size_t i = owner[k];
    switch (probes[k].kind) {
      case Kind::kGamma:
        require_accuracy(
            r.values[k], r.errors[k],
            ("decoherence factor at t = " + std::to_string(probes[k].t))
                .c_str());
        out.gamma[i] = std::max(r.values[k], 0.0);
        out.gamma_error[i] = r.errors[k];
        break;
      case Kind::kRate:
        out.rate[i] = r.values[k];
        out.rate_error[i] = r.errors[k];
        break;
      default:
        out.curvature[i] = r.values[k];
        out.curvature_error[i] = r.errors[k];
        break;
    }
  }
  return out;
}

namespace {

// Offset y = x - x_k from the nearest pole x_k = (2k+1) pi / 2 of tan(x).
double pole_offset(double x, double& xk) {
  const double k = std::round((x - 0.5 * kPi) / kPi);
  xk = (2.0 * k + 1.0) * 0.5 * kPi;
  return x - xk;
}

// Panels of width h, with every tangent pole (2k+1) pi / dt as a breakpoint.
std::vector<double> pulsed_breakpoints(double upper, double h,
                                       double interval) {
  std::vector<double> breaks{0.0};
  const double spacing = 2.0 * kPi / interval;
  double next_pole = kPi / interval;
  double w = 0.0;
  while (w < upper) {
    double step = std::min(w + h, upper);
    while (next_pole <= w) next_pole += spacing;
    if (next_pole < step) step = next_pole;
    breaks.push_back(step);
    w = step;
  }
  return breaks;
}

}  // namespace

double pulse_filter(double omega, int cycles, double interval) {
  if (!(interval > 0.0)) throw ParameterError("pulse interval must be positive");
  if (cycles < 0) throw ParameterError("cycle count must be non-negative");
  if (cycles == 0) return 0.0;
  const double x = 0.5 * omega * interval;
  double xk = 0.0;
  const double y = pole_offset(x, xk);
  const double n2 = 2.0 * cycles;
  double ratio;  // sin(2 N y) / sin(y)
  if (std::abs(y) < 1e-7 * std::abs(xk)) {
    ratio = n2 * (1.0 - (n2 * n2 - 1.0) * y * y / 6.0);
  } else {
    ratio = std::sin(n2 * y) / std::sin(y);
  }
  const double cy = std::cos(y);  // |sin x| = |cos y|
  return 2.0 * cy * cy * ratio * ratio;
}

double pulse_filter_pole_limit(int cycles) {
  const double n2 = 2.0 * cycles;
  return 2.0 * n2 * n2;
}

std::vector<Value> decoherence_factor_pulsed_lattice(
    const OhmicLikeSpec& spec, double temperature, int max_cycles,
    double interval, const quad::Options& opts) {
  validate(spec);
  if (!(interval > 0.0) || !std::isfinite(interval))
    throw ParameterError("pulse interval must be positive");
  if (max_cycles < 0) throw ParameterError("cycle count must be non-negative");
  const Weight wt(SpectralDensity(spec), effective_temperature(temperature));
  std::vector<Value> out(static_cast<std::size_t>(max_cycles) + 1);
  if (max_cycles == 0 || zero_coupling(wt)) return out;

  const std::size_t n = static_cast<std::size_t>(max_cycles);
  const double t_max = 2.0 * max_cycles * interval;
  // Filter is bounded by 8 N^2 and decays like 1/w^2 against J.
  const double n2max = 2.0 * max_cycles;
  double bound = 0.0;
  const double upper =
      ohmic_upper(wt, 4.0 * 2.0 * n2max * n2max, 2.0, opts, bound);

  auto integrand = [&](double w, std::span<double> y) {
    const double jth = wt.j(w) * wt.occupation(w);
    const double x = 0.5 * w * interval;
    double xk = 0.0;
    const double off = pole_offset(x, xk);
    const double cy = std::cos(off);
    const double c2 = 2.0 * std::cos(2.0 * off);
    // sin(2 N y)/sin(y) by the Chebyshev recurrence, regular at y = 0.
    double r_prev = 0.0;
    double r = 2.0 * cy;
    const double pref = 4.0 * jth * 2.0 * cy * cy / (w * w);
    for (std::size_t k = 0; k < n; ++k) {
      y[k] = pref * r * r;
      const double r_next = c2 * r - r_prev;
      r_prev = r;
      r = r_next;
    }
  };

  std::vector<double> breaks =
      pulsed_breakpoints(upper, std::min(2.0 * kPi / t_max, 5.0 * wt.wc),
                         interval);
  quad::VectorEstimate r = quad::integrate_vector(integrand, n, breaks, opts);
  for (std::size_t k = 0; k < n; ++k) {
    const double err = r.errors[k] + bound;
    const double allowed = std::max(1e-12, 1e-7 * std::abs(r.values[k]));
    if (!(err <= allowed)) {
      throw AccuracyError("pulsed decoherence quadrature error " +
                              std::to_string(err),
                          err, allowed);
    }
    out[k + 1] = {std::max(r.values[k], 0.0), err};
  }
  return out;
}

Value decoherence_factor_pulsed(const OhmicLikeSpec& spec, double temperature,
                                int cycles, double interval,
                                const quad::Options& opts) {
  validate(spec);
  if (!(interval > 0.0) || !std::isfinite(interval))
    throw ParameterError("pulse interval must be positive");
  if (cycles < 0) throw ParameterError("cycle count must be non-negative");
  if (cycles == 0 || spec.coupling == 0.0) return {};
  const Weight wt(SpectralDensity(spec), effective_temperature(temperature));
  const double t2n = 2.0 * cycles * interval;
  const double n2 = 2.0 * cycles;
  double bound = 0.0;
  const double upper = ohmic_upper(wt, 8.0 * n2 * n2, 2.0, opts, bound);
  auto f = [&](double w) {
    return 4.0 * wt.j(w) * wt.occupation(w) *
           pulse_filter(w, cycles, interval) / (w * w);
  };
  std::vector<double> breaks =
      pulsed_breakpoints(upper, std::min(2.0 * kPi / t2n, 5.0 * wt.wc),
                         interval);
  quad::Estimate e = quad::integrate(f, breaks, opts);
  const double err = e.error + bound;
  const double allowed = std::max(1e-12, 1e-7 * std::abs(e.value));
  if (!(err <= allowed)) {
    throw AccuracyError("pulsed decoherence quadrature error " +
                            std::to_string(err),
                        err, allowed);
  }
  return {std::max(e.value, 0.0), err};
}

std::complex<double> ExponentialExpansion::correlation(double t) const {
  std::complex<double> c = 0.0;
  for (const ExpansionTerm& term : terms) c += term.amplitude * std::exp(-term.rate * t);
  return c;
}

double ExponentialExpansion::remainder() const {
  // Sum over all k of Re(zeta_k)/nu_k equals 2 lambda T / wc.
  double total = 2.0 * spec.coupling * temperature / spec.cutoff;
  for (const ExpansionTerm& term : terms) total -= term.amplitude.real() / term.rate;
  return std::max(total, 0.0);
}

ExponentialExpansion drude_expansion(const DrudeSpec& spec, double temperature,
                                     int cutoff) {
  validate(spec);
  if (!(temperature > 0.0) || temperature < kZeroTemperature) {
    throw ParameterError(
        "Matsubara expansion needs a positive temperature");
  }
  if (cutoff < 0) throw ParameterError("Matsubara cutoff must be >= 0");
  const double wc = spec.cutoff;
  const double lam = spec.coupling;
  // Resonance nu_k = wc makes both cot(wc/2T) and the k-th amplitude blow up.
  const double ratio = wc / (2.0 * kPi * temperature);
  const double nearest = std::round(ratio);
  if (nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * ratio) {
    throw ParameterError(
        "cutoff frequency coincides with a Matsubara frequency; perturb the "
        "temperature slightly");
  }
  ExponentialExpansion ex;
  ex.cutoff = cutoff;
  ex.temperature = temperature;
  ex.spec = spec;
  const double cot = 1.0 / std::tan(wc / (2.0 * temperature));
  ex.terms.push_back({std::complex<double>(lam * wc * cot, -lam * wc), wc});
  for (int k = 1; k <= cutoff; ++k) {
    const double nu = 2.0 * kPi * k * temperature;
    const double zeta = 4.0 * lam * wc * temperature * nu / (nu * nu - wc * wc);
    ex.terms.push_back({std::complex<double>(zeta, 0.0), nu});
  }
  return ex;
}

int default_matsubara_cutoff(const DrudeSpec& spec, double temperature,
                             double system_frequency, double probe_time) {
  validate(spec);
  if (!(temperature > 0.0)) {
    throw ParameterError("Matsubara expansion needs a positive temperature");
  }
  const double scale = std::max(spec.cutoff, std::abs(system_frequency));
  if (!(probe_time > 0.0)) probe_time = 1.0 / (2.0 * scale);
  const double nu1 = 2.0 * kPi * temperature;
  int k = static_cast<int>(std::floor(10.0 * scale / nu1)) + 1;
  k = std::max(k, 1);
  constexpr int kMaxCutoff = 4096;
  while (k < kMaxCutoff) {
    const ExponentialExpansion a = drude_expansion(spec, temperature, k);
    const ExponentialExpansion b = drude_expansion(spec, temperature, 2 * k);
    if (std::abs(a.correlation(probe_time) - b.correlation(probe_time)) <
        1e-6) {
      return k;
    }
    k *= 2;
  }
  throw NonConvergenceError("Matsubara cutoff search did not converge", 0.0);
}

}  // namespace qsllab::bath
