#include "qsllab/qsl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qsllab/error.hpp"

namespace qsllab::qsl {

const char* to_string(Branch b) {
  return b == Branch::kOperatorSum ? "operator-sum" : "root-sum-square";
}

StateTrajectory to_state_trajectory(const dephasing::DephasingTrajectory& tr) {
  StateTrajectory out;
  out.grid = tr.grid;
  out.states.reserve(tr.size());
  out.derivatives.reserve(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out.states.push_back(tr.state(i));
    out.derivatives.push_back(tr.derivative(i));
  }
  out.lattice_derivatives = tr.pulse.has_value();
  return out;
}

StateTrajectory reduce_to_qubit_a(const StateTrajectory& tr) {
  StateTrajectory out;
  out.grid = tr.grid;
  out.lattice_derivatives = tr.lattice_derivatives;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out.states.push_back(partial_trace_b(tr.states[i]));
    out.derivatives.emplace_back(partial_trace_b(tr.derivatives[i].matrix()));
  }
  return out;
}

double relative_purity(const DensityMatrix& initial,
                       const DensityMatrix& final_state) {
  if (initial.dim() != final_state.dim()) {
    throw DimensionError("relative purity of states with different dims");
  }
  const double p0 = initial.purity();
  if (!(p0 > 0.0)) throw DegenerateInputError("initial state has zero purity");
  return hilbert_schmidt_product(final_state.matrix(), initial.matrix()).real() /
         p0;
}

namespace {

std::size_t grid_index(const std::vector<double>& grid, double t) {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  if (grid.empty() || t < grid.front() - tol || t > grid.back() + tol) {
    throw RangeError("time " + std::to_string(t) +
                     " outside the trajectory grid");
  }
  auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
  if (it == grid.end() || std::abs(*it - t) > tol) {
    throw RangeError("time " + std::to_string(t) + " is not a grid point");
  }
  return static_cast<std::size_t>(it - grid.begin());
}

// `exact_numerator`: the numerator was computed without forming f - 1, so it
// stays meaningful when the purity change is below roundoff.
QslResult finish(double numerator, double denom_op, double denom_rss,
                 double tau_d, double f_final, bool exact_numerator = false) {
  QslResult r;
  r.tau_d = tau_d;
  r.f_final = f_final;
  const bool purity_changed = std::abs(f_final - 1.0) > 1e-12;
  if (!(denom_op > 0.0) && !(denom_rss > 0.0)) {
    if (purity_changed) {
      throw InconsistencyError(
          "frozen dynamics (zero speed) but the relative purity changed");
    }
    r.tau_qsl = 0.0;
  } else if (numerator == 0.0 || (!purity_changed && !exact_numerator)) {
    r.tau_qsl = 0.0;
    r.branch = denom_op <= denom_rss ? Branch::kOperatorSum
                                     : Branch::kRootSumSquare;
  } else {
    const double op = denom_op > 0.0 ? 1.0 / denom_op : HUGE_VAL;
    const double rss = denom_rss > 0.0 ? 1.0 / denom_rss : HUGE_VAL;
    r.branch = op >= rss ? Branch::kOperatorSum : Branch::kRootSumSquare;
    r.tau_qsl = std::max(op, rss) * numerator;
  }
  r.ratio = r.tau_qsl / tau_d;
  if (!(r.ratio <= 1.0 + 1e-6) || !(r.ratio >= 0.0)) {
    throw InvariantError("QSL ratio " + std::to_string(r.ratio) +
                         " outside [0, 1]");
  }
  return r;
}

void check_tau(double tau_d) {
  if (!(tau_d > 0.0) || !std::isfinite(tau_d)) {
    throw ParameterError("driving time must be positive");
  }
}

}  // namespace

QslResult qsl_generic(const StateTrajectory& traj, double t, double tau_d) {
  check_tau(tau_d);
  if (traj.lattice_derivatives) {
    throw DomainError(
        "generic bound needs exact derivatives; use the closed form for "
        "pulsed trajectories");
  }
  if (traj.states.size() != traj.grid.size() ||
      traj.derivatives.size() != traj.grid.size()) {
    throw DimensionError("trajectory arrays have different lengths");
  }
  const std::size_t i0 = grid_index(traj.grid, t);
  const std::size_t i1 = grid_index(traj.grid, t + tau_d);

  double sum_op = 0.0;
  double sum_rss = 0.0;
  double prev_op = 0.0, prev_rss = 0.0;
  for (std::size_t i = i0; i <= i1; ++i) {
    const auto sig = singular_values(traj.derivatives[i].matrix());
    std::vector<double> rho = traj.states[i].eigenvalues();
    std::sort(rho.begin(), rho.end(), std::greater<>());
    double op = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < sig.size(); ++k) {
      op += sig[k] * std::max(rho[k], 0.0);
      sq += sig[k] * sig[k];
    }
    const double rss = std::sqrt(sq);
    if (i > i0) {
      const double h = traj.grid[i] - traj.grid[i - 1];
      sum_op += 0.5 * h * (op + prev_op);
      sum_rss += 0.5 * h * (rss + prev_rss);
    }
    prev_op = op;
    prev_rss = rss;
  }
  const double span = traj.grid[i1] - traj.grid[i0];
  const double f = relative_purity(traj.states[i0], traj.states[i1]);
  // |f - 1| Tr(rho_t^2) = |Tr[rho_t (rho_{t+tau} - rho_t)]|
  const ComplexMatrix change = traj.states[i1].matrix() - traj.states[i0].matrix();
  const double numerator =
      std::abs(hilbert_schmidt_product(traj.states[i0].matrix(), change).real());
  return finish(numerator, sum_op / span, sum_rss / span, tau_d, f, true);
}

namespace {

QslResult closed_from_parts(const dephasing::BlochVector& init, Complex q0,
                            Complex q1, double mean_speed, double tau_d) {
  const double v = init.transverse();
  const Complex z = (q0 - q1) * std::conj(q0);
  const double numerator = 0.5 * v * std::abs(z + std::conj(z));
  const DensityMatrix r0 = dephasing::reduced_state(init, q0);
  const DensityMatrix r1 = dephasing::reduced_state(init, q1);
  const double f = relative_purity(r0, r1);
  // |q_dot| already carries the 1/2 sqrt(vx^2+vy^2) of the singular values,
  // so the denominator here is the mean |q_dot| itself.
  return finish(numerator, mean_speed, mean_speed * std::sqrt(2.0), tau_d, f,
                true);
}

void require_coherent(const dephasing::BlochVector& init) {
  dephasing::validate(init);
  if (init.transverse() < 1e-14) {
    throw DegenerateInputError(
        "initial state has no coherence; the bound is trivially zero");
  }
}

double speed(double gamma, double rate, double frequency) {
  return std::exp(-gamma) * std::hypot(rate, frequency);
}

double integrate_speed(const std::function<double(double)>& f, double a,
                       double b, double rel_tol) {
  // Coarse pass fixes the absolute tolerance handed to adaptive Simpson.
  double coarse = 0.0;
  constexpr int kProbe = 16;
  for (int k = 0; k <= kProbe; ++k) {
    const double w = (k == 0 || k == kProbe) ? 0.5 : 1.0;
    coarse += w * f(a + (b - a) * k / kProbe);
  }
  coarse *= (b - a) / kProbe;
  const double tol = rel_tol * std::max(std::abs(coarse), 1e-300);
  return quad::simpson(f, a, b, tol).value;
}

QslResult pulsed_closed(const std::vector<double>& gamma_lattice, int n0,
                        int n1, double interval, double frequency,
                        const dephasing::BlochVector& init, double tau_d) {
  auto rate = [&](int n) {
    if (n == 0) return (gamma_lattice[1] - gamma_lattice[0]) / (2.0 * interval);
    return (gamma_lattice[n + 1] - gamma_lattice[n - 1]) / (4.0 * interval);
  };
  auto q = [&](int n) {
    return std::exp(-gamma_lattice[n]) *
           std::polar(1.0, frequency * 2.0 * n * interval);
  };
  double integral = 0.0;
  const double h = 2.0 * interval;
  for (int n = n0; n <= n1; ++n) {
    const double w = (n == n0 || n == n1) ? 0.5 : 1.0;
    integral += w * h * speed(gamma_lattice[n], rate(n), frequency);
  }
  return closed_from_parts(init, q(n0), q(n1), integral / tau_d, tau_d);
}

}  // namespace

QslResult qsl_dephasing_closed(const bath::OhmicLikeSpec& spec,
                               double temperature, double frequency,
                               const dephasing::BlochVector& init, double t,
                               double tau_d,
                               std::optional<dephasing::PulseSequence> pulse,
                               const ClosedFormOptions& opts) {
  check_tau(tau_d);
  require_coherent(init);
  if (!(t >= 0.0)) throw DomainError("time must be non-negative");
  if (pulse) {
    const int n0 = dephasing::lattice_index(t, *pulse);
    const int n1 = dephasing::lattice_index(t + tau_d, *pulse);
    const auto g = bath::decoherence_factor_pulsed_lattice(
        spec, temperature, n1 + 1, pulse->interval, opts.quadrature);
    std::vector<double> gl(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gl[i] = g[i].value;
    return pulsed_closed(gl, n0, n1, pulse->interval, frequency, init, tau_d);
  }
  auto sample = [&](double x, double& gamma, double& rate) {
    const double times[1] = {x};
    const auto s =
        bath::decoherence_samples(spec, temperature, times, false, opts.quadrature);
    gamma = s.gamma[0];
    rate = s.rate[0];
  };
  double g0, r0, g1, r1;
  sample(t, g0, r0);
  sample(t + tau_d, g1, r1);
  auto f = [&](double x) {
    double g, r;
    sample(x, g, r);
    return speed(g, r, frequency);
  };
  const double integral =
      integrate_speed(f, t, t + tau_d, opts.simpson_tol);
  const Complex q0 = std::exp(-g0) * std::polar(1.0, frequency * t);
  const Complex q1 = std::exp(-g1) * std::polar(1.0, frequency * (t + tau_d));
  return closed_from_parts(init, q0, q1, integral / tau_d, tau_d);
}

QslResult qsl_dephasing_closed(const dephasing::DephasingTrajectory& traj,
                               double t, double tau_d,
                               const ClosedFormOptions& opts) {
  check_tau(tau_d);
  require_coherent(traj.init);
  if (traj.pulse) {
    const auto& p = *traj.pulse;
    const int n0 = dephasing::lattice_index(t, p);
    const int n1 = dephasing::lattice_index(t + tau_d, p);
    // Needs the contiguous lattice n0..n1 + 1 for the central differences.
    const std::size_t i0 = grid_index(traj.grid, t);
    const std::size_t i1 = grid_index(traj.grid, t + tau_d);
    if (i1 - i0 != static_cast<std::size_t>(n1 - n0)) {
      throw RangeError("pulsed trajectory grid is not the full lattice");
    }
    double integral = 0.0;
    const double h = 2.0 * p.interval;
    for (std::size_t i = i0; i <= i1; ++i) {
      const double w = (i == i0 || i == i1) ? 0.5 : 1.0;
      integral += w * h * std::abs(traj.q_dot[i]);
    }
    return closed_from_parts(traj.init, traj.q[i0], traj.q[i1],
                             integral / tau_d, tau_d);
  }
  if (t < traj.grid.front() || t + tau_d > traj.grid.back() *
                                               (1.0 + 1e-15)) {
    throw RangeError("window outside the trajectory grid");
  }
  const double t1 = std::min(t + tau_d, traj.grid.back());
  auto f = [&](double x) {
    return speed(traj.gamma_at(x), traj.rate_at(x), traj.frequency);
  };
  const double integral = integrate_speed(f, t, t1, opts.simpson_tol);
  return closed_from_parts(traj.init, traj.q_at(t), traj.q_at(t1),
                           integral / tau_d, tau_d);
}

namespace {

double coherence_ratio(const QslResult& r, const dephasing::BlochVector& init,
                       double gamma) {
  const double c = init.transverse() * std::exp(-gamma);
  if (c < 1e-14) {
    throw DegenerateInputError("coherence at t vanishes; ratio undefined");
  }
  return r.ratio / c;
}

}  // namespace

double qsl_coherence_ratio(const bath::OhmicLikeSpec& spec, double temperature,
                           double frequency, const dephasing::BlochVector& init,
                           double t, double tau_d,
                           const ClosedFormOptions& opts) {
  const QslResult r = qsl_dephasing_closed(spec, temperature, frequency, init,
                                           t, tau_d, {}, opts);
  const double gamma =
      bath::decoherence_factor(spec, temperature, t, opts.quadrature).value;
  return coherence_ratio(r, init, gamma);
}

double qsl_coherence_ratio(const dephasing::DephasingTrajectory& traj,
                           double t, double tau_d,
                           const ClosedFormOptions& opts) {
  const QslResult r = qsl_dephasing_closed(traj, t, tau_d, opts);
  const double gamma = traj.pulse
                           ? traj.gamma[grid_index(traj.grid, t)]
                           : traj.gamma_at(t);
  return coherence_ratio(r, traj.init, gamma);
}

}  // namespace qsllab::qsl
