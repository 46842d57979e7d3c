#include "qsllab/dephasing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qsllab/error.hpp"
#include "qsllab/parallel.hpp"

namespace qsllab::dephasing {

double BlochVector::transverse() const { return std::hypot(x, y); }

void validate(const BlochVector& v) {
  if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
    throw ParameterError("Bloch vector components must be finite");
  }
  const double r2 = v.x * v.x + v.y * v.y + v.z * v.z;
  if (r2 > 1.0 + 1e-12) {
    throw ParameterError("Bloch vector length exceeds 1");
  }
}

int lattice_index(double t, const PulseSequence& pulse) {
  if (!(pulse.interval > 0.0)) {
    throw ParameterError("pulse interval must be positive");
  }
  const double cycle = 2.0 * pulse.interval;
  const double n = std::round(t / cycle);
  if (!(t >= 0.0) || std::abs(t - n * cycle) > 1e-9 * std::max(1.0, t)) {
    throw DomainError("time " + std::to_string(t) +
                      " is not a lattice point 2 N dt of the pulse sequence");
  }
  return static_cast<int>(n);
}

namespace {

Complex coherence(double frequency, double t, double gamma) {
  return std::exp(-gamma) * std::polar(1.0, frequency * t);
}

double lattice_rate(const std::vector<bath::Value>& g, int n, double interval) {
  if (n == 0) return (g[1].value - g[0].value) / (2.0 * interval);
  return (g[n + 1].value - g[n - 1].value) / (4.0 * interval);
}

}  // namespace

CoherenceFactor coherence_factor(const bath::OhmicLikeSpec& spec,
                                 double temperature, double frequency,
                                 double t, std::optional<PulseSequence> pulse,
                                 const quad::Options& opts) {
  if (!(t >= 0.0)) throw DomainError("time must be non-negative");
  CoherenceFactor out;
  if (pulse) {
    const int n = lattice_index(t, *pulse);
    const auto g = bath::decoherence_factor_pulsed_lattice(
        spec, temperature, n + 1, pulse->interval, opts);
    out.gamma = g[n].value;
    out.rate = lattice_rate(g, n, pulse->interval);
  } else {
    const double times[1] = {t};
    const auto s =
        bath::decoherence_samples(spec, temperature, times, false, opts);
    out.gamma = s.gamma[0];
    out.rate = s.rate[0];
  }
  out.q = coherence(frequency, t, out.gamma);
  out.q_dot = Complex(-out.rate, frequency) * out.q;
  return out;
}

DensityMatrix reduced_state(const BlochVector& init, Complex q) {
  validate(init);
  if (std::abs(q) > 1.0 + 1e-10) {
    throw InvariantError("coherence factor magnitude exceeds 1");
  }
  const Complex minus(init.x, -init.y);
  ComplexMatrix m(2, 2);
  m(0, 0) = 0.5 * (1.0 + init.z);
  m(1, 1) = 0.5 * (1.0 - init.z);
  m(0, 1) = 0.5 * minus * q;
  m(1, 0) = std::conj(m(0, 1));
  return DensityMatrix(m);
}

MatrixDerivative reduced_state_derivative(const BlochVector& init,
                                          Complex q_dot) {
  const Complex minus(init.x, -init.y);
  ComplexMatrix m(2, 2);
  m(0, 1) = 0.5 * minus * q_dot;
  m(1, 0) = std::conj(m(0, 1));
  return MatrixDerivative(m);
}

DensityMatrix DephasingTrajectory::state(std::size_t i) const {
  return reduced_state(init, q.at(i));
}

MatrixDerivative DephasingTrajectory::derivative(std::size_t i) const {
  return reduced_state_derivative(init, q_dot.at(i));
}

namespace {

// Locates the cell [grid[i], grid[i+1]] containing t.
std::size_t cell(const std::vector<double>& grid, double t) {
  if (grid.size() < 2 || t < grid.front() || t > grid.back()) {
    throw RangeError("time " + std::to_string(t) + " outside trajectory grid");
  }
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  i = std::min(i, grid.size() - 1);
  return i - 1;
}

}  // namespace

double DephasingTrajectory::gamma_at(double t) const {
  if (pulse) throw DomainError("pulsed trajectories are lattice-only");
  if (grid.size() == 1 && t == grid[0]) return gamma[0];
  const std::size_t i = cell(grid, t);
  const double h = grid[i + 1] - grid[i];
  const double s = (t - grid[i]) / h;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
  const double h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
  const double h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
  const double h3 = 0.5 * (s3 - 2.0 * s4 + s5);
  const double h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
  const double h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
  return gamma[i] * h0 + h * rate[i] * h1 + h * h * curvature[i] * h2 +
         h * h * curvature[i + 1] * h3 + h * rate[i + 1] * h4 +
         gamma[i + 1] * h5;
}

double DephasingTrajectory::rate_at(double t) const {
  if (pulse) throw DomainError("pulsed trajectories are lattice-only");
  if (grid.size() == 1 && t == grid[0]) return rate[0];
  const std::size_t i = cell(grid, t);
  const double h = grid[i + 1] - grid[i];
  const double s = (t - grid[i]) / h;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
  const double d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
  const double d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
  const double d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
  const double d3 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
  const double d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
  const double d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
  return (gamma[i] * d0 + gamma[i + 1] * d5) / h + rate[i] * d1 +
         h * curvature[i] * d2 + h * curvature[i + 1] * d3 +
         rate[i + 1] * d4;
}

Complex DephasingTrajectory::q_at(double t) const {
  return coherence(frequency, t, gamma_at(t));
}

double DephasingTrajectory::max_gamma_error() const {
  double m = 0.0;
  for (double e : gamma_error) m = std::max(m, e);
  return m;
}

DephasingTrajectory build_trajectory(const bath::OhmicLikeSpec& spec,
                                     double temperature, double frequency,
                                     const BlochVector& init,
                                     std::span<const double> grid,
                                     std::optional<PulseSequence> pulse,
                                     const TrajectoryOptions& opts) {
  validate(init);
  bath::validate(spec);
  if (!std::isfinite(frequency)) throw ParameterError("frequency must be finite");
  if (grid.empty()) throw DomainError("empty time grid");
  if (!(grid[0] >= 0.0)) throw DomainError("time grid must start at t >= 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw DomainError("time grid must be strictly increasing");
    }
  }
  if (opts.batch == 0) throw ParameterError("batch size must be positive");

  DephasingTrajectory tr;
  tr.grid.assign(grid.begin(), grid.end());
  tr.init = init;
  tr.frequency = frequency;
  tr.pulse = pulse;
  const std::size_t n = grid.size();
  tr.gamma.assign(n, 0.0);
  tr.rate.assign(n, 0.0);
  tr.gamma_error.assign(n, 0.0);

  if (pulse) {
    std::vector<int> idx(n);
    int n_max = 0;
    for (std::size_t i = 0; i < n; ++i) {
      idx[i] = lattice_index(grid[i], *pulse);
      n_max = std::max(n_max, idx[i]);
    }
    const auto g = bath::decoherence_factor_pulsed_lattice(
        spec, temperature, n_max + 1, pulse->interval, opts.quadrature);
    for (std::size_t i = 0; i < n; ++i) {
      tr.gamma[i] = g[idx[i]].value;
      tr.gamma_error[i] = g[idx[i]].error;
      tr.rate[i] = lattice_rate(g, idx[i], pulse->interval);
    }
  } else {
    tr.curvature.assign(n, 0.0);
    const std::size_t batches = (n + opts.batch - 1) / opts.batch;
    parallel_for(batches, opts.workers, [&](std::size_t b) {
      const std::size_t lo = b * opts.batch;
      const std::size_t hi = std::min(n, lo + opts.batch);
      const auto s = bath::decoherence_samples(
          spec, temperature, grid.subspan(lo, hi - lo), true, opts.quadrature);
      for (std::size_t i = lo; i < hi; ++i) {
        tr.gamma[i] = s.gamma[i - lo];
        tr.rate[i] = s.rate[i - lo];
        tr.curvature[i] = s.curvature[i - lo];
        tr.gamma_error[i] = s.gamma_error[i - lo];
      }
    });
  }

  tr.q.resize(n);
  tr.q_dot.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tr.q[i] = coherence(frequency, grid[i], tr.gamma[i]);
    tr.q_dot[i] = Complex(-tr.rate[i], frequency) * tr.q[i];
  }
  return tr;
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t count) {
  if (count < 2 || !(t1 > t0)) {
    throw ParameterError("uniform grid needs count >= 2 and t1 > t0");
  }
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) /
                    static_cast<double>(count - 1);
  }
  g.back() = t1;
  return g;
}

std::vector<double> graded_grid(double t0, double t1, double cutoff,
                                double resolution) {
  if (!(t1 > t0) || !(t0 >= 0.0) || !(cutoff > 0.0) || !(resolution > 0.0)) {
    throw ParameterError("graded grid needs 0 <= t0 < t1, cutoff > 0");
  }
  std::vector<double> g{t0};
  double t = t0;
  while (t < t1) {
    const double h = resolution * std::max(t, 1.0 / cutoff);
    t += h;
    if (t > t1 - 0.25 * h) t = t1;
    g.push_back(t);
  }
  return g;
}

std::vector<double> lattice_grid(int n0, int n1, const PulseSequence& pulse) {
  if (!(pulse.interval > 0.0)) {
    throw ParameterError("pulse interval must be positive");
  }
  if (n0 < 0 || n1 < n0) throw ParameterError("bad lattice index range");
  std::vector<double> g;
  for (int k = n0; k <= n1; ++k) g.push_back(2.0 * k * pulse.interval);
  return g;
}

}  // namespace qsllab::dephasing
