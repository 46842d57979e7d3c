#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qsllab/bath.hpp"
#include "qsllab/linalg.hpp"

namespace qsllab::dephasing {

struct BlochVector {
  double x = 1.0;
  double y = 0.0;
  double z = 0.0;

  double transverse() const;  // sqrt(x^2 + y^2)
};
void validate(const BlochVector& v);

// Bang-bang control with pi pulses every `interval`; the state is only
// defined on the lattice t = 2 N interval.
struct PulseSequence {
  double interval = 0.0;
};

struct CoherenceFactor {
  Complex q;
  Complex q_dot;
  double gamma = 0.0;
  double rate = 0.0;  // dGamma/dt (lattice difference when pulsed)
};

CoherenceFactor coherence_factor(const bath::OhmicLikeSpec& spec,
                                 double temperature, double frequency,
                                 double t,
                                 std::optional<PulseSequence> pulse = {},
                                 const quad::Options& opts =
                                     bath::default_options());

DensityMatrix reduced_state(const BlochVector& init, Complex q);
MatrixDerivative reduced_state_derivative(const BlochVector& init,
                                          Complex q_dot);

// Lattice index N with t = 2 N interval; throws DomainError off-lattice.
int lattice_index(double t, const PulseSequence& pulse);

struct TrajectoryOptions {
  quad::Options quadrature = bath::default_options();
  std::size_t workers = 1;
  // Grid points per quadrature batch; fixed so results do not depend on
  // the worker count.
  std::size_t batch = 32;
};

struct DephasingTrajectory {
  std::vector<double> grid;
  std::vector<Complex> q;
  std::vector<Complex> q_dot;
  std::vector<double> gamma;
  std::vector<double> rate;
  std::vector<double> curvature;  // empty for pulsed trajectories
  std::vector<double> gamma_error;
  BlochVector init;
  double frequency = 0.0;
  std::optional<PulseSequence> pulse;

  std::size_t size() const { return grid.size(); }
  DensityMatrix state(std::size_t i) const;
  MatrixDerivative derivative(std::size_t i) const;

  // Quintic Hermite interpolation of Gamma between samples (and its
  // derivative); only for non-pulsed trajectories.
  double gamma_at(double t) const;
  double rate_at(double t) const;
  Complex q_at(double t) const;
  double max_gamma_error() const;
};

DephasingTrajectory build_trajectory(const bath::OhmicLikeSpec& spec,
                                     double temperature, double frequency,
                                     const BlochVector& init,
                                     std::span<const double> grid,
                                     std::optional<PulseSequence> pulse = {},
                                     const TrajectoryOptions& opts = {});

std::vector<double> uniform_grid(double t0, double t1, std::size_t count);

// Spacing resolution * max(t, 1/cutoff): fine where Gamma varies quickly
// (t ~ 1/cutoff) and geometric afterwards.
std::vector<double> graded_grid(double t0, double t1, double cutoff,
                                double resolution = 0.03);

// Lattice times 2 N interval for N in [n0, n1].
std::vector<double> lattice_grid(int n0, int n1, const PulseSequence& pulse);

}  // namespace qsllab::dephasing
