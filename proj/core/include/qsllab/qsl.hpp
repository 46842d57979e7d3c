#pragma once

#include <optional>
#include <vector>

#include "qsllab/bath.hpp"
#include "qsllab/dephasing.hpp"
#include "qsllab/linalg.hpp"

namespace qsllab::qsl {

enum class Branch { kOperatorSum, kRootSumSquare };

const char* to_string(Branch b);

struct QslResult {
  double tau_qsl = 0.0;
  double tau_d = 0.0;
  double ratio = 0.0;
  Branch branch = Branch::kOperatorSum;
  double f_final = 1.0;  // relative purity at t + tau_d
};

// States with their exact generator outputs on an increasing grid.
struct StateTrajectory {
  std::vector<double> grid;
  std::vector<DensityMatrix> states;
  std::vector<MatrixDerivative> derivatives;
  // Derivatives came from lattice differences; the generic bound refuses
  // such trajectories.
  bool lattice_derivatives = false;

  std::size_t size() const { return grid.size(); }
};

StateTrajectory to_state_trajectory(const dephasing::DephasingTrajectory& tr);

// Qubit A of a two-qubit trajectory.
StateTrajectory reduce_to_qubit_a(const StateTrajectory& tr);

double relative_purity(const DensityMatrix& initial, const DensityMatrix& final_state);

// max{1/<sum s_i r_i>, 1/<sqrt(sum s_i^2)>} |f - 1| Tr(rho_t^2) with
// trapezoidal averages over [t, t + tau_d]; both window ends must be grid
// points.
QslResult qsl_generic(const StateTrajectory& traj, double t, double tau_d);

struct ClosedFormOptions {
  quad::Options quadrature = bath::default_options();
  double simpson_tol = 1e-8;  // relative to tau_d
};

QslResult qsl_dephasing_closed(const bath::OhmicLikeSpec& spec,
                               double temperature, double frequency,
                               const dephasing::BlochVector& init, double t,
                               double tau_d,
                               std::optional<dephasing::PulseSequence> pulse = {},
                               const ClosedFormOptions& opts = {});

// Same bound from a precomputed trajectory: interpolated Gamma when
// unpulsed, lattice samples when pulsed.
QslResult qsl_dephasing_closed(const dephasing::DephasingTrajectory& traj,
                               double t, double tau_d,
                               const ClosedFormOptions& opts = {});

// (tau_QSL / tau_d) / C_t with C_t the l1 coherence at t.
double qsl_coherence_ratio(const bath::OhmicLikeSpec& spec, double temperature,
                           double frequency, const dephasing::BlochVector& init,
                           double t, double tau_d,
                           const ClosedFormOptions& opts = {});
double qsl_coherence_ratio(const dephasing::DephasingTrajectory& traj,
                           double t, double tau_d,
                           const ClosedFormOptions& opts = {});

}  // namespace qsllab::qsl
