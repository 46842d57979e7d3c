#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "qsllab/bath.hpp"
#include "qsllab/linalg.hpp"
#include "qsllab/qsl.hpp"

namespace qsllab::heom {

// Two-qubit operators in the |a b> product basis, sigma_z = diag(1, -1).
ComplexMatrix sigma_z_b();       // I (x) sigma_z
ComplexMatrix sigma_x_b();       // I (x) sigma_x
ComplexMatrix zz_interaction();  // sigma_z (x) sigma_z

// |++><++|: every entry 1/4.
DensityMatrix product_plus_state();

struct HeomConfig {
  double frequency = 1.0;  // Omega, shared by both qubits
  double g0 = 0.1;
  bath::DrudeSpec drude{0.05, 5.0};
  double temperature = 5.0;
  int K = 1;  // Matsubara cutoff; K + 1 exponential terms
  int L = 3;  // hierarchy depth, max sum of l_k
  ComplexMatrix coupling_op = sigma_z_b();
  ComplexMatrix interaction_op = zz_interaction();  // multiplied by g0
  // Integrator step; 0 picks the largest stable step that divides
  // output_interval.
  double dt = 0.0;
  double t_max = 10.0;
  double output_interval = 0.05;
  // Folds the Matsubara terms beyond K into a Markovian
  // -R [f, [f, rho]] term on every ADO.
  bool terminator = true;
  std::size_t max_ados = 250000;
  std::size_t workers = 1;
};

void validate(const HeomConfig& config);

// Omega/2 (sigma_z (x) I + I (x) sigma_z) + g0 interaction_op.
ComplexMatrix system_hamiltonian(const HeomConfig& config);

// C(L + K + 1, K + 1), saturating at SIZE_MAX.
std::size_t ado_count(int L, int K);

// Largest dt with dt (nu_max + spread(H)) < 0.5 and
// dt (L nu_max + R spread(f)^2) < 2.5, shrunk by 10%.
double stable_step(const HeomConfig& config);

// Multi-indices with sum <= L in graded lexicographic order (level by
// level, larger l_0 first), with neighbour tables.
class HierarchyIndex {
 public:
  HierarchyIndex(int L, int K);

  int depth() const noexcept { return L_; }
  int cutoff() const noexcept { return K_; }
  std::size_t size() const noexcept { return level_.size(); }
  int modes() const noexcept { return K_ + 1; }

  // Entry k of multi-index `slot`.
  int at(std::size_t slot, int k) const {
    return indices_[slot * static_cast<std::size_t>(K_ + 1) + k];
  }
  std::vector<int> index(std::size_t slot) const;
  int level(std::size_t slot) const { return level_[slot]; }
  // Slot of a multi-index, or SIZE_MAX if it lies beyond the truncation.
  std::size_t find(const std::vector<int>& l) const;

  struct Down {
    std::uint32_t slot;  // l - e_k
    std::uint16_t mode;  // k
    std::uint16_t count; // l_k
  };
  // Existing l + e_k slots.
  const std::uint32_t* up_begin(std::size_t slot) const {
    return up_.data() + up_offset_[slot];
  }
  const std::uint32_t* up_end(std::size_t slot) const {
    return up_.data() + up_offset_[slot + 1];
  }
  const Down* down_begin(std::size_t slot) const {
    return down_.data() + down_offset_[slot];
  }
  const Down* down_end(std::size_t slot) const {
    return down_.data() + down_offset_[slot + 1];
  }

 private:
  int L_;
  int K_;
  std::vector<std::uint8_t> indices_;
  std::vector<int> level_;
  std::vector<std::size_t> up_offset_;
  std::vector<std::uint32_t> up_;
  std::vector<std::size_t> down_offset_;
  std::vector<Down> down_;
};

inline constexpr std::size_t kAdoStride = 16;  // 4x4 row-major

struct HierarchyState {
  std::shared_ptr<const HierarchyIndex> index;
  std::vector<Complex> ados;  // size() * 16 entries
  double t = 0.0;

  std::size_t size() const { return index->size(); }
  ComplexMatrix ado(std::size_t slot) const;
};

// ADO(0) = rho0, all others zero. Throws CapacityError over max_ados.
HierarchyState build_hierarchy(const HeomConfig& config,
                               const DensityMatrix& rho0);
// Same without state validation (linearity checks use unnormalised input).
HierarchyState build_hierarchy_raw(const HeomConfig& config,
                                   const ComplexMatrix& rho0);

// Precomputed right-hand side of the hierarchy for one configuration.
class HierarchyEquations {
 public:
  HierarchyEquations(const HeomConfig& config,
                     std::shared_ptr<const HierarchyIndex> index);

  void apply(const Complex* in, Complex* out) const;
  std::size_t size() const { return index_->size(); }
  const bath::ExponentialExpansion& expansion() const { return expansion_; }
  double terminator_rate() const { return remainder_; }

 private:
  void apply_slots(const Complex* in, Complex* out, std::size_t lo,
                   std::size_t hi) const;
  void apply_diagonal(const Complex* in, Complex* out, std::size_t lo,
                      std::size_t hi) const;

  std::shared_ptr<const HierarchyIndex> index_;
  bath::ExponentialExpansion expansion_;
  std::vector<double> nu_;
  std::vector<Complex> zeta_;
  double remainder_ = 0.0;
  ComplexMatrix f_;
  ComplexMatrix g_;  // -i H - R f^2
  ComplexMatrix g_adj_;
  bool diagonal_ = false;
  // Element-wise coefficients for diagonal H and f.
  std::array<Complex, 16> own_{};
  std::array<Complex, 16> up_coef_{};
  std::vector<Complex> down_coef_;  // (K + 1) * 16
  std::size_t workers_ = 1;
};

std::vector<Complex> heom_rhs(const HierarchyState& state,
                              const HeomConfig& config);

struct HeomReport {
  int L = 0;
  int K = 0;
  double dt = 0.0;
  std::size_t ados = 0;
  std::size_t steps = 0;
  double trace_drift = 0.0;        // max |Tr rho(t) - Tr rho(0)|
  double hermiticity_drift = 0.0;  // max hermiticity defect of rho(t)
  double terminator_rate = 0.0;
};

// Unvalidated ADO(0) samples on the output grid.
struct RawTrajectory {
  std::vector<double> grid;
  std::vector<ComplexMatrix> states;
  std::vector<ComplexMatrix> derivatives;
  HeomReport report;
};

struct HeomTrajectory {
  qsl::StateTrajectory trajectory;  // rho_AB with exact derivatives
  HeomReport report;
};

// Output grid 0, output_interval, ..., t_max.
std::vector<double> output_grid(const HeomConfig& config);

// Fixed-step classical RK4.
RawTrajectory evolve_raw(const HeomConfig& config, const ComplexMatrix& rho0);

// As evolve_raw, validating every sample; negative eigenvalues beyond the
// positivity slack raise TruncationError.
HeomTrajectory evolve(const HeomConfig& config, const DensityMatrix& rho0);
HeomTrajectory validate_trajectory(const RawTrajectory& raw);

// Exact pure-dephasing solution, valid only for coupling sigma_z on qubit B
// and a sigma_z (x) sigma_z interaction.
DensityMatrix exact_commuting_solution(const HeomConfig& config,
                                       const DensityMatrix& rho0, double t);
bool is_commuting_model(const HeomConfig& config);

struct ConvergeResult {
  HeomTrajectory result;
  int L = 0;
  int K = 0;
  std::vector<double> deltas;  // delta between depth L-1 and L, from L = 2
};

// K from the bath cutoff rule unless `cutoff` >= 0 (config.K is ignored),
// L = 1, 2, ... until
// successive trajectories differ by less than tol (max Frobenius distance
// over the grid). Returns the deeper of the final pair.
ConvergeResult converge(const HeomConfig& config, const DensityMatrix& rho0,
                        double tol, int max_depth = 12,
                        int cutoff = -1);

struct StepDoubling {
  double coarse_delta = 0.0;  // |rho_dt - rho_dt/2| at t_max
  double fine_delta = 0.0;    // |rho_dt/2 - rho_dt/4| at t_max
  double ratio = 0.0;
};

// Runs dt, dt/2 and dt/4 (dt = config.dt or the stable step).
StepDoubling step_doubling(const HeomConfig& config, const ComplexMatrix& rho0);

}  // namespace qsllab::heom
