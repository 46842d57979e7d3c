#include "qsllab/heom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "qsllab/error.hpp"
#include "qsllab/parallel.hpp"

namespace qsllab::heom {

namespace {

constexpr Complex kI(0.0, 1.0);
constexpr double kPi = 3.14159265358979323846;

ComplexMatrix identity2() { return ComplexMatrix::identity(2); }

double spread(const ComplexMatrix& h) {
  const auto e = eigvalsh(h);
  return e.back() - e.front();
}

void check_operator(const ComplexMatrix& m, const char* name) {
  if (m.rows() != 4 || m.cols() != 4) {
    throw DimensionError(std::string(name) + " must be 4x4");
  }
  if (m.hermiticity_defect() > 1e-12 * std::max(1.0, m.max_abs())) {
    throw ParameterError(std::string(name) + " must be Hermitian");
  }
}

double max_rate(const HeomConfig& c) {
  return std::max(c.drude.cutoff, 2.0 * kPi * c.temperature * c.K);
}

double remainder_rate(const HeomConfig& c) {
  if (!c.terminator) return 0.0;
  return bath::drude_expansion(c.drude, c.temperature, c.K).remainder();
}

// Step that divides output_interval into whole substeps.
double resolved_step(const HeomConfig& c, std::size_t& substeps) {
  const double target = c.dt > 0.0 ? c.dt : stable_step(c);
  substeps = static_cast<std::size_t>(
      std::ceil(c.output_interval / target - 1e-9));
  substeps = std::max<std::size_t>(substeps, 1);
  return c.output_interval / static_cast<double>(substeps);
}

}  // namespace

ComplexMatrix sigma_z_b() { return kron(identity2(), pauli_z()); }
ComplexMatrix sigma_x_b() { return kron(identity2(), pauli_x()); }
ComplexMatrix zz_interaction() { return kron(pauli_z(), pauli_z()); }

DensityMatrix product_plus_state() {
  return DensityMatrix::pure({0.5, 0.5, 0.5, 0.5});
}

void validate(const HeomConfig& c) {
  bath::validate(c.drude);
  if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) {
    throw ParameterError("HEOM needs a finite positive temperature");
  }
  if (!std::isfinite(c.frequency) || !(c.frequency > 0.0)) {
    throw ParameterError("qubit frequency must be positive");
  }
  if (!std::isfinite(c.g0)) throw ParameterError("g0 must be finite");
  if (c.L < 1 || c.L > 255) throw ParameterError("hierarchy depth L must be in [1, 255]");
  if (c.K < 0) throw ParameterError("Matsubara cutoff K must be >= 0");
  check_operator(c.coupling_op, "coupling operator");
  check_operator(c.interaction_op, "interaction operator");
  if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) {
    throw ParameterError("t_max must be positive");
  }
  if (!(c.output_interval > 0.0) || c.output_interval > c.t_max) {
    throw ParameterError("output interval must be in (0, t_max]");
  }
  const double n = c.t_max / c.output_interval;
  if (std::abs(n - std::round(n)) > 1e-9 * n) {
    throw ParameterError("t_max must be a whole number of output intervals");
  }
  if (c.workers == 0) throw ParameterError("worker count must be at least 1");
  if (!(c.dt >= 0.0) || !std::isfinite(c.dt)) {
    throw ParameterError("dt must be >= 0 (0 selects a stable step)");
  }
  if (c.dt > 0.0) {
    std::size_t sub = 0;
    const double dt = resolved_step(c, sub);
    const double nu = max_rate(c);
    const double h = spread(system_hamiltonian(c));
    const double f = spread(c.coupling_op);
    if (dt * (nu + h) >= 0.5 ||
        dt * (c.L * nu + remainder_rate(c) * f * f) >= 2.5) {
      throw ParameterError("dt = " + std::to_string(dt) +
                           " violates the RK4 stability guard; use dt <= " +
                           std::to_string(stable_step(c)));
    }
  }
}

ComplexMatrix system_hamiltonian(const HeomConfig& c) {
  const ComplexMatrix z = pauli_z();
  ComplexMatrix h = kron(z, identity2()) + kron(identity2(), z);
  h *= 0.5 * c.frequency;
  return h + c.interaction_op * Complex(c.g0, 0.0);
}

std::size_t ado_count(int L, int K) {
  if (L < 0 || K < 0) return 0;
  // C(n, r) with r = min(L, K + 1).
  const std::uint64_t n = static_cast<std::uint64_t>(L) + K + 1;
  const std::uint64_t r = std::min<std::uint64_t>(L, K + 1);
  const std::uint64_t cap = std::numeric_limits<std::size_t>::max();
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    const std::uint64_t m = n - r + i;
    if (c > cap / m) return static_cast<std::size_t>(cap);
    c = c * m / i;
  }
  return static_cast<std::size_t>(c);
}

double stable_step(const HeomConfig& c) {
  const double nu = max_rate(c);
  const double h = spread(system_hamiltonian(c));
  const double f = spread(c.coupling_op);
  const double a = 0.5 / (nu + h);
  const double b = 2.5 / (c.L * nu + remainder_rate(c) * f * f);
  return 0.9 * std::min(a, b);
}

// ---------------------------------------------------------------- index

HierarchyIndex::HierarchyIndex(int L, int K) : L_(L), K_(K) {
  if (L < 0 || L > 255 || K < 0) throw ParameterError("bad hierarchy shape");
  const std::size_t modes = static_cast<std::size_t>(K) + 1;
  const std::size_t total = ado_count(L, K);
  if (total > std::numeric_limits<std::uint32_t>::max()) {
    throw CapacityError("hierarchy too large to index");
  }
  indices_.reserve(total * modes);
  level_.reserve(total);

  std::vector<std::uint8_t> cur(modes, 0);
  // Compositions of `left` into modes k..K, largest leading entry first.
  auto fill = [&](auto&& self, std::size_t k, int left, int lev) -> void {
    if (k + 1 == modes) {
      cur[k] = static_cast<std::uint8_t>(left);
      indices_.insert(indices_.end(), cur.begin(), cur.end());
      level_.push_back(lev);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[k] = static_cast<std::uint8_t>(v);
      self(self, k + 1, left - v, lev);
    }
  };
  for (int lev = 0; lev <= L; ++lev) fill(fill, 0, lev, lev);

  std::unordered_map<std::string, std::uint32_t> lookup;
  lookup.reserve(total);
  auto key = [&](std::size_t slot) {
    return std::string(reinterpret_cast<const char*>(&indices_[slot * modes]),
                       modes);
  };
  for (std::size_t s = 0; s < total; ++s) {
    lookup.emplace(key(s), static_cast<std::uint32_t>(s));
  }

  up_offset_.assign(total + 1, 0);
  down_offset_.assign(total + 1, 0);
  std::string probe;
  for (std::size_t s = 0; s < total; ++s) {
    probe = key(s);
    for (std::size_t k = 0; k < modes; ++k) {
      const auto lk = static_cast<std::uint8_t>(probe[k]);
      if (level_[s] < L) {
        probe[k] = static_cast<char>(lk + 1);
        up_.push_back(lookup.at(probe));
        probe[k] = static_cast<char>(lk);
      }
      if (lk > 0) {
        probe[k] = static_cast<char>(lk - 1);
        down_.push_back({lookup.at(probe), static_cast<std::uint16_t>(k),
                         static_cast<std::uint16_t>(lk)});
        probe[k] = static_cast<char>(lk);
      }
    }
    up_offset_[s + 1] = up_.size();
    down_offset_[s + 1] = down_.size();
  }
}

std::vector<int> HierarchyIndex::index(std::size_t slot) const {
  std::vector<int> l(static_cast<std::size_t>(K_) + 1);
  for (int k = 0; k <= K_; ++k) l[k] = at(slot, k);
  return l;
}

std::size_t HierarchyIndex::find(const std::vector<int>& l) const {
  if (l.size() != static_cast<std::size_t>(K_) + 1) {
    throw DimensionError("multi-index has the wrong number of modes");
  }
  int sum = 0;
  for (int v : l) {
    if (v < 0) return std::numeric_limits<std::size_t>::max();
    sum += v;
  }
  if (sum > L_) return std::numeric_limits<std::size_t>::max();
  // Linear scan within the level; only used outside hot loops.
  for (std::size_t s = 0; s < size(); ++s) {
    if (level_[s] != sum) continue;
    bool same = true;
    for (int k = 0; k <= K_ && same; ++k) same = at(s, k) == l[k];
    if (same) return s;
  }
  return std::numeric_limits<std::size_t>::max();
}

ComplexMatrix HierarchyState::ado(std::size_t slot) const {
  ComplexMatrix m(4, 4);
  const Complex* p = ados.data() + slot * kAdoStride;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = p[i * 4 + j];
  }
  return m;
}

HierarchyState build_hierarchy_raw(const HeomConfig& config,
                                   const ComplexMatrix& rho0) {
  validate(config);
  if (rho0.rows() != 4 || rho0.cols() != 4) {
    throw DimensionError("HEOM initial state must be 4x4");
  }
  const std::size_t n = ado_count(config.L, config.K);
  if (n > config.max_ados) {
    throw CapacityError("hierarchy (L = " + std::to_string(config.L) +
                        ", K = " + std::to_string(config.K) + ") needs " +
                        std::to_string(n) + " ADOs, budget is " +
                        std::to_string(config.max_ados) +
                        "; reduce L or K");
  }
  HierarchyState s;
  s.index = std::make_shared<const HierarchyIndex>(config.L, config.K);
  s.ados.assign(n * kAdoStride, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) s.ados[i * 4 + j] = rho0(i, j);
  }
  return s;
}

HierarchyState build_hierarchy(const HeomConfig& config,
                               const DensityMatrix& rho0) {
  if (rho0.dim() != 4) throw DimensionError("HEOM initial state must be 4x4");
  return build_hierarchy_raw(config, rho0.matrix());
}

// ---------------------------------------------------------------- rhs

namespace {

// out = a * b for row-major 4x4 blocks.
inline void mul4(const Complex* a, const Complex* b, Complex* out) {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Complex s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[i * 4 + k] * b[k * 4 + j];
      out[i * 4 + j] = s;
    }
  }
}

void to_block(const ComplexMatrix& m, Complex* out) {
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) out[i * 4 + j] = m(i, j);
  }
}

}  // namespace

HierarchyEquations::HierarchyEquations(
    const HeomConfig& config, std::shared_ptr<const HierarchyIndex> index)
    : index_(std::move(index)),
      expansion_(bath::drude_expansion(config.drude, config.temperature,
                                       config.K)),
      f_(config.coupling_op),
      workers_(config.workers) {
  validate(config);
  if (index_->cutoff() != config.K || index_->depth() != config.L) {
    throw DimensionError("hierarchy index does not match the configuration");
  }
  for (const auto& term : expansion_.terms) {
    nu_.push_back(term.rate);
    zeta_.push_back(term.amplitude);
  }
  remainder_ = config.terminator ? expansion_.remainder() : 0.0;
  const ComplexMatrix h = system_hamiltonian(config);
  g_ = h * (-kI) - (f_ * f_) * Complex(remainder_, 0.0);
  g_adj_ = g_.adjoint();

  diagonal_ = h.is_diagonal() && f_.is_diagonal();
  if (diagonal_) {
    const std::size_t modes = zeta_.size();
    down_coef_.assign(modes * 16, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t e = i * 4 + j;
        const double fi = f_(i, i).real();
        const double fj = f_(j, j).real();
        const double hd = h(i, i).real() - h(j, j).real();
        own_[e] = -kI * hd - remainder_ * (fi - fj) * (fi - fj);
        up_coef_[e] = kI * (fi - fj);
        for (std::size_t k = 0; k < modes; ++k) {
          down_coef_[k * 16 + e] =
              kI * (fi * zeta_[k] - fj * std::conj(zeta_[k]));
        }
      }
    }
  }
}

void HierarchyEquations::apply_diagonal(const Complex* in, Complex* out,
                                        std::size_t lo, std::size_t hi) const {
  const HierarchyIndex& idx = *index_;
  const int modes = idx.modes();
  Complex up[16];
  for (std::size_t s = lo; s < hi; ++s) {
    double lnu = 0.0;
    for (int k = 0; k < modes; ++k) lnu += idx.at(s, k) * nu_[k];
    const Complex* rho = in + s * kAdoStride;
    Complex* o = out + s * kAdoStride;
    std::fill(up, up + 16, Complex(0.0, 0.0));
    for (const std::uint32_t* u = idx.up_begin(s); u != idx.up_end(s); ++u) {
      const Complex* r = in + static_cast<std::size_t>(*u) * kAdoStride;
      for (int e = 0; e < 16; ++e) up[e] += r[e];
    }
    for (int e = 0; e < 16; ++e) {
      o[e] = (own_[e] - lnu) * rho[e] + up_coef_[e] * up[e];
    }
    for (const auto* d = idx.down_begin(s); d != idx.down_end(s); ++d) {
      const Complex* r = in + static_cast<std::size_t>(d->slot) * kAdoStride;
      const Complex* c = down_coef_.data() + d->mode * 16;
      const double n = d->count;
      for (int e = 0; e < 16; ++e) o[e] += n * c[e] * r[e];
    }
  }
}

void HierarchyEquations::apply_slots(const Complex* in, Complex* out,
                                     std::size_t lo, std::size_t hi) const {
  if (diagonal_) {
    apply_diagonal(in, out, lo, hi);
    return;
  }
  const HierarchyIndex& idx = *index_;
  const int modes = idx.modes();
  Complex f[16], g[16], ga[16];
  to_block(f_, f);
  to_block(g_, g);
  to_block(g_adj_, ga);
  Complex sa[16], sb[16], t1[16], t2[16];
  for (std::size_t s = lo; s < hi; ++s) {
    double lnu = 0.0;
    for (int k = 0; k < modes; ++k) lnu += idx.at(s, k) * nu_[k];
    const Complex* rho = in + s * kAdoStride;
    Complex* o = out + s * kAdoStride;
    // sa = S + A, sb = S + B.
    std::fill(sa, sa + 16, Complex(0.0, 0.0));
    for (const std::uint32_t* u = idx.up_begin(s); u != idx.up_end(s); ++u) {
      const Complex* r = in + static_cast<std::size_t>(*u) * kAdoStride;
      for (int e = 0; e < 16; ++e) sa[e] += r[e];
    }
    std::copy(sa, sa + 16, sb);
    for (const auto* d = idx.down_begin(s); d != idx.down_end(s); ++d) {
      const Complex* r = in + static_cast<std::size_t>(d->slot) * kAdoStride;
      const Complex za = static_cast<double>(d->count) * zeta_[d->mode];
      const Complex zb = std::conj(za);
      for (int e = 0; e < 16; ++e) {
        sa[e] += za * r[e];
        sb[e] += zb * r[e];
      }
    }
    mul4(g, rho, o);
    mul4(rho, ga, t1);
    for (int e = 0; e < 16; ++e) o[e] += t1[e] - lnu * rho[e];
    mul4(f, sa, t1);
    mul4(sb, f, t2);
    for (int e = 0; e < 16; ++e) o[e] += kI * (t1[e] - t2[e]);
    if (remainder_ > 0.0) {
      mul4(f, rho, t1);
      mul4(t1, f, t2);
      for (int e = 0; e < 16; ++e) o[e] += 2.0 * remainder_ * t2[e];
    }
  }
}

void HierarchyEquations::apply(const Complex* in, Complex* out) const {
  const std::size_t n = index_->size();
  if (workers_ <= 1 || n < 512) {
    apply_slots(in, out, 0, n);
    return;
  }
  // Fixed chunking: every slot is computed by the same arithmetic whatever
  // the worker count.
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, workers_, [&](std::size_t c) {
    apply_slots(in, out, c * kChunk, std::min(n, (c + 1) * kChunk));
  });
}

std::vector<Complex> heom_rhs(const HierarchyState& state,
                              const HeomConfig& config) {
  HierarchyEquations eq(config, state.index);
  if (state.ados.size() != state.size() * kAdoStride) {
    throw DimensionError("ADO storage does not match the hierarchy");
  }
  std::vector<Complex> out(state.ados.size());
  eq.apply(state.ados.data(), out.data());
  return out;
}

// ---------------------------------------------------------------- evolve

std::vector<double> output_grid(const HeomConfig& c) {
  const auto n = static_cast<std::size_t>(std::llround(c.t_max / c.output_interval));
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = static_cast<double>(i) * c.output_interval;
  g.back() = c.t_max;
  return g;
}

namespace {

ComplexMatrix top_block(const std::vector<Complex>& v) {
  ComplexMatrix m(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = v[i * 4 + j];
  }
  return m;
}

}  // namespace

RawTrajectory evolve_raw(const HeomConfig& config, const ComplexMatrix& rho0) {
  HierarchyState state = build_hierarchy_raw(config, rho0);
  const HierarchyEquations eq(config, state.index);
  std::size_t substeps = 0;
  const double dt = resolved_step(config, substeps);

  RawTrajectory out;
  out.grid = output_grid(config);
  out.report.L = config.L;
  out.report.K = config.K;
  out.report.dt = dt;
  out.report.ados = state.size();
  out.report.terminator_rate = eq.terminator_rate();

  std::vector<Complex>& y = state.ados;
  const std::size_t m = y.size();
  std::vector<Complex> k1(m), k2(m), k3(m), k4(m), tmp(m);
  const Complex trace0 = rho0.trace();

  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    eq.apply(y.data(), k1.data());
    const ComplexMatrix rho = top_block(y);
    out.states.push_back(rho);
    out.derivatives.push_back(top_block(k1));
    if (!std::isfinite(rho.max_abs())) {
      throw NonConvergenceError(
          "HEOM integration diverged at t = " + std::to_string(out.grid[i]),
          std::numeric_limits<double>::infinity());
    }
    out.report.trace_drift =
        std::max(out.report.trace_drift, std::abs(rho.trace() - trace0));
    out.report.hermiticity_drift =
        std::max(out.report.hermiticity_drift, rho.hermiticity_defect());
    if (i + 1 == out.grid.size()) break;

    for (std::size_t s = 0; s < substeps; ++s) {
      if (s > 0) eq.apply(y.data(), k1.data());
      for (std::size_t e = 0; e < m; ++e) tmp[e] = y[e] + 0.5 * dt * k1[e];
      eq.apply(tmp.data(), k2.data());
      for (std::size_t e = 0; e < m; ++e) tmp[e] = y[e] + 0.5 * dt * k2[e];
      eq.apply(tmp.data(), k3.data());
      for (std::size_t e = 0; e < m; ++e) tmp[e] = y[e] + dt * k3[e];
      eq.apply(tmp.data(), k4.data());
      for (std::size_t e = 0; e < m; ++e) {
        y[e] += (dt / 6.0) * (k1[e] + 2.0 * k2[e] + 2.0 * k3[e] + k4[e]);
      }
      ++out.report.steps;
    }
  }
  return out;
}

HeomTrajectory validate_trajectory(const RawTrajectory& raw) {
  constexpr double kTraceDriftTol = 1e-8;
  constexpr double kHermiticityDriftTol = 1e-10;
  if (raw.report.trace_drift > kTraceDriftTol) {
    throw InvariantError("HEOM trace drift " +
                         std::to_string(raw.report.trace_drift) +
                         " exceeds 1e-8");
  }
  if (raw.report.hermiticity_drift > kHermiticityDriftTol) {
    throw InvariantError("HEOM Hermiticity drift " +
                         std::to_string(raw.report.hermiticity_drift) +
                         " exceeds 1e-10");
  }
  HeomTrajectory out;
  out.report = raw.report;
  out.trajectory.grid = raw.grid;
  for (std::size_t i = 0; i < raw.grid.size(); ++i) {
    ComplexMatrix rho = raw.states[i];
    try {
      out.trajectory.states.emplace_back(rho);
    } catch (const PositivityError& e) {
      throw TruncationError("HEOM state at t = " + std::to_string(raw.grid[i]) +
                            " is not positive (" + e.what() +
                            "); increase the hierarchy depth L");
    }
    out.trajectory.derivatives.emplace_back(raw.derivatives[i]);
  }
  return out;
}

HeomTrajectory evolve(const HeomConfig& config, const DensityMatrix& rho0) {
  if (rho0.dim() != 4) throw DimensionError("HEOM initial state must be 4x4");
  return validate_trajectory(evolve_raw(config, rho0.matrix()));
}

// ---------------------------------------------------------------- oracle

bool is_commuting_model(const HeomConfig& c) {
  const double a = (c.coupling_op - sigma_z_b()).max_abs();
  const double b = (c.interaction_op - zz_interaction()).max_abs();
  return a <= 1e-14 && b <= 1e-14;
}

DensityMatrix exact_commuting_solution(const HeomConfig& config,
                                       const DensityMatrix& rho0, double t) {
  if (!is_commuting_model(config)) {
    throw OracleInapplicableError(
        "exact solution needs coupling sigma_z on qubit B and a "
        "sigma_z sigma_z interaction");
  }
  if (rho0.dim() != 4) throw DimensionError("initial state must be 4x4");
  if (!(t >= 0.0)) throw DomainError("time must be non-negative");
  const double gamma =
      t == 0.0 ? 0.0
               : bath::decoherence_factor(config.drude, config.temperature, t)
                     .value;
  const double damp = std::exp(-gamma);
  auto z = [](std::size_t bit) { return bit == 0 ? 1.0 : -1.0; };
  auto energy = [&](std::size_t i) {
    const double za = z(i >> 1), zb = z(i & 1);
    return 0.5 * config.frequency * (za + zb) + config.g0 * za * zb;
  };
  ComplexMatrix m(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      Complex v = rho0(i, j) * std::polar(1.0, -(energy(i) - energy(j)) * t);
      if ((i & 1) != (j & 1)) v *= damp;
      m(i, j) = v;
    }
  }
  return DensityMatrix(m);
}

// ---------------------------------------------------------------- control

namespace {

double max_distance(const RawTrajectory& a, const RawTrajectory& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    d = std::max(d, (a.states[i] - b.states[i]).frobenius_norm());
  }
  return d;
}

}  // namespace

ConvergeResult converge(const HeomConfig& config, const DensityMatrix& rho0,
                        double tol, int max_depth, int cutoff) {
  if (!(tol > 0.0)) throw ParameterError("convergence tolerance must be positive");
  if (rho0.dim() != 4) throw DimensionError("HEOM initial state must be 4x4");
  HeomConfig c = config;
  c.K = cutoff >= 0 ? cutoff
                   : bath::default_matsubara_cutoff(c.drude, c.temperature,
                                                    c.frequency);
  c.L = 1;
  ConvergeResult out;
  out.K = c.K;
  RawTrajectory prev = evolve_raw(c, rho0.matrix());
  if (c.drude.coupling == 0.0) {
    out.L = 1;
    out.result = validate_trajectory(prev);
    return out;
  }
  double delta = std::numeric_limits<double>::infinity();
  for (int L = 2; L <= max_depth; ++L) {
    c.L = L;
    if (ado_count(L, c.K) > c.max_ados) {
      throw NonConvergenceError(
          "HEOM did not converge within the ADO budget (last delta " +
              std::to_string(delta) + " at L = " + std::to_string(L - 1) + ")",
          delta);
    }
    RawTrajectory cur = evolve_raw(c, rho0.matrix());
    delta = max_distance(prev, cur);
    out.deltas.push_back(delta);
    if (delta < tol) {
      out.L = L;
      out.result = validate_trajectory(cur);
      return out;
    }
    prev = std::move(cur);
  }
  throw NonConvergenceError("HEOM did not converge by L = " +
                                std::to_string(max_depth) + " (last delta " +
                                std::to_string(delta) + ")",
                            delta);
}

StepDoubling step_doubling(const HeomConfig& config, const ComplexMatrix& rho0) {
  HeomConfig c = config;
  std::size_t sub = 0;
  const double dt = resolved_step(config, sub);
  c.dt = dt;
  const ComplexMatrix a = evolve_raw(c, rho0).states.back();
  c.dt = dt / 2.0;
  const ComplexMatrix b = evolve_raw(c, rho0).states.back();
  c.dt = dt / 4.0;
  const ComplexMatrix d = evolve_raw(c, rho0).states.back();
  StepDoubling out;
  out.coarse_delta = (a - b).frobenius_norm();
  out.fine_delta = (b - d).frobenius_norm();
  out.ratio = out.fine_delta > 0.0 ? out.coarse_delta / out.fine_delta
                                   : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace qsllab::heom
