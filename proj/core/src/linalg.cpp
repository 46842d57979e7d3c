#include "qsllab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "qsllab/error.hpp"

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

namespace qsllab {

namespace {

void check_dims(std::size_t rows, std::size_t cols) {
  if (rows > ComplexMatrix::kMaxDim || cols > ComplexMatrix::kMaxDim) {
    throw DimensionError("matrix dimension " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " exceeds 4x4");
  }
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch");
  }
}

void require_square(const ComplexMatrix& m, const char* op) {
  if (!m.is_square()) throw DimensionError(std::string(op) + ": non-square");
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols) {
  check_dims(rows, cols);
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols,
                             std::initializer_list<Complex> entries)
    : ComplexMatrix(rows, cols) {
  if (entries.size() != rows * cols) {
    throw DimensionError("initializer length does not match shape");
  }
  std::size_t n = 0;
  for (const Complex& z : entries) {
    (*this)(n / cols, n % cols) = z;
    ++n;
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(const std::vector<Complex>& d) {
  ComplexMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

Complex ComplexMatrix::trace() const {
  require_square(*this, "trace");
  Complex t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) s += std::norm((*this)(i, j));
  return std::sqrt(s);
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

double ComplexMatrix::hermiticity_defect() const {
  require_square(*this, "hermiticity_defect");
  double d = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i; j < cols_; ++j)
      d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return d;
}

bool ComplexMatrix::is_diagonal(double tol) const {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      if (i != j && std::abs((*this)(i, j)) > tol) return false;
  return true;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "operator+");
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) += o(i, j);
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "operator-");
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) -= o(i, j);
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("operator*: inner mismatch");
  ComplexMatrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          r(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return r;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

ComplexMatrix pauli_x() { return ComplexMatrix(2, 2, {0.0, 1.0, 1.0, 0.0}); }
ComplexMatrix pauli_y() {
  return ComplexMatrix(2, 2, {0.0, Complex(0, -1), Complex(0, 1), 0.0});
}
ComplexMatrix pauli_z() { return ComplexMatrix(2, 2, {1.0, 0.0, 0.0, -1.0}); }

namespace {

HermitianEigen eigh_2x2(const ComplexMatrix& h) {
  const double a = h(0, 0).real();
  const double d = h(1, 1).real();
  const Complex b = 0.5 * (h(0, 1) + std::conj(h(1, 0)));
  const double mean = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), std::abs(b));
  HermitianEigen out;
  out.values = {mean - rad, mean + rad};
  out.vectors = ComplexMatrix(2, 2);
  if (std::abs(b) == 0.0) {
    // Already diagonal: order the basis vectors by eigenvalue.
    const bool swap = a > d;
    out.vectors(swap ? 1 : 0, 0) = 1.0;
    out.vectors(swap ? 0 : 1, 1) = 1.0;
    return out;
  }
  for (std::size_t c = 0; c < 2; ++c) {
    const double lam = out.values[c];
    // Two candidate null vectors of (H - lam); keep the better conditioned.
    Complex u0 = b, u1 = lam - a;
    Complex w0 = lam - d, w1 = std::conj(b);
    const double nu = std::sqrt(std::norm(u0) + std::norm(u1));
    const double nw = std::sqrt(std::norm(w0) + std::norm(w1));
    if (nu >= nw) {
      out.vectors(0, c) = u0 / nu;
      out.vectors(1, c) = u1 / nu;
    } else {
      out.vectors(0, c) = w0 / nw;
      out.vectors(1, c) = w1 / nw;
    }
  }
  return out;
}

double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

HermitianEigen eigh_jacobi(const ComplexMatrix& h) {
  const std::size_t n = h.rows();
  ComplexMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = 0.5 * (h(i, j) + std::conj(h(j, i)));
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale = std::max(a.frobenius_norm(), 1e-300);
  constexpr double kTol = 1e-13;
  constexpr int kMaxSweeps = 60;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= kTol * scale * 1e-3) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r <= 1e-300) continue;
        const Complex phase = a(p, q) / r;  // e^{i phi}
        const Complex phase_c = std::conj(phase);
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
        const double sgn = tau >= 0.0 ? 1.0 : -1.0;
        const double t = sgn / (std::abs(tau) + std::sqrt(tau * tau + 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * phase_c * akq;
          a(k, q) = s * akp + c * phase_c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * phase * aqk;
          a(q, k) = s * apk + c * phase * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * phase_c * vkq;
          v(k, q) = s * vkp + c * phase_c * vkq;
        }
      }
    }
  }
  if (off_diagonal_norm(a) > kTol * scale) {
    throw AccuracyError("Jacobi eigensolver did not converge",
                        off_diagonal_norm(a) / scale, kTol);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a(x, x).real() < a(y, y).real();
  });
  HermitianEigen out;
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values.push_back(a(order[c], order[c]).real());
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = v(k, order[c]);
  }
  return out;
}

}  // namespace

HermitianEigen eigh(const ComplexMatrix& h) {
  require_square(h, "eigh");
  if (h.rows() == 0) return {};
  if (h.rows() == 1) {
    HermitianEigen out;
    out.values = {h(0, 0).real()};
    out.vectors = ComplexMatrix::identity(1);
    return out;
  }
  if (h.rows() == 2) return eigh_2x2(h);
  return eigh_jacobi(h);
}

std::vector<double> eigvalsh(const ComplexMatrix& h) { return eigh(h).values; }

std::vector<double> singular_values(const ComplexMatrix& m) {
  require_square(m, "singular_values");
  std::vector<double> s;
  const double scale = std::max(1.0, m.max_abs());
  if (m.hermiticity_defect() <= 1e-12 * scale) {
    for (double lam : eigvalsh(m)) s.push_back(std::abs(lam));
  } else {
    for (double lam : eigvalsh(m.adjoint() * m))
      s.push_back(std::sqrt(std::max(lam, 0.0)));
  }
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

Complex hilbert_schmidt_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "hilbert_schmidt_product");
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::conj(a(i, j)) * b(i, j);
  return s;
}

DensityMatrix::DensityMatrix(const ComplexMatrix& m) : m_(m) {
  if (!m.is_square() || (m.rows() != 2 && m.rows() != 4)) {
    throw DimensionError("density matrix must be 2x2 or 4x4");
  }
  const double herm = m.hermiticity_defect();
  if (!(herm <= kHermitianTol)) {
    throw InvariantError("density matrix not Hermitian (defect " +
                         std::to_string(herm) + ")");
  }
  const double tr_err = std::abs(m.trace() - 1.0);
  if (!(tr_err <= kTraceTol)) {
    throw InvariantError("density matrix trace deviates from 1 by " +
                         sci(tr_err));
  }
  eigs_ = eigvalsh(m);
  if (eigs_.front() < -kPositivitySlack) {
    throw PositivityError("density matrix has eigenvalue " +
                          sci(eigs_.front()));
  }
}

DensityMatrix DensityMatrix::pure(const std::vector<Complex>& psi) {
  double nrm = 0.0;
  for (const Complex& z : psi) nrm += std::norm(z);
  if (nrm <= 0.0) throw ParameterError("zero state vector");
  ComplexMatrix m(psi.size(), psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i)
    for (std::size_t j = 0; j < psi.size(); ++j)
      m(i, j) = psi[i] * std::conj(psi[j]) / nrm;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    m(i, i) = m(i, i).real();
    for (std::size_t j = 0; j < i; ++j) m(i, j) = std::conj(m(j, i));
  }
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t n) {
  ComplexMatrix m = ComplexMatrix::identity(n);
  m *= 1.0 / static_cast<double>(n);
  return DensityMatrix(m);
}

double DensityMatrix::purity() const {
  return hilbert_schmidt_product(m_, m_).real();
}

MatrixDerivative::MatrixDerivative(const ComplexMatrix& m) : m_(m) {
  require_square(m, "MatrixDerivative");
  // Tolerances are relative to the generator scale, which carries units.
  const double scale = std::max(1.0, m.max_abs());
  const double herm = m.hermiticity_defect();
  if (!(herm <= 1e-12 * scale)) {
    throw InvariantError("derivative not Hermitian (defect " +
                         std::to_string(herm) + ")");
  }
  const double tr = std::abs(m.trace());
  if (!(tr <= 1e-10 * scale)) {
    throw InvariantError("derivative not traceless (trace " +
                         std::to_string(tr) + ")");
  }
}

double von_neumann_entropy(const DensityMatrix& rho) {
  double s = 0.0;
  for (double lam : rho.eigenvalues()) {
    if (lam < -1e-6) {
      throw PositivityError("entropy of state with eigenvalue " +
                            std::to_string(lam));
    }
    if (lam > 0.0) s -= lam * std::log2(lam);
  }
  return std::max(s, 0.0);
}

ComplexMatrix partial_trace_b(const ComplexMatrix& m) {
  if (m.rows() != 4 || m.cols() != 4) {
    throw DimensionError("partial trace needs a 4x4 two-qubit operator");
  }
  ComplexMatrix r(2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      r(i, j) = m(2 * i, 2 * j) + m(2 * i + 1, 2 * j + 1);
  return r;
}

DensityMatrix partial_trace_b(const DensityMatrix& rho_ab) {
  if (rho_ab.dim() != 4) {
    throw DimensionError("partial trace needs a 4x4 two-qubit state");
  }
  return DensityMatrix(partial_trace_b(rho_ab.matrix()));
}

}  // namespace qsllab
