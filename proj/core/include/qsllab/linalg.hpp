#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace qsllab {

using Complex = std::complex<double>;

// Dense complex matrix with at most 4 rows and 4 columns, stored inline.
class ComplexMatrix {
 public:
  static constexpr std::size_t kMaxDim = 4;

  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  // Row-major entries; the list length must equal rows * cols.
  ComplexMatrix(std::size_t rows, std::size_t cols,
                std::initializer_list<Complex> entries);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix zero(std::size_t n) { return ComplexMatrix(n, n); }
  static ComplexMatrix diagonal(const std::vector<Complex>& d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  Complex& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * kMaxDim + j];
  }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * kMaxDim + j];
  }

  ComplexMatrix adjoint() const;
  Complex trace() const;
  double frobenius_norm() const;
  // Largest absolute entry.
  double max_abs() const;
  // max |A_ij - conj(A_ji)|; zero for Hermitian input.
  double hermiticity_defect() const;
  bool is_diagonal(double tol = 0.0) const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(Complex s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
    return a += b;
  }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
    return a -= b;
  }
  friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(const ComplexMatrix& a,
                                 const ComplexMatrix& b);
  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::array<Complex, kMaxDim * kMaxDim> data_{};
};

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

struct HermitianEigen {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // columns are eigenvectors
};

// Closed form for 2x2, cyclic complex Jacobi otherwise.
HermitianEigen eigh(const ComplexMatrix& h);
std::vector<double> eigvalsh(const ComplexMatrix& h);

// Descending singular values.
std::vector<double> singular_values(const ComplexMatrix& m);

// Tr(A^dagger B).
Complex hilbert_schmidt_product(const ComplexMatrix& a, const ComplexMatrix& b);

// Validated quantum state: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kPositivitySlack = 1e-9;

  explicit DensityMatrix(const ComplexMatrix& m);

  // Pure state |psi><psi| from an amplitude vector (normalised internally).
  static DensityMatrix pure(const std::vector<Complex>& psi);
  static DensityMatrix maximally_mixed(std::size_t n);

  std::size_t dim() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept {
    return m_(i, j);
  }
  // Ascending eigenvalues computed at construction.
  const std::vector<double>& eigenvalues() const noexcept { return eigs_; }
  double purity() const;

 private:
  ComplexMatrix m_;
  std::vector<double> eigs_;
};

// Time derivative of a density matrix: Hermitian and traceless.
class MatrixDerivative {
 public:
  explicit MatrixDerivative(const ComplexMatrix& m);
  std::size_t dim() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }

 private:
  ComplexMatrix m_;
};

double von_neumann_entropy(const DensityMatrix& rho);
DensityMatrix partial_trace_b(const DensityMatrix& rho_ab);
ComplexMatrix partial_trace_b(const ComplexMatrix& m);

}  // namespace qsllab
