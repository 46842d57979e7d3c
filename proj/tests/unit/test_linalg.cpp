#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "qsllab/error.hpp"
#include "qsllab/linalg.hpp"

using namespace qsllab;

namespace {

ComplexMatrix random_hermitian(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = g(rng);
    for (std::size_t j = i + 1; j < n; ++j) {
      m(i, j) = Complex(g(rng), g(rng));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

ComplexMatrix random_density(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  ComplexMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  ComplexMatrix rho = a * a.adjoint();
  rho *= Complex(1.0 / rho.trace().real());
  return rho;
}

Eigen::MatrixXcd to_eigen(const ComplexMatrix& m) {
  Eigen::MatrixXcd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

}  // namespace

TEST(SingularValues, Identity) {
  const auto s = singular_values(ComplexMatrix::identity(2));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 1.0);
}

TEST(SingularValues, Zero) {
  const auto s = singular_values(ComplexMatrix::zero(2));
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 0.0);
}

TEST(SingularValues, OffDiagonal) {
  const Complex a(0.3, -0.4);
  const ComplexMatrix m(2, 2, {0.0, a, std::conj(a), 0.0});
  const auto s = singular_values(m);
  EXPECT_NEAR(s[0], 0.5, 1e-14);
  EXPECT_NEAR(s[1], 0.5, 1e-14);
}

TEST(SingularValues, NonSquareThrows) {
  EXPECT_THROW(singular_values(ComplexMatrix(2, 3)), DimensionError);
}

TEST(SingularValues, HermitianMatchesAbsEigenvalues) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const ComplexMatrix h = random_hermitian(rng, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_eigen(h));
    std::vector<double> expect;
    for (int i = 0; i < 4; ++i) expect.push_back(std::abs(es.eigenvalues()(i)));
    std::sort(expect.rbegin(), expect.rend());
    const auto s = singular_values(h);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(s[i], expect[i], 1e-10);
  }
}

TEST(SingularValues, GeneralMatchesEigenSvd) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    ComplexMatrix m(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = Complex(g(rng), g(rng));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(m));
    const auto s = singular_values(m);
    double sq = 0.0;
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(s[i], svd.singularValues()(i), 1e-10);
      if (i > 0) {
        EXPECT_GE(s[i - 1], s[i]);
      }
      sq += s[i] * s[i];
    }
    const double fro = m.frobenius_norm();
    EXPECT_NEAR(sq, fro * fro, 1e-12 * fro * fro);
  }
}

TEST(Eigh, ResidualsAndOrdering) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const ComplexMatrix h = random_hermitian(rng, 4);
    const HermitianEigen e = eigh(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_eigen(h));
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(e.values[k], es.eigenvalues()(k), 1e-10);
      for (int i = 0; i < 4; ++i) {
        Complex hv = 0.0;
        for (int j = 0; j < 4; ++j) hv += h(i, j) * e.vectors(j, k);
        EXPECT_LT(std::abs(hv - e.values[k] * e.vectors(i, k)), 1e-10);
      }
    }
  }
}

TEST(Entropy, PureIsZero) {
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::pure({r, r})), 0.0, 1e-12);
}

TEST(Entropy, MaximallyMixedIsOneBit) {
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::maximally_mixed(2)), 1.0, 1e-14);
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::maximally_mixed(4)), 2.0, 1e-14);
}

TEST(Entropy, ThreeQuarters) {
  const DensityMatrix rho(ComplexMatrix::diagonal({0.75, 0.25}));
  EXPECT_NEAR(von_neumann_entropy(rho), 2.0 - 0.75 * std::log2(3.0), 1e-12);
  EXPECT_NEAR(von_neumann_entropy(rho), 0.8113, 1e-4);
}

TEST(Entropy, BoundedByLogDim) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const double s = von_neumann_entropy(DensityMatrix(random_density(rng, 4)));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 2.0 + 1e-12);
  }
}

TEST(DensityMatrixInvariants, RejectsBadInput) {
  EXPECT_THROW(DensityMatrix(ComplexMatrix::diagonal({0.6, 0.6})), InvariantError);
  EXPECT_THROW(DensityMatrix(ComplexMatrix(2, 2, {0.5, 0.1, 0.2, 0.5})),
               InvariantError);
  EXPECT_THROW(DensityMatrix(ComplexMatrix::diagonal({1.1, -0.1})),
               PositivityError);
  EXPECT_THROW(DensityMatrix(ComplexMatrix::identity(3) * Complex(1.0 / 3)),
               DimensionError);
}

TEST(PartialTrace, ProductState) {
  std::mt19937_64 rng(9);
  const ComplexMatrix a = random_density(rng, 2);
  const ComplexMatrix b = random_density(rng, 2);
  const ComplexMatrix r = partial_trace_b(kron(a, b));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(r(i, j) - a(i, j)), 1e-15);
}

TEST(PartialTrace, ProductPlusState) {
  ComplexMatrix m(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = 0.25;
  const DensityMatrix a = partial_trace_b(DensityMatrix(m));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(a(i, j).real(), 0.5);
}

TEST(PartialTrace, BellStateIsMixed) {
  const double r = 1.0 / std::sqrt(2.0);
  const DensityMatrix a = partial_trace_b(DensityMatrix::pure({r, 0.0, 0.0, r}));
  EXPECT_NEAR(a(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(a(1, 1).real(), 0.5, 1e-15);
  EXPECT_EQ(std::abs(a(0, 1)), 0.0);
}

TEST(PartialTrace, PreservesTrace) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const ComplexMatrix m = random_density(rng, 4);
    EXPECT_NEAR(std::abs(partial_trace_b(m).trace() - m.trace()), 0.0, 1e-15);
  }
}

TEST(PartialTrace, WrongDimensionThrows) {
  EXPECT_THROW(partial_trace_b(ComplexMatrix::identity(2)), DimensionError);
}

TEST(HilbertSchmidt, Examples) {
  const double r = 1.0 / std::sqrt(2.0);
  const DensityMatrix plus = DensityMatrix::pure({r, r});
  EXPECT_NEAR(hilbert_schmidt_product(plus.matrix(), plus.matrix()).real(), 1.0, 1e-15);
  const ComplexMatrix half = ComplexMatrix::identity(2) * Complex(0.5);
  EXPECT_DOUBLE_EQ(hilbert_schmidt_product(half, half).real(), 0.5);
  EXPECT_EQ(std::abs(hilbert_schmidt_product(pauli_z(), pauli_x())), 0.0);
  EXPECT_THROW(hilbert_schmidt_product(half, ComplexMatrix::identity(4)),
               DimensionError);
}

TEST(MatrixDerivativeInvariants, TracelessHermitian) {
  EXPECT_NO_THROW(MatrixDerivative(pauli_x()));
  EXPECT_THROW(MatrixDerivative(ComplexMatrix::identity(2)), InvariantError);
  EXPECT_THROW(MatrixDerivative(ComplexMatrix(2, 2, {0.0, 1.0, 0.0, 0.0})),
               InvariantError);
}
