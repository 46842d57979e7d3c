#include "qsllab/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qsllab/error.hpp"

namespace qsllab::coherence {

double l1_coherence(const DensityMatrix& rho) {
  const ComplexMatrix& m = rho.matrix();
  double sum = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (i != j) sum += std::abs(m(i, j));
    }
  }
  return sum;
}

DensityMatrix diagonal_part(const DensityMatrix& rho) {
  const ComplexMatrix& m = rho.matrix();
  ComplexMatrix d(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) d(i, i) = Complex(m(i, i).real(), 0.0);
  return DensityMatrix(d);
}

double jsd_coherence(const DensityMatrix& rho) {
  const DensityMatrix diag = diagonal_part(rho);
  const DensityMatrix mix(0.5 * (rho.matrix() + diag.matrix()));
  const double radicand =
      von_neumann_entropy(mix) -
      0.5 * (von_neumann_entropy(rho) + von_neumann_entropy(diag));
  if (radicand < -1e-9) {
    throw InconsistencyError("Jensen-Shannon radicand " +
                             std::to_string(radicand) + " is negative");
  }
  // Roundoff in the three entropies can push an exact zero slightly negative.
  return std::sqrt(std::max(radicand, 0.0));
}

}  // namespace qsllab::coherence
