#pragma once

#include "qsllab/linalg.hpp"

namespace qsllab::coherence {

// Sum of |rho_ij| over i != j in the computational basis.
double l1_coherence(const DensityMatrix& rho);

// sqrt(S((rho + rho_diag)/2) - (S(rho) + S(rho_diag))/2), log base 2.
double jsd_coherence(const DensityMatrix& rho);

// rho with its off-diagonal elements deleted.
DensityMatrix diagonal_part(const DensityMatrix& rho);

}  // namespace qsllab::coherence
