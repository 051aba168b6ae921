#pragma once

#include "wnntk/types.hpp"

namespace wnntk {

/// (M + M^T) / 2. Throws std::invalid_argument for non-square or
/// non-finite input.
Matrix symmetrize(const Matrix& M);

/// Largest |M_ij - M_ji|.
double asymmetry(const Matrix& M);

/// Smallest eigenvalue of the symmetrized matrix.
double min_eigenvalue(const Matrix& M);

/// Largest singular value of the symmetrized matrix (max |eigenvalue|).
double spectral_norm(const Matrix& M);

struct Spectrum {
  double lambda_min = 0.0;
  double spectral_norm = 0.0;
};

/// Both summaries from a single symmetric eigendecomposition.
Spectrum spectrum(const Matrix& M);

}  // namespace wnntk
