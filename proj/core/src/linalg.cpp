#include "wnntk/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace wnntk {

Matrix symmetrize(const Matrix& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("symmetrize: matrix is not square");
  if (!M.allFinite()) throw std::invalid_argument("symmetrize: non-finite entries");
  return 0.5 * (M + M.transpose());
}

double asymmetry(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return (M - M.transpose()).cwiseAbs().maxCoeff();
}

Spectrum spectrum(const Matrix& M) {
  const Matrix S = symmetrize(M);
  if (S.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("spectrum: eigendecomposition failed");
  }
  const Vector& ev = solver.eigenvalues();  // ascending
  return {ev(0), std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)))};
}

double min_eigenvalue(const Matrix& M) { return spectrum(M).lambda_min; }

double spectral_norm(const Matrix& M) { return spectrum(M).spectral_norm; }

}  // namespace wnntk
