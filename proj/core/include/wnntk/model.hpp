#pragma once

#include <cstdint>

#include "wnntk/dataset.hpp"
#include "wnntk/types.hpp"

namespace wnntk {

/// Weight-normalized two-layer ReLU network.
///
/// Row k of V is the direction v_k, g_k its magnitude and c_k the fixed
/// output sign. alpha is the initialization scale; it does not enter the
/// forward pass but is carried with the state because every kernel that
/// mixes V and G depends on it.
struct WNParams {
  Matrix V;  // m x d
  Vector g;  // m
  Vector c;  // m, entries +-1
  double alpha = 1.0;

  Eigen::Index m() const { return V.rows(); }
  Eigen::Index d() const { return V.cols(); }

  /// Throws DegenerateDirectionError if any row of V is zero and
  /// std::invalid_argument on shape mismatch or non +-1 signs.
  void validate() const;

  Vector direction_norms() const { return V.rowwise().norm(); }
};

/// Un-normalized network with weights w_k as rows of W.
struct VanillaParams {
  Matrix W;  // m x d
  Vector c;  // m

  Eigen::Index m() const { return W.rows(); }
};

/// v_k ~ N(0, alpha^2 I), c_k uniform on {-1,+1}, g_k = ||v_k|| / alpha.
///
/// The underlying standard normals depend only on (d, m, seed), so the
/// same seed at different alpha yields identical unit directions and g.
WNParams init_params(Eigen::Index d, Eigen::Index m, double alpha,
                     std::uint64_t seed);

double forward(const WNParams& params, const Vector& x);
double forward_vanilla(const VanillaParams& params, const Vector& x);

/// Network outputs for every row of X.
Vector predict(const WNParams& params, const Matrix& X);
Vector predict(const VanillaParams& params, const Matrix& X);

/// w_k = g_k v_k / ||v_k||.
VanillaParams effective_weights(const WNParams& params);

/// 0.5 * ||f - y||^2.
double loss(const Vector& f, const Vector& y);

}  // namespace wnntk
