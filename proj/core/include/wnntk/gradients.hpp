#pragma once

#include "wnntk/dataset.hpp"
#include "wnntk/model.hpp"
#include "wnntk/types.hpp"

namespace wnntk {

/// u u^T x / ||u||^2. Throws std::invalid_argument for u = 0.
Vector project_parallel(const Vector& x, const Vector& u);
/// x - project_parallel(x, u).
Vector project_orthogonal(const Vector& x, const Vector& u);

/// Gradients of a scalar (an output f_i or the loss L) with respect to
/// every direction row v_k and magnitude g_k.
struct GradientSet {
  Matrix dV;  // m x d
  Vector dg;  // m
};

/// Per-neuron gradient of f(x):
///   df/dv_k = (1/sqrt m)(c_k g_k/||v_k||) x^{v_k perp} 1{v_k^T x >= 0}
///   df/dg_k = (1/sqrt m)(c_k/||v_k||) relu(v_k^T x)
GradientSet grad_f(const WNParams& params, const Vector& x);

/// Gradient of 0.5||f - y||^2; each dV row is orthogonal to v_k.
GradientSet grad_loss(const WNParams& params, const Dataset& data);

/// Central differences of the loss over every coordinate of V and g.
GradientSet finite_diff_grad(const WNParams& params, const Dataset& data,
                             double eps = 1e-5);

struct ActivationPattern {
  BoolMatrix bits;  // n x m, (i,k) = v_k^T x_i >= 0
};

ActivationPattern activation_pattern(const WNParams& params,
                                     const Dataset& data);

/// True for neurons with |v_k^T x_i| > margin ||v_k|| at every data point,
/// i.e. neurons whose gradient a small finite difference can resolve.
Eigen::Array<bool, Eigen::Dynamic, 1> kink_free_neurons(
    const WNParams& params, const Dataset& data, double margin = 1e-3);

}  // namespace wnntk
