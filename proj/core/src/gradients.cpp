#include "wnntk/gradients.hpp"

#include <cmath>

namespace wnntk {

namespace {

Vector checked_norms(const WNParams& params) {
  const Vector norms = params.direction_norms();
  for (Eigen::Index k = 0; k < norms.size(); ++k) {
    if (!(norms(k) > 0.0)) {
      throw DegenerateDirectionError("direction v_" + std::to_string(k) + " has zero norm");
    }
  }
  return norms;
}

// Removes from each row of `raw` its component along the unit row of `unit`.
void project_rows_orthogonal(Matrix& raw, const Matrix& unit) {
  const Vector along = (raw.cwiseProduct(unit)).rowwise().sum();
  raw -= along.asDiagonal() * unit;
}

}  // namespace

Vector project_parallel(const Vector& x, const Vector& u) {
  const double uu = u.squaredNorm();
  if (!(uu > 0.0)) throw std::invalid_argument("project_parallel: u must be nonzero");
  return u * (u.dot(x) / uu);
}

Vector project_orthogonal(const Vector& x, const Vector& u) {
  return x - project_parallel(x, u);
}

GradientSet grad_f(const WNParams& params, const Vector& x) {
  const Vector norms = checked_norms(params);
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.m()));
  GradientSet out;
  out.dV.resize(params.m(), params.d());
  out.dg.resize(params.m());
  for (Eigen::Index k = 0; k < params.m(); ++k) {
    const Vector v = params.V.row(k).transpose();
    const double z = v.dot(x);
    out.dg(k) = scale * params.c(k) / norms(k) * relu(z);
    if (active(z)) {
      out.dV.row(k) = scale * params.c(k) * params.g(k) / norms(k) *
                      project_orthogonal(x, v).transpose();
    } else {
      out.dV.row(k).setZero();
    }
  }
  return out;
}

GradientSet grad_loss(const WNParams& params, const Dataset& data) {
  const Vector norms = checked_norms(params);
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.m()));
  const Matrix unit = norms.cwiseInverse().asDiagonal() * params.V;
  const Matrix pre = data.X * params.V.transpose();  // n x m
  const Vector coef = params.c.cwiseProduct(params.g).cwiseQuotient(norms);
  const Vector residual = pre.cwiseMax(0.0) * coef * scale - data.y;

  // Q_ik = (f_i - y_i) 1_ik
  const Matrix Q = residual.asDiagonal() * pre.unaryExpr([](double z) { return active(z) ? 1.0 : 0.0; });

  GradientSet out;
  out.dg = scale * params.c.cwiseQuotient(norms).cwiseProduct(pre.cwiseMax(0.0).transpose() * residual);
  out.dV = Q.transpose() * data.X;  // sum_i r_i 1_ik x_i
  project_rows_orthogonal(out.dV, unit);
  out.dV = (scale * coef).asDiagonal() * out.dV;
  return out;
}

GradientSet finite_diff_grad(const WNParams& params, const Dataset& data, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  const Eigen::Index m = params.m();
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const Vector base = predict(params, data.X);

  // Each coordinate only moves one neuron, so reuse the other m-1 terms.
  auto contribution = [&](const Vector& v, double g, double c) {
    return Vector((data.X * v).cwiseMax(0.0) * (scale * c * g / v.norm()));
  };
  auto perturbed_loss = [&](Eigen::Index k, const Vector& v, double g) {
    const Vector f = base - contribution(params.V.row(k).transpose(), params.g(k), params.c(k)) +
                     contribution(v, g, params.c(k));
    return loss(f, data.y);
  };

  GradientSet out;
  out.dV.resize(m, params.d());
  out.dg.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Vector v = params.V.row(k).transpose();
    for (Eigen::Index j = 0; j < params.d(); ++j) {
      Vector plus = v, minus = v;
      plus(j) += eps;
      minus(j) -= eps;
      out.dV(k, j) = (perturbed_loss(k, plus, params.g(k)) -
                      perturbed_loss(k, minus, params.g(k))) / (2.0 * eps);
    }
    out.dg(k) = (perturbed_loss(k, v, params.g(k) + eps) -
                 perturbed_loss(k, v, params.g(k) - eps)) / (2.0 * eps);
  }
  return out;
}

ActivationPattern activation_pattern(const WNParams& params, const Dataset& data) {
  const Matrix pre = data.X * params.V.transpose();
  return {pre.array() >= 0.0};
}

Eigen::Array<bool, Eigen::Dynamic, 1> kink_free_neurons(const WNParams& params,
                                                       const Dataset& data,
                                                       double margin) {
  const Vector norms = params.direction_norms();
  const Matrix pre = (data.X * params.V.transpose()).cwiseAbs();
  Eigen::Array<bool, Eigen::Dynamic, 1> out(params.m());
  for (Eigen::Index k = 0; k < params.m(); ++k) {
    out(k) = pre.col(k).minCoeff() > margin * norms(k);
  }
  return out;
}

}  // namespace wnntk
