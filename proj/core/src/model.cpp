#include "wnntk/model.hpp"

#include <cmath>

#include "wnntk/rng.hpp"

namespace wnntk {

void WNParams::validate() const {
  if (g.size() != V.rows() || c.size() != V.rows()) {
    throw std::invalid_argument("WNParams: V, g and c disagree on m");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("WNParams: alpha must be positive");
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    if (c(k) != 1.0 && c(k) != -1.0) {
      throw std::invalid_argument("WNParams: c entries must be +-1");
    }
  }
  for (Eigen::Index k = 0; k < V.rows(); ++k) {
    if (!(V.row(k).squaredNorm() > 0.0)) {
      throw DegenerateDirectionError("direction v_" + std::to_string(k) + " has zero norm");
    }
  }
}

WNParams init_params(Eigen::Index d, Eigen::Index m, double alpha,
                     std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("init_params: d must be >= 2");
  if (m < 1) throw std::invalid_argument("init_params: m must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("init_params: alpha must be positive");
  Rng rng(seed);
  WNParams p;
  p.alpha = alpha;
  p.V.resize(m, d);
  p.g.resize(m);
  p.c.resize(m);
  Vector z(d);
  for (Eigen::Index k = 0; k < m; ++k) {
    double norm = 0.0;
    while (norm == 0.0) {  // resample the probability-zero degenerate draw
      for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
      norm = z.norm();
    }
    p.V.row(k) = alpha * z.transpose();
    p.g(k) = p.V.row(k).norm() / alpha;
    p.c(k) = rng.sign();
  }
  return p;
}

namespace {

void require_directions(const Vector& norms) {
  for (Eigen::Index k = 0; k < norms.size(); ++k) {
    if (!(norms(k) > 0.0)) {
      throw DegenerateDirectionError("direction v_" + std::to_string(k) + " has zero norm");
    }
  }
}

}  // namespace

double forward(const WNParams& params, const Vector& x) {
  const Eigen::Index m = params.m();
  double sum = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double norm = params.V.row(k).norm();
    if (!(norm > 0.0)) {
      throw DegenerateDirectionError("direction v_" + std::to_string(k) + " has zero norm");
    }
    sum += params.c(k) * params.g(k) * relu(params.V.row(k).dot(x)) / norm;
  }
  return sum / std::sqrt(static_cast<double>(m));
}

Vector predict(const WNParams& params, const Matrix& X) {
  const Vector norms = params.direction_norms();
  require_directions(norms);
  const Vector coef = params.c.cwiseProduct(params.g).cwiseQuotient(norms);
  const Matrix pre = (X * params.V.transpose()).cwiseMax(0.0);
  return pre * coef / std::sqrt(static_cast<double>(params.m()));
}

double forward_vanilla(const VanillaParams& params, const Vector& x) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < params.m(); ++k) {
    sum += params.c(k) * relu(params.W.row(k).dot(x));
  }
  return sum / std::sqrt(static_cast<double>(params.m()));
}

Vector predict(const VanillaParams& params, const Matrix& X) {
  const Matrix pre = (X * params.W.transpose()).cwiseMax(0.0);
  return pre * params.c / std::sqrt(static_cast<double>(params.m()));
}

VanillaParams effective_weights(const WNParams& params) {
  const Vector norms = params.direction_norms();
  require_directions(norms);
  VanillaParams out;
  out.W = (params.g.cwiseQuotient(norms)).asDiagonal() * params.V;
  out.c = params.c;
  return out;
}

double loss(const Vector& f, const Vector& y) {
  if (f.size() != y.size()) {
    throw std::invalid_argument("loss: prediction and target lengths differ");
  }
  return 0.5 * (f - y).squaredNorm();
}

}  // namespace wnntk
