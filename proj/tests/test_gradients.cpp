#include <cmath>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "wnntk/gradients.hpp"
#include "wnntk/rng.hpp"

using namespace wnntk;
using testing_helpers::make_data;
using testing_helpers::single;
using testing_helpers::vec;

namespace {

/// Central differences of the reference forward pass.
GradientSet fd_forward(const WNParams& p, const Vector& x, double eps) {
  GradientSet out{Matrix::Zero(p.m(), p.d()), Vector::Zero(p.m())};
  for (Eigen::Index k = 0; k < p.m(); ++k) {
    for (Eigen::Index l = 0; l < p.d(); ++l) {
      WNParams a = p, b = p;
      a.V(k, l) += eps;
      b.V(k, l) -= eps;
      out.dV(k, l) = (oracle::forward(a, x) - oracle::forward(b, x)) / (2 * eps);
    }
    WNParams a = p, b = p;
    a.g(k) += eps;
    b.g(k) -= eps;
    out.dg(k) = (oracle::forward(a, x) - oracle::forward(b, x)) / (2 * eps);
  }
  return out;
}

/// max |a - b| / max |a| over kink-free neurons.
double rel_err(const GradientSet& a, const GradientSet& b, const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  double diff = 0.0, scale = 0.0;
  for (Eigen::Index k = 0; k < a.dg.size(); ++k) {
    if (!mask(k)) continue;
    diff = std::max({diff, (a.dV.row(k) - b.dV.row(k)).cwiseAbs().maxCoeff(), std::abs(a.dg(k) - b.dg(k))});
    scale = std::max({scale, a.dV.row(k).cwiseAbs().maxCoeff(), std::abs(a.dg(k))});
  }
  return diff / scale;
}

}  // namespace

TEST(Projection, Examples) {
  EXPECT_EQ(project_parallel(vec({1, 1}), vec({1, 0})), vec({1, 0}));
  EXPECT_EQ(project_orthogonal(vec({1, 1}), vec({1, 0})), vec({0, 1}));
  EXPECT_EQ(project_parallel(vec({2, 0}), vec({5, 0})), vec({2, 0}));
  EXPECT_EQ(project_orthogonal(vec({2, 0}), vec({5, 0})), vec({0, 0}));
  EXPECT_THROW(project_parallel(vec({1, 0}), vec({0, 0})), std::invalid_argument);
}

TEST(Projection, PythagoreanSplit) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    Vector x(6), u(6);
    for (int l = 0; l < 6; ++l) {
      x(l) = rng.normal();
      u(l) = rng.normal();
    }
    const Vector a = project_parallel(x, u), b = project_orthogonal(x, u);
    EXPECT_NEAR(a.dot(b), 0.0, 1e-12);
    EXPECT_LE((a + b - x).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(GradF, BoundaryNeuron) {
  const GradientSet g = grad_f(single({0, 2}, 1), vec({1, 0}));
  EXPECT_DOUBLE_EQ(g.dV(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(g.dV(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.dg(0), 0.0);
}

TEST(GradF, AlignedNeuron) {
  const GradientSet g = grad_f(single({2, 0}, 3), vec({1, 0}));
  EXPECT_DOUBLE_EQ(g.dV(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.dV(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.dg(0), 1.0);
}

TEST(GradF, MatchesFiniteDifferenceOfForward) {
  for (int t = 0; t < 5; ++t) {
    const WNParams p = init_params(5, 12, 1.0, 30 + t);
    const Dataset data = generate_dataset(1, 5, 40 + t, TargetMode::uniform);
    const Vector x = data.X.row(0).transpose();
    const auto mask = kink_free_neurons(p, data, 1e-3);
    ASSERT_TRUE(mask.any());
    EXPECT_LE(rel_err(grad_f(p, x), fd_forward(p, x, 1e-6), mask), 1e-6);
  }
}

TEST(GradLoss, ZeroAtInterpolation) {
  const WNParams p = init_params(4, 16, 1.0, 5);
  Dataset data = generate_dataset(5, 4, 6, TargetMode::uniform);
  data.y = predict(p, data.X);
  const GradientSet g = grad_loss(p, data);
  EXPECT_EQ(g.dV.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.dg.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GradLoss, SinglePointChainRule) {
  const WNParams p = init_params(3, 10, 0.8, 2);
  const Dataset data = generate_dataset(1, 3, 3, TargetMode::uniform);
  const Vector x = data.X.row(0).transpose();
  const double r = forward(p, x) - data.y(0);
  const GradientSet a = grad_loss(p, data), b = grad_f(p, x);
  EXPECT_LE((a.dV - r * b.dV).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((a.dg - r * b.dg).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GradLoss, MatchesFiniteDifferenceOracle) {
  for (int t = 0; t < 10; ++t) {
    const WNParams p = init_params(4, 20, 0.5 + 0.25 * t, 50 + t);
    const Dataset data = generate_dataset(6, 4, 60 + t, TargetMode::uniform);
    const auto mask = kink_free_neurons(p, data, 1e-3);
    ASSERT_TRUE(mask.any());
    EXPECT_LE(rel_err(grad_loss(p, data), finite_diff_grad(p, data, 1e-6), mask), 1e-6);
    EXPECT_LE(rel_err(grad_loss(p, data), finite_diff_grad(p, data, 1e-5), mask), 1e-5);
  }
}

TEST(FiniteDiff, SecondOrderConvergence) {
  const WNParams p = init_params(4, 16, 1.0, 70);
  const Dataset data = generate_dataset(5, 4, 71, TargetMode::uniform);
  const auto mask = kink_free_neurons(p, data, 0.1);
  ASSERT_TRUE(mask.any());
  const GradientSet exact = grad_loss(p, data);
  const double e1 = rel_err(exact, finite_diff_grad(p, data, 2e-2), mask);
  const double e2 = rel_err(exact, finite_diff_grad(p, data, 1e-2), mask);
  EXPECT_NEAR(e1 / e2, 4.0, 0.5);
}

TEST(FiniteDiff, ExactInMagnitudeAtZeroG) {
  WNParams p = init_params(3, 8, 1.0, 72);
  p.g.setZero();
  const Dataset data = generate_dataset(4, 3, 73, TargetMode::uniform);
  const GradientSet a = grad_loss(p, data), b = finite_diff_grad(p, data, 1e-5);
  EXPECT_LE((a.dg - b.dg).cwiseAbs().maxCoeff(), 1e-10 * a.dg.cwiseAbs().maxCoeff());
}

TEST(GradLoss, OrthogonalToDirections) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    WNParams p = init_params(6, 24, rng.uniform(0.1, 10.0), 1000 + t);
    for (Eigen::Index k = 0; k < p.m(); ++k) {
      p.g(k) *= rng.uniform(0.2, 3.0);
      p.V.row(k) *= rng.uniform(0.1, 10.0);
    }
    const Dataset data = generate_dataset(7, 6, 2000 + t, TargetMode::uniform);
    const GradientSet g = grad_loss(p, data);
    for (Eigen::Index k = 0; k < p.m(); ++k) {
      EXPECT_LE(std::abs(g.dV.row(k).dot(p.V.row(k))), 1e-10 * g.dV.row(k).norm() * p.V.row(k).norm());
    }
  }
}

TEST(GradF, DirectionGradientScalesInversely) {
  WNParams p = init_params(5, 10, 1.0, 80);
  const Vector x = generate_dataset(1, 5, 81, TargetMode::uniform).X.row(0).transpose();
  const GradientSet before = grad_f(p, x);
  const double t = 3.7;
  p.V.row(4) *= t;
  const GradientSet after = grad_f(p, x);
  EXPECT_LE((after.dV.row(4) * t - before.dV.row(4)).cwiseAbs().maxCoeff(),
            1e-12 * before.dV.row(4).cwiseAbs().maxCoeff());
  EXPECT_NEAR(after.dg(4), before.dg(4), 1e-12);
}

TEST(ActivationPattern, Examples) {
  EXPECT_TRUE(activation_pattern(single({1, 0}, 1), make_data({{1, 0}}, {0})).bits(0, 0));
  EXPECT_FALSE(activation_pattern(single({1, 0}, 1), make_data({{-1, 0}}, {0})).bits(0, 0));
  EXPECT_TRUE(activation_pattern(single({0, 1}, 1), make_data({{1, 0}}, {0})).bits(0, 0));
}

TEST(ActivationPattern, InvariantUnderPositiveRescaling) {
  WNParams p = init_params(4, 30, 1.0, 90);
  const Dataset data = generate_dataset(6, 4, 91, TargetMode::uniform);
  const BoolMatrix before = activation_pattern(p, data).bits;
  for (Eigen::Index k = 0; k < p.m(); ++k) p.V.row(k) *= 0.01 + k;
  EXPECT_TRUE((activation_pattern(p, data).bits == before).all());
}

TEST(KinkFree, MarginExcludesBoundaryNeurons) {
  const auto mask = kink_free_neurons(single({0, 1}, 1), make_data({{1, 0}}, {0}), 1e-3);
  EXPECT_FALSE(mask(0));
  EXPECT_TRUE(kink_free_neurons(single({1, 0}, 1), make_data({{1, 0}}, {0}), 1e-3)(0));
}
