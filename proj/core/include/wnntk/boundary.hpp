#pragma once

#include <vector>

#include "wnntk/dataset.hpp"
#include "wnntk/model.hpp"

namespace wnntk {

/// Neurons whose activation at x_i can flip under a perturbation of
/// v_k(0) of norm at most R: S_i(R) = {k : |v_k(0)^T x_i| <= R ||x_i||}.
struct BoundarySets {
  double radius = 0.0;
  BoolMatrix member;                   // n x m
  std::vector<std::vector<Eigen::Index>> indices;  // per data point
  std::vector<std::size_t> cardinality;

  static BoundarySets empty(Eigen::Index n, Eigen::Index m);
};

/// Throws std::invalid_argument for R < 0.
BoundarySets boundary_sets(const WNParams& params0, const Dataset& data,
                           double radius);

}  // namespace wnntk
