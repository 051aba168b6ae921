#include "wnntk/boundary.hpp"

namespace wnntk {

BoundarySets BoundarySets::empty(Eigen::Index n, Eigen::Index m) {
  BoundarySets sets;
  sets.member = BoolMatrix::Constant(n, m, false);
  sets.indices.assign(static_cast<std::size_t>(n), {});
  sets.cardinality.assign(static_cast<std::size_t>(n), 0);
  return sets;
}

BoundarySets boundary_sets(const WNParams& params0, const Dataset& data, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("boundary_sets: R must be >= 0");
  const Eigen::Index n = data.n();
  const Eigen::Index m = params0.m();
  BoundarySets sets = BoundarySets::empty(n, m);
  sets.radius = radius;
  const Matrix pre = data.X * params0.V.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double threshold = radius * data.X.row(i).norm();
    for (Eigen::Index k = 0; k < m; ++k) {
      if (std::abs(pre(i, k)) <= threshold) {
        sets.member(i, k) = true;
        sets.indices[static_cast<std::size_t>(i)].push_back(k);
      }
    }
    sets.cardinality[static_cast<std::size_t>(i)] = sets.indices[static_cast<std::size_t>(i)].size();
  }
  return sets;
}

}  // namespace wnntk
