#pragma once

#include <initializer_list>

#include "wnntk/dataset.hpp"
#include "wnntk/model.hpp"

namespace testing_helpers {

inline wnntk::Dataset make_data(std::initializer_list<std::initializer_list<double>> rows,
                                std::initializer_list<double> y) {
  wnntk::Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.begin()->size());
  data.X.resize(n, d);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index l = 0;
    for (double v : r) data.X(i, l++) = v;
    ++i;
  }
  data.y = Eigen::Map<const wnntk::Vector>(y.begin(), static_cast<Eigen::Index>(y.size()));
  return data;
}

/// Single-neuron parameters with explicit v, g, c.
inline wnntk::WNParams single(std::initializer_list<double> v, double g, double c = 1.0, double alpha = 1.0) {
  wnntk::WNParams p;
  p.V.resize(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index l = 0;
  for (double x : v) p.V(0, l++) = x;
  p.g = wnntk::Vector::Constant(1, g);
  p.c = wnntk::Vector::Constant(1, c);
  p.alpha = alpha;
  return p;
}

inline wnntk::Vector vec(std::initializer_list<double> v) {
  return Eigen::Map<const wnntk::Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace testing_helpers
