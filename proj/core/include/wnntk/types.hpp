#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace wnntk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when a direction vector v_k has zero norm.
class DegenerateDirectionError : public std::runtime_error {
 public:
  explicit DegenerateDirectionError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Raised by training loops when the loss exceeds the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

// ReLU subgradient convention shared by patterns, gradients and kernels.
inline bool active(double z) { return z >= 0.0; }

}  // namespace wnntk
