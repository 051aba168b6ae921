#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wnntk/types.hpp"

namespace wnntk {

enum class TargetMode { uniform, teacher };

std::string to_string(TargetMode mode);
TargetMode parse_target_mode(const std::string& name);

/// Regression data: rows of X are the inputs x_i, y holds the targets.
struct Dataset {
  Matrix X;  // n x d
  Vector y;  // n
  std::uint64_t seed = 0;
  TargetMode target_mode = TargetMode::uniform;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool norm_violation = false;
  bool parallel_violation = false;
  bool zero_vector = false;
  bool target_violation = false;
  bool low_dimension = false;  // d < 50: outside the theory regime, allowed

  bool ok() const { return violations.empty(); }
};

inline constexpr double kParallelTolerance = 1e-8;
inline constexpr double kGenerationMargin = 1e-6;
inline constexpr Eigen::Index kTheoryDimension = 50;

/// Checks unit-ball inputs, pairwise non-parallelism and bounded targets.
ValidationReport validate_dataset(const Dataset& data);

/// Samples inputs uniformly on the unit sphere, rejecting whole draws whose
/// largest |cosine| between distinct points is within 1e-6 of one.
/// Throws std::runtime_error after 100 rejected rounds.
Dataset generate_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                         TargetMode mode);

nlohmann::json to_json(const Dataset& data);
Dataset dataset_from_json(const nlohmann::json& j);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace wnntk
