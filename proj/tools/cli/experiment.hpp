#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wnntk/dataset.hpp"
#include "wnntk/model.hpp"
#include "wnntk/trainer.hpp"

namespace wnntk::cli {

/// Bad flags or config; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

struct DataSection {
  Eigen::Index n = 8;
  Eigen::Index d = 50;
  TargetMode target_mode = TargetMode::uniform;
  std::optional<std::filesystem::path> path;
};

struct ModelSection {
  Eigen::Index m = 4096;
  double alpha = 1.0;
};

struct SweepSection {
  std::vector<double> alphas;
  std::vector<Eigen::Index> ms;
};

/// Parsed experiment file; schema in docs/config.md.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataSection data;
  ModelSection model;
  TrainConfig train;
  std::size_t mc_samples = kDefaultAuxSamples;
  std::optional<SweepSection> sweep;
  std::filesystem::path output_dir = "out";
  std::string hash;  // hex digest of the canonical config JSON

  std::uint64_t data_seed() const { return seed; }
  std::uint64_t params_seed() const;
  std::uint64_t aux_seed() const;
};

/// Throws ConfigError on any schema or range problem. Relative data paths
/// resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// 16 hex digits; stable for a given JSON value.
std::string config_hash(const nlohmann::json& j);

/// Lines embedded at the top of every CSV artifact.
std::vector<std::string> provenance_lines(const ExperimentConfig& config);
nlohmann::json provenance_json(const ExperimentConfig& config);

/// Loads data.path or generates from (n, d, seed, target_mode).
Dataset resolve_dataset(const ExperimentConfig& config);

std::string build_id();

}  // namespace wnntk::cli
