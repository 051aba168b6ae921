#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "verify.hpp"
#include "wnntk/dataset.hpp"

namespace wnntk::cli {

struct GenDataOptions {
  Eigen::Index n = 8;
  Eigen::Index d = 50;
  std::uint64_t seed = 0;
  TargetMode target_mode = TargetMode::uniform;
  std::filesystem::path out = "data.json";
};

/// Options shared by the config-driven subcommands.
struct RunOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;  // overrides output_dir
};

struct KernelsOptions : RunOptions {
  std::size_t steps = 0;  // GD steps before dumping the kernels
};

struct SweepOptions : RunOptions {
  unsigned jobs = 1;
};

struct VerifyCommandOptions {
  VerifyOptions verify;
  std::optional<std::filesystem::path> report;  // JSON report path
};

// Each returns the process exit code: 0 success, 1 runtime failure,
// 2 configuration error (nothing written).
int cmd_gen_data(const GenDataOptions& options);
int cmd_train(const RunOptions& options);
int cmd_kernels(const KernelsOptions& options);
int cmd_aux(const RunOptions& options);
int cmd_sweep(const SweepOptions& options);
int cmd_decompose(const RunOptions& options);
int cmd_verify(const VerifyCommandOptions& options);

}  // namespace wnntk::cli
