#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace wnntk::cli {

enum class VerifyMode { quick, full };

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured worst case
  double threshold = 0.0;  // pass limit for `value`
  std::string detail;
};

struct VerifyOptions {
  VerifyMode mode = VerifyMode::quick;
  std::uint64_t seed = 20240601;
  /// Test fixture: corrupts one kernel so its check must fail.
  /// Recognized: "kernel-scaling" (V scaled by 1.01).
  std::optional<std::string> inject_fault;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Quick mode stops at the first failed check; full mode runs everything.
VerifyReport run_verification(const VerifyOptions& options);
nlohmann::json to_json(const VerifyReport& report);

}  // namespace wnntk::cli
