#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "wnntk/kernels.hpp"
#include "wnntk/trainer.hpp"

namespace wnntk {

struct BoundRow {
  std::size_t step = 0;
  double err_sq = 0.0;
  double bound_v = kNaN;
  double bound_g = kNaN;
  bool v_hypotheses = false;
  bool g_hypotheses = false;
  bool within_v = true;  // vacuous when hypotheses fail
  bool within_g = true;
};

/// Measured trajectory against the two regime guarantees and the drift
/// radii R'_v = 4 sqrt(n)||f(0)-y||/(alpha omega sqrt m),
/// R'_g = 4 sqrt(n)||f(0)-y||/(omega sqrt m), omega = 2 lmin(Lambda(0)).
struct TheoryReport {
  bool empty = true;
  std::vector<BoundRow> rows;
  double omega = kNaN;
  double lambda0 = kNaN;  // conservative estimates used by the bounds
  double mu0 = kNaN;
  double drift_v = kNaN;
  double drift_g = kNaN;
  double radius_v = kNaN;
  double radius_g = kNaN;
  bool drift_v_within = false;
  bool drift_g_within = false;
  bool step_size_within = false;  // eta <= 1/(3 ||Lambda(0)||)
  std::vector<std::size_t> eigen_floor_violations;  // lmin(Lambda(s)) < lmin(Lambda(0))/2
  bool bounds_hold = true;
  double max_residual_ratio = kNaN;  // max ||r|| / (lmin(Lambda(s)) ||f-y||)
  double suggested_alpha = kNaN;     // sqrt(n / mu0)
};

TheoryReport theory_report(const TrainTrace& trace, const AuxEstimate& aux);
nlohmann::json to_json(const TheoryReport& report);

struct AlphaRate {
  double alpha = 0.0;
  double eta = 0.0;
  double lmin_lambda0 = 0.0;
  double lambda_norm0 = 0.0;
  double rate = 0.0;            // measured contraction factor of ||f-y||^2
  double predicted_rate = 0.0;  // (1 - eta lmin(Lambda(0)))^2
};

struct AlphaSearchResult {
  double best_alpha = 0.0;
  std::vector<AlphaRate> table;
};

/// For each alpha: same-seed initialization, eta = 1/(3||Lambda(0)||),
/// contraction factor over the first `window` steps; returns the argmin.
AlphaSearchResult alpha_star_search(const Dataset& data,
                                    const std::vector<double>& alpha_grid,
                                    Eigen::Index m, std::uint64_t seed,
                                    std::size_t window = 50);

}  // namespace wnntk
