#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wnntk/boundary.hpp"
#include "wnntk/dataset.hpp"
#include "wnntk/gradients.hpp"
#include "wnntk/kernels.hpp"
#include "wnntk/model.hpp"

namespace wnntk {

enum class TrainMode { wn, vanilla };
enum class Regime { v_dom, g_dom, general };

std::string to_string(TrainMode mode);
std::string to_string(Regime regime);
TrainMode parse_train_mode(const std::string& name);
Regime parse_regime(const std::string& name);

struct TrainConfig {
  std::optional<double> eta;  // nullopt selects step_size_auto at step 0
  std::size_t steps = 500;
  TrainMode mode = TrainMode::wn;
  Regime regime = Regime::general;
  std::size_t record_every = 1;
  /// Record ||r(s)|| from the finite-step decomposition at each recorded step.
  bool decompose = false;
  /// Radius R for S_i(R). Unset: 1.1 x the largest drift max_k ||v_k(s)-v_k(0)||
  /// seen over the run (found with a pre-pass).
  std::optional<double> boundary_radius;
  double kink_margin = 1e-3;
  double divergence_factor = 1e3;

  void validate() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrainRecord {
  std::size_t step = 0;
  double time = 0.0;  // step * eta; meaningful for gradient_flow
  double loss = kNaN;
  double err_sq = kNaN;          // ||f(s) - y||^2
  double lmin_lambda = kNaN;     // WN: Lambda(s); vanilla: H(s)
  double lmin_v_scaled = kNaN;   // lambda_min(V(s)) / alpha^2
  double lmin_g = kNaN;
  double lambda_norm = kNaN;
  double max_drift_v = kNaN;     // max_k ||v_k(s) - v_k(0)||  (w_k for vanilla)
  double max_drift_g = kNaN;     // max_k |g_k(s) - g_k(0)|
  double min_norm_v = kNaN;      // min_k ||v_k(s)||
  double residual_norm = kNaN;   // ||r(s)|| of the step s -> s+1
  double primary_norm = kNaN;    // ||p(s)||
  double bound_v = kNaN;         // (1 - eta lambda0/(2 alpha^2))^s ||f(0)-y||^2
  double bound_g = kNaN;         // (1 - eta mu0/2)^s ||f(0)-y||^2
  double pred_bound = kNaN;      // (1 - eta omega/2)^s ||f(0)-y||^2, omega = 2 lmin(Lambda(0))
};

struct TrainTrace {
  std::vector<TrainRecord> records;
  double eta = 0.0;
  double alpha = 1.0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  TrainMode mode = TrainMode::wn;
  double boundary_radius = kNaN;
  /// Steps whose drift exceeded the boundary radius (decomposition invalid).
  std::size_t radius_violations = 0;
  WNParams final_params;
  VanillaParams final_vanilla;
};

/// One full-batch step v_k -= eta dL/dv_k, g_k -= eta dL/dg_k; c unchanged.
WNParams gd_step(const WNParams& params, const Dataset& data, double eta);
/// Same step using an already computed gradient.
WNParams gd_step(const WNParams& params, const GradientSet& grad, double eta);

VanillaParams gd_step_vanilla(const VanillaParams& params, const Dataset& data,
                              double eta);

/// general / g_dom: 1/(3 ||Lambda||); v_dom: alpha^2/(3 ||V||).
double step_size_auto(const KernelSet& kernels, Regime regime);
/// general / g_dom: 1/(3 ||V_inf/alpha^2 + G_inf||); v_dom: alpha^2/(3 ||V_inf||).
double step_size_auto(const AuxEstimate& aux, double alpha, Regime regime);

/// Full-batch gradient descent. Regime bounds are filled when `aux` is
/// given. Throws DivergenceError once the loss exceeds
/// divergence_factor x the initial loss.
TrainTrace train(const WNParams& params, const Dataset& data,
                 const TrainConfig& config, const AuxEstimate* aux = nullptr);

/// Explicit Euler integration of the gradient flow up to time T.
/// Requires dt <= step_size_auto(general)/10. T = 0 gives a single record.
TrainTrace gradient_flow(const WNParams& params, const Dataset& data, double T,
                         double dt, std::size_t record_every = 1);

/// Split of f(s+1) - f(s) into primary and residual terms.
struct StepDecomposition {
  Vector aI, aII, bI, bII;
  Vector p, r;  // (aI + bI)/eta and (aII + bII)/eta
  std::vector<std::size_t> S_cardinalities;
  Matrix Lambda_step;     // G(s) + (V_tilde(s) - V_tilde_perp(s)) / alpha^2
  Vector f_diff;          // f(s+1) - f(s)
  Vector err;             // f(s) - y
  double partition_error = 0.0;  // max |aI+aII+bI+bII - f_diff|
  double eta_error = 0.0;        // max |eta(p + r) - f_diff|
  double primary_error = 0.0;    // max |p + Lambda_step err|
};

/// Requires params_next = gd_step(params_s, data, eta) and
/// radius(sets) >= max_k ||v_k - v_k(0)|| at both steps; throws
/// std::invalid_argument otherwise and std::logic_error if an identity fails
/// beyond 1e-8.
StepDecomposition decompose_step(const WNParams& params_s,
                                 const WNParams& params_next,
                                 const WNParams& params0, const Dataset& data,
                                 const BoundarySets& sets, double eta);

double max_direction_drift(const WNParams& params, const WNParams& params0);
double max_magnitude_drift(const WNParams& params, const WNParams& params0);

/// Header: step,loss,pred_err_sq,lmin_lambda,lmin_v_scaled,lmin_g,
/// max_drift_v,max_drift_g,min_norm_v,residual_norm,bound_v_regime,bound_g_regime
/// `preamble` lines are written first, each prefixed with "# ".
void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path,
                     const std::vector<std::string>& preamble = {});

/// Geometric mean of successive err_sq ratios over the first `window`
/// steps, taken between the first record and the last record at or before
/// step `window`.
double contraction_factor(const TrainTrace& trace, std::size_t window);

/// Largest max_k ||v_k(s) - v_k(0)|| over `steps` GD steps of size eta.
double max_drift_over_run(const WNParams& params, const Dataset& data, double eta,
                          std::size_t steps, double divergence_factor = 1e3);

/// Every step of a run decomposed against one set S_i(R).
struct DecomposedRun {
  double eta = 0.0;
  double radius = 0.0;
  BoundarySets sets;
  std::vector<StepDecomposition> steps;  // entry s covers s -> s+1
  std::vector<double> lmin_lambda;       // lambda_min(Lambda(s)) per entry
};

/// Uses config.eta (or step_size_auto(general/g_dom/v_dom on the kernels at
/// step 0)) and config.boundary_radius (or 1.1 x max_drift_over_run).
DecomposedRun decompose_run(const WNParams& params, const Dataset& data,
                            const TrainConfig& config);

}  // namespace wnntk
