#include "wnntk/report.hpp"

#include <cmath>

namespace wnntk {

TheoryReport theory_report(const TrainTrace& trace, const AuxEstimate& aux) {
  TheoryReport rep;
  if (trace.records.empty()) return rep;
  rep.empty = false;

  const TrainRecord& r0 = trace.records.front();
  const double alpha = trace.alpha;
  const double alpha2 = alpha * alpha;
  const double err0 = r0.err_sq;
  const double eta = trace.eta;
  const double sqrt_n = std::sqrt(static_cast<double>(trace.n));
  const double sqrt_m = std::sqrt(static_cast<double>(trace.m));

  rep.lambda0 = aux.lambda0_conservative();
  rep.mu0 = aux.mu0_conservative();
  rep.omega = 2.0 * r0.lmin_lambda;
  rep.radius_v = 4.0 * sqrt_n * std::sqrt(err0) / (alpha * rep.omega * sqrt_m);
  rep.radius_g = 4.0 * sqrt_n * std::sqrt(err0) / (rep.omega * sqrt_m);
  rep.step_size_within = eta <= (1.0 + 1e-12) / (3.0 * r0.lambda_norm);
  if (rep.mu0 > 0.0) rep.suggested_alpha = std::sqrt(static_cast<double>(trace.n) / rep.mu0);

  // The eigenvalue floor of each regime must hold up to step s for its bound to apply.
  bool v_floor = alpha <= 1.0 && rep.lambda0 > 0.0;
  bool g_floor = alpha >= 1.0 && rep.mu0 > 0.0;
  rep.drift_v = 0.0;
  rep.drift_g = 0.0;
  for (const auto& rec : trace.records) {
    v_floor = v_floor && rec.lmin_lambda >= rep.lambda0 / (2.0 * alpha2);
    g_floor = g_floor && rec.lmin_lambda >= rep.mu0 / 2.0;
    BoundRow row;
    row.step = rec.step;
    row.err_sq = rec.err_sq;
    const double s = static_cast<double>(rec.step);
    row.bound_v = std::pow(1.0 - eta * rep.lambda0 / (2.0 * alpha2), s) * err0;
    row.bound_g = std::pow(1.0 - eta * rep.mu0 / 2.0, s) * err0;
    row.v_hypotheses = v_floor;
    row.g_hypotheses = g_floor;
    const double slack = 1e-12 * err0;
    if (row.v_hypotheses) row.within_v = rec.err_sq <= row.bound_v + slack;
    if (row.g_hypotheses) row.within_g = rec.err_sq <= row.bound_g + slack;
    rep.bounds_hold = rep.bounds_hold && row.within_v && row.within_g;
    rep.rows.push_back(row);

    if (rec.lmin_lambda < 0.5 * r0.lmin_lambda) rep.eigen_floor_violations.push_back(rec.step);
    rep.drift_v = std::max(rep.drift_v, rec.max_drift_v);
    if (std::isfinite(rec.max_drift_g)) rep.drift_g = std::max(rep.drift_g, rec.max_drift_g);
    if (std::isfinite(rec.residual_norm) && rec.err_sq > 0.0) {
      const double ratio = rec.residual_norm / (rec.lmin_lambda * std::sqrt(rec.err_sq));
      rep.max_residual_ratio = std::isfinite(rep.max_residual_ratio)
                                   ? std::max(rep.max_residual_ratio, ratio)
                                   : ratio;
    }
  }
  rep.drift_v_within = rep.drift_v <= rep.radius_v;
  rep.drift_g_within = rep.drift_g <= rep.radius_g;
  return rep;
}

nlohmann::json to_json(const TheoryReport& rep) {
  if (rep.empty) return nlohmann::json::object();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"step", r.step},
                    {"err_sq", r.err_sq},
                    {"bound_v", r.bound_v},
                    {"bound_g", r.bound_g},
                    {"v_hypotheses", r.v_hypotheses},
                    {"g_hypotheses", r.g_hypotheses},
                    {"within_v", r.within_v},
                    {"within_g", r.within_g}});
  }
  auto number = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"omega", number(rep.omega)},
          {"lambda0_conservative", number(rep.lambda0)},
          {"mu0_conservative", number(rep.mu0)},
          {"drift_v", number(rep.drift_v)},
          {"drift_g", number(rep.drift_g)},
          {"radius_v", number(rep.radius_v)},
          {"radius_g", number(rep.radius_g)},
          {"drift_v_within", rep.drift_v_within},
          {"drift_g_within", rep.drift_g_within},
          {"step_size_within", rep.step_size_within},
          {"eigen_floor_violations", rep.eigen_floor_violations},
          {"bounds_hold", rep.bounds_hold},
          {"max_residual_ratio", number(rep.max_residual_ratio)},
          {"suggested_alpha", number(rep.suggested_alpha)},
          {"rows", rows}};
}

AlphaSearchResult alpha_star_search(const Dataset& data, const std::vector<double>& alpha_grid,
                                    Eigen::Index m, std::uint64_t seed, std::size_t window) {
  if (alpha_grid.empty()) throw std::invalid_argument("alpha_star_search: empty grid");
  AlphaSearchResult result;
  double best_rate = 0.0;
  for (double alpha : alpha_grid) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha_star_search: alpha must be positive");
    const WNParams p = init_params(data.d(), m, alpha, seed);
    const KernelSet k0 = kernel_set(p, data);
    AlphaRate row;
    row.alpha = alpha;
    row.eta = step_size_auto(k0, Regime::general);
    row.lmin_lambda0 = k0.lambda.lambda_min;
    row.lambda_norm0 = k0.lambda.spectral_norm;
    const double c = 1.0 - row.eta * row.lmin_lambda0;
    row.predicted_rate = c * c;
    TrainConfig cfg;
    cfg.eta = row.eta;
    cfg.steps = window;
    cfg.record_every = window;
    row.rate = contraction_factor(train(p, data, cfg), window);
    if (result.table.empty() || row.rate < best_rate) {
      best_rate = row.rate;
      result.best_alpha = alpha;
    }
    result.table.push_back(row);
  }
  return result;
}

}  // namespace wnntk
