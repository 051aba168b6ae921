#include "verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "wnntk/gradients.hpp"
#include "wnntk/kernels.hpp"
#include "wnntk/rng.hpp"
#include "wnntk/trainer.hpp"

namespace wnntk::cli {

namespace {

struct Instance {
  Eigen::Index n, d, m;
  double alpha;
};

double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

CheckResult check_max(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

std::vector<Instance> identity_grid(VerifyMode mode) {
  std::vector<Instance> grid;
  const std::vector<Eigen::Index> ns = mode == VerifyMode::quick ? std::vector<Eigen::Index>{2, 8}
                                                                 : std::vector<Eigen::Index>{2, 8, 32};
  const std::vector<Eigen::Index> ms = mode == VerifyMode::quick ? std::vector<Eigen::Index>{16, 256}
                                                                 : std::vector<Eigen::Index>{16, 256, 4096};
  for (auto n : ns)
    for (Eigen::Index d : {3, 10, 50})
      for (auto m : ms)
        for (double a : {0.1, 1.0, 10.0}) grid.push_back({n, d, m, a});
  return grid;
}

CheckResult kernel_decomposition(const VerifyOptions& opt) {
  double worst = 0.0;
  std::uint64_t k = 0;
  for (const auto& inst : identity_grid(opt.mode)) {
    const Dataset data = generate_dataset(inst.n, inst.d, derive_seed(opt.seed, 100 + k), TargetMode::uniform);
    const WNParams p = init_params(inst.d, inst.m, inst.alpha, derive_seed(opt.seed, 200 + k));
    Matrix V = kernel_V(p, data);
    if (opt.inject_fault && *opt.inject_fault == "kernel-scaling") V *= 1.01;
    const Matrix H = kernel_H(effective_weights(p), data);
    worst = std::max(worst, max_abs(V + kernel_G(p, data) - H));
    ++k;
  }
  return check_max("kernel_decomposition_identity", worst, 1e-12, "max |V(0)+G(0)-H(0)|");
}

CheckResult alpha_independence(const VerifyOptions& opt) {
  const Dataset data = generate_dataset(8, 10, derive_seed(opt.seed, 1), TargetMode::uniform);
  const std::uint64_t s = derive_seed(opt.seed, 2);
  const WNParams ref = init_params(10, 256, 1.0, s);
  const Matrix V1 = kernel_V(ref, data);
  const Matrix G1 = kernel_G(ref, data);
  double worst = 0.0;
  for (double a : {0.1, 10.0}) {
    const WNParams p = init_params(10, 256, a, s);
    worst = std::max({worst, max_abs(kernel_V(p, data) - V1), max_abs(kernel_G(p, data) - G1)});
  }
  return check_max("alpha_independence", worst, 1e-12, "max entry change of V(0), G(0) across alpha");
}

CheckResult norm_growth(const VerifyOptions& opt) {
  const std::size_t steps = opt.mode == VerifyMode::quick ? 50 : 200;
  const Dataset data = generate_dataset(8, 10, derive_seed(opt.seed, 3), TargetMode::uniform);
  WNParams p = init_params(10, 128, 1.0, derive_seed(opt.seed, 4));
  const double eta = step_size_auto(kernel_set(p, data), Regime::general);
  double worst = 0.0;
  bool monotone = true;
  for (std::size_t s = 0; s < steps; ++s) {
    const GradientSet grad = grad_loss(p, data);
    const WNParams next = gd_step(p, grad, eta);
    const Vector before = p.V.rowwise().squaredNorm();
    const Vector after = next.V.rowwise().squaredNorm();
    const Vector predicted = before + eta * eta * grad.dV.rowwise().squaredNorm();
    worst = std::max(worst, ((after - predicted).cwiseAbs().cwiseQuotient(after)).maxCoeff());
    monotone = monotone && next.direction_norms().minCoeff() >= p.direction_norms().minCoeff();
    p = next;
  }
  CheckResult r = check_max("norm_growth_identity", worst, 1e-10,
                            "relative error of ||v(s+1)||^2 = ||v(s)||^2 + eta^2 ||dL/dv||^2");
  if (!monotone) {
    r.passed = false;
    r.detail += "; min_k ||v_k|| decreased";
  }
  return r;
}

CheckResult orthogonality(const VerifyOptions& opt) {
  const int states = opt.mode == VerifyMode::quick ? 20 : 100;
  double worst = 0.0;
  for (int t = 0; t < states; ++t) {
    const Dataset data = generate_dataset(6, 5, derive_seed(opt.seed, 300 + t), TargetMode::uniform);
    WNParams p = init_params(5, 32, 0.5 + 0.1 * t, derive_seed(opt.seed, 400 + t));
    Rng rng(derive_seed(opt.seed, 500 + t));
    for (Eigen::Index k = 0; k < p.m(); ++k) p.g(k) *= rng.uniform(0.5, 2.0);
    const GradientSet grad = grad_loss(p, data);
    for (Eigen::Index k = 0; k < p.m(); ++k) {
      const double denom = grad.dV.row(k).norm() * p.V.row(k).norm();
      if (denom == 0.0) continue;
      worst = std::max(worst, std::abs(grad.dV.row(k).dot(p.V.row(k))) / denom);
    }
  }
  return check_max("gradient_orthogonality", worst, 1e-10, "max |<dL/dv_k, v_k>| / (||dL/dv_k|| ||v_k||)");
}

CheckResult gradient_oracle(const VerifyOptions& opt) {
  const int states = opt.mode == VerifyMode::quick ? 5 : 20;
  double worst = 0.0;
  for (int t = 0; t < states; ++t) {
    const Dataset data = generate_dataset(5, 4, derive_seed(opt.seed, 600 + t), TargetMode::uniform);
    const WNParams p = init_params(4, 24, 1.0, derive_seed(opt.seed, 700 + t));
    const GradientSet a = grad_loss(p, data);
    const GradientSet b = finite_diff_grad(p, data, 1e-5);
    const auto ok = kink_free_neurons(p, data, 1e-3);
    double diff = 0.0, scale = 0.0;
    for (Eigen::Index k = 0; k < p.m(); ++k) {
      if (!ok(k)) continue;
      diff = std::max({diff, (a.dV.row(k) - b.dV.row(k)).cwiseAbs().maxCoeff(), std::abs(a.dg(k) - b.dg(k))});
      scale = std::max({scale, a.dV.row(k).cwiseAbs().maxCoeff(), std::abs(a.dg(k))});
    }
    if (scale > 0.0) worst = std::max(worst, diff / scale);
  }
  return check_max("gradient_finite_difference", worst, 1e-5, "relative max-norm discrepancy, kink margin 1e-3");
}

CheckResult psd(const VerifyOptions& opt) {
  double worst = 0.0;
  std::uint64_t k = 0;
  for (const auto& inst : identity_grid(VerifyMode::quick)) {
    const Dataset data = generate_dataset(inst.n, inst.d, derive_seed(opt.seed, 800 + k), TargetMode::uniform);
    const WNParams p = init_params(inst.d, inst.m, inst.alpha, derive_seed(opt.seed, 900 + k));
    const KernelSet ks = kernel_set(p, data);
    const double lo = std::min({ks.v.lambda_min, ks.g.lambda_min, ks.h.lambda_min, ks.lambda.lambda_min,
                                min_eigenvalue(surrogate_V_hat(p, data))});
    worst = std::max(worst, -lo);
    ++k;
  }
  return check_max("kernels_psd", worst, 1e-10, "-min lambda_min over V, G, H, Lambda, V_hat");
}

CheckResult factorization(const VerifyOptions& opt) {
  const Dataset data = generate_dataset(6, 8, derive_seed(opt.seed, 5), TargetMode::uniform);
  double worst = 0.0;
  for (double a : {0.5, 1.0, 3.0}) {
    WNParams p = init_params(8, 64, a, derive_seed(opt.seed, 6));
    const double eta = step_size_auto(kernel_set(p, data), Regime::general);
    for (int s = 0; s <= 20; ++s) {
      if (s % 10 == 0) {
        const KernelSet ks = kernel_set(p, data);
        worst = std::max(worst, max_abs(lambda_via_factorization(p, data) - ks.Lambda));
      }
      p = gd_step(p, data, eta);
    }
  }
  return check_max("factorization_identity", worst, 1e-10, "max |J S^T S J^T - (V/alpha^2 + G)|");
}

std::vector<CheckResult> decomposition(const VerifyOptions& opt) {
  const Dataset data = generate_dataset(6, 10, derive_seed(opt.seed, 7), TargetMode::uniform);
  const WNParams p = init_params(10, 256, 1.0, derive_seed(opt.seed, 8));
  TrainConfig cfg;
  cfg.steps = opt.mode == VerifyMode::quick ? 10 : 50;
  const DecomposedRun run = decompose_run(p, data, cfg);
  double partition = 0.0, primary = 0.0;
  for (const auto& st : run.steps) {
    partition = std::max(partition, st.partition_error);
    primary = std::max(primary, st.primary_error);
  }
  return {check_max("decomposition_partition", partition, 1e-10, "max |aI+aII+bI+bII - (f(s+1)-f(s))|"),
          check_max("decomposition_primary", primary, 1e-8, "max |p(s) + Lambda(s)(f(s)-y)|")};
}

std::vector<CheckResult> concentration(const VerifyOptions& opt) {
  const Dataset data = generate_dataset(8, 10, derive_seed(opt.seed, 9), TargetMode::uniform);
  const AuxEstimate aux = estimate_aux(data, 1.0, kDefaultAuxSamples, derive_seed(opt.seed, 10));
  std::vector<Eigen::Index> widths;
  for (int e = 7; e <= 13; ++e) widths.push_back(Eigen::Index{1} << e);
  const ConcentrationTable t = concentration_study(data, 1.0, widths, 20, derive_seed(opt.seed, 11), aux);
  auto slope_check = [](std::string name, double slope) {
    CheckResult r{std::move(name), std::abs(slope + 0.5) <= 0.15, std::abs(slope + 0.5), 0.15, {}};
    r.detail = "log-log slope of mean Frobenius deviation vs m: " + std::to_string(slope) + " (target -0.5)";
    return r;
  };
  return {slope_check("concentration_slope_V", t.slope_V), slope_check("concentration_slope_G", t.slope_G)};
}

CheckResult aux_positive(const VerifyOptions& opt) {
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 3; ++t) {
    const Dataset data = generate_dataset(8, 10, derive_seed(opt.seed, 1000 + t), TargetMode::uniform);
    const AuxEstimate aux = estimate_aux(data, 1.0, kDefaultAuxSamples, derive_seed(opt.seed, 1100 + t));
    worst = std::min({worst, aux.lambda0_hat / (3.0 * aux.lambda0_stderr), aux.mu0_hat / (3.0 * aux.mu0_stderr)});
  }
  return {"aux_positive_definite", worst > 1.0, worst, 1.0,
          "min over datasets of lambda_min / (3 stderr of lambda_min) for V_inf and G_inf (must exceed 1)"};
}

}  // namespace

bool VerifyReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

VerifyReport run_verification(const VerifyOptions& opt) {
  using Suite = std::function<std::vector<CheckResult>()>;
  auto one = [](auto fn) { return [fn] { return std::vector<CheckResult>{fn()}; }; };
  std::vector<Suite> suites = {
      one([&] { return kernel_decomposition(opt); }),  one([&] { return alpha_independence(opt); }),
      one([&] { return norm_growth(opt); }),   one([&] { return orthogonality(opt); }),
      one([&] { return gradient_oracle(opt); }), one([&] { return psd(opt); }),
      one([&] { return factorization(opt); }), [&] { return decomposition(opt); },
  };
  if (opt.mode == VerifyMode::full) {
    suites.push_back([&] { return concentration(opt); });
    suites.push_back(one([&] { return aux_positive(opt); }));
  }
  VerifyReport report;
  for (const auto& suite : suites) {
    for (auto& c : suite()) {
      const bool ok = c.passed;
      report.checks.push_back(std::move(c));
      if (!ok && opt.mode == VerifyMode::quick) return report;
    }
  }
  return report;
}

nlohmann::json to_json(const VerifyReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"detail", c.detail}});
  }
  return {{"passed", report.passed()}, {"checks", checks}};
}

}  // namespace wnntk::cli
