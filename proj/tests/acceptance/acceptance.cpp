// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: wnntk_acceptance [criterion numbers...]   (default: all)
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "wnntk/gradients.hpp"
#include "wnntk/kernels.hpp"
#include "wnntk/report.hpp"
#include "wnntk/rng.hpp"
#include "wnntk/trainer.hpp"

using namespace wnntk;

namespace {

struct Outcome {
  Outcome() = default;
  Outcome(bool p, std::string s) : passed(p), summary(std::move(s)) {}
  bool passed = false;
  std::string summary;
  std::vector<std::string> info;  // printed indented, never gating
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared desk instance for the rate criteria.
constexpr Eigen::Index kDeskN = 8, kDeskD = 50, kDeskM = 4096;
constexpr std::uint64_t kDeskDataSeed = 7, kDeskParamSeed = 8, kDeskAuxSeed = 9;

const Dataset& desk_data() {
  static const Dataset data = generate_dataset(kDeskN, kDeskD, kDeskDataSeed, TargetMode::uniform);
  return data;
}

const AuxEstimate& desk_aux(double alpha) {
  static std::map<double, AuxEstimate> cache;
  auto it = cache.find(alpha);
  if (it == cache.end()) it = cache.emplace(alpha, estimate_aux(desk_data(), alpha, kDefaultAuxSamples, kDeskAuxSeed)).first;
  return it->second;
}

struct VRun {
  TrainTrace trace;
  double seconds = 0.0;
};

// alpha = 0.5, eta = alpha^2 / (3 ||V_inf||), 300 steps.
const VRun& v_regime_run() {
  static const VRun run = [] {
    const auto t0 = std::chrono::steady_clock::now();
    const double alpha = 0.5;
    const AuxEstimate& aux = desk_aux(alpha);
    TrainConfig cfg;
    cfg.steps = 300;
    cfg.regime = Regime::v_dom;
    cfg.eta = step_size_auto(aux, alpha, Regime::v_dom);
    VRun r;
    r.trace = train(init_params(kDeskD, kDeskM, alpha, kDeskParamSeed), desk_data(), cfg, &aux);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

constexpr std::array<double, 3> kGAlphas = {1.0, 4.0, 16.0};
constexpr std::size_t kGWindow = 50;

struct GRuns {
  double eta = 0.0;
  std::vector<TrainTrace> traces;
  std::vector<double> per_alpha_eta;
};

// alpha in {1, 4, 16}; one eta for all, the largest admissible by every run's Lambda(0).
const GRuns& g_regime_runs() {
  static const GRuns runs = [] {
    GRuns r;
    r.eta = std::numeric_limits<double>::infinity();
    for (double a : kGAlphas) {
      const double e = step_size_auto(kernel_set(init_params(kDeskD, kDeskM, a, kDeskParamSeed), desk_data()),
                                      Regime::general);
      r.per_alpha_eta.push_back(e);
      r.eta = std::min(r.eta, e);
    }
    for (double a : kGAlphas) {
      TrainConfig cfg;
      cfg.steps = 2 * kGWindow;
      cfg.eta = r.eta;
      r.traces.push_back(train(init_params(kDeskD, kDeskM, a, kDeskParamSeed), desk_data(), cfg));
    }
    return r;
  }();
  return runs;
}

double relative_spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo - 1.0;
}

// Coefficient of determination of log(y) against x.
double r_squared_log(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = std::log(y[i]) - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy * sxy / (sxx * syy);
}

// ---------------------------------------------------------------------------

Outcome c1_kernel_decomposition() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::array<Eigen::Index, 3> ns = {2, 8, 32}, ds = {3, 10, 50}, ms = {16, 256, 4096};
  const std::array<double, 3> as = {0.1, 1.0, 10.0};
  double worst = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    const Eigen::Index n = ns[t % 3], d = ds[(t / 3) % 3], m = ms[(t / 9) % 3];
    const double a = as[(t + t / 3 + t / 9) % 3];
    const Dataset data = generate_dataset(n, d, derive_seed(101, t), TargetMode::uniform);
    const WNParams p = init_params(d, m, a, derive_seed(102, t));
    worst = std::max(worst, oracle::max_diff(kernel_V(p, data) + kernel_G(p, data), kernel_H(effective_weights(p), data)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 10.0,
          fmt("20 instances: max|V(0)+G(0)-H(0)| = %.3g (limit 1e-12), %.2f s (limit 10 s)", worst, secs)};
}

Outcome c2_alpha_independence() {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 5; ++t) {
    const Dataset data = generate_dataset(8, 10, derive_seed(201, t), TargetMode::uniform);
    const std::uint64_t seed = derive_seed(202, t);
    const WNParams ref = init_params(10, 512, 1.0, seed);
    const Matrix V1 = kernel_V(ref, data), G1 = kernel_G(ref, data);
    for (double a : {0.1, 10.0}) {
      const WNParams p = init_params(10, 512, a, seed);
      worst = std::max({worst, oracle::max_diff(kernel_V(p, data), V1), oracle::max_diff(kernel_G(p, data), G1)});
    }
  }
  return {worst <= 1e-12, fmt("alpha in {0.1,1,10}: max entry change of V(0), G(0) = %.3g (limit 1e-12)", worst)};
}

Outcome c3_norm_growth() {
  const Dataset data = generate_dataset(8, 10, 301, TargetMode::uniform);
  WNParams p = init_params(10, 256, 1.0, 302);
  const double eta = step_size_auto(kernel_set(p, data), Regime::general);
  // Monotonicity is compared at 4 ulp: a step whose growth eta^2 ||dL/dv_k||^2 is below one ulp
  // of ||v_k||^2 leaves the stored norm unchanged up to rounding.
  const double ulps = 4 * std::numeric_limits<double>::epsilon();
  double worst = 0.0, drop = 0.0;
  bool monotone = true;
  for (int s = 0; s < 200; ++s) {
    const GradientSet grad = grad_loss(p, data);
    const WNParams next = gd_step(p, grad, eta);
    for (Eigen::Index k = 0; k < p.m(); ++k) {
      const double lhs = next.V.row(k).squaredNorm();
      const double rhs = p.V.row(k).squaredNorm() + eta * eta * grad.dV.row(k).squaredNorm();
      worst = std::max(worst, std::abs(lhs - rhs) / lhs);
    }
    const double before = p.direction_norms().minCoeff(), after = next.direction_norms().minCoeff();
    drop = std::max(drop, (before - after) / before);
    monotone = monotone && after >= before * (1 - ulps);
    p = next;
  }
  Outcome o{worst <= 1e-10 && monotone,
            fmt("200 steps: max relative error %.3g (limit 1e-10); min_k ||v_k|| non-decreasing: %s", worst,
                monotone ? "yes" : "no")};
  o.info.push_back(fmt("largest relative step-to-step decrease of min_k ||v_k||: %.3g (rounding; 4 ulp = %.3g)",
                       drop, ulps));
  return o;
}

Outcome c4_gradients() {
  double ortho = 0.0, fd = 0.0;
  Rng rng(401);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index d = 3 + t % 8;
    WNParams p = init_params(d, 32, rng.uniform(0.1, 10.0), derive_seed(402, t));
    for (Eigen::Index k = 0; k < p.m(); ++k) p.g(k) *= rng.uniform(0.2, 3.0);
    const Dataset data = generate_dataset(6, d, derive_seed(403, t), TargetMode::uniform);
    const GradientSet g = grad_loss(p, data);
    for (Eigen::Index k = 0; k < p.m(); ++k) {
      const double denom = g.dV.row(k).norm() * p.V.row(k).norm();
      if (denom > 0) ortho = std::max(ortho, std::abs(g.dV.row(k).dot(p.V.row(k))) / denom);
    }
    if (t % 5 == 0) {
      const GradientSet b = finite_diff_grad(p, data, 1e-5);
      const auto mask = kink_free_neurons(p, data, 1e-3);
      double diff = 0, scale = 0;
      for (Eigen::Index k = 0; k < p.m(); ++k) {
        if (!mask(k)) continue;
        diff = std::max({diff, (g.dV.row(k) - b.dV.row(k)).cwiseAbs().maxCoeff(), std::abs(g.dg(k) - b.dg(k))});
        scale = std::max({scale, g.dV.row(k).cwiseAbs().maxCoeff(), std::abs(g.dg(k))});
      }
      if (scale > 0) fd = std::max(fd, diff / scale);
    }
  }
  return {ortho <= 1e-10 && fd <= 1e-5,
          fmt("100 states: max relative |<dL/dv_k, v_k>| = %.3g (limit 1e-10); finite-difference rel. err %.3g "
              "(limit 1e-5)",
              ortho, fd)};
}

Outcome c5_factorization() {
  const Dataset data = generate_dataset(8, 10, 501, TargetMode::uniform);
  double worst = 0.0;
  for (double a : {0.5, 1.0, 4.0}) {
    WNParams p = init_params(10, 256, a, 502);
    const double eta = step_size_auto(kernel_set(p, data), Regime::general);
    for (int s = 0; s <= 100; ++s) {
      if (s == 0 || s == 100) worst = std::max(worst, oracle::max_diff(lambda_via_factorization(p, data), kernel_set(p, data).Lambda));
      if (s < 100) p = gd_step(p, data, eta);
    }
  }
  return {worst <= 1e-10, fmt("init and step 100: max |J S^T S J^T - (V/a^2+G)| = %.3g (limit 1e-10)", worst)};
}

Outcome c6_v_regime() {
  const VRun& run = v_regime_run();
  const auto& recs = run.trace.records;
  const double slack = 1e-28 * std::max(1.0, recs.front().loss);
  std::size_t increases = 0, strict_increases = 0;
  for (std::size_t s = 1; s < recs.size(); ++s) {
    if (recs[s].loss > recs[s - 1].loss + slack) ++increases;
    if (recs[s].loss > recs[s - 1].loss) ++strict_increases;
  }
  std::vector<double> x, y;
  std::size_t floor_step = recs.size();
  for (const auto& r : recs) {
    if (r.step > 300) break;
    x.push_back(static_cast<double>(r.step));
    y.push_back(std::max(r.loss, std::numeric_limits<double>::min()));
    if (floor_step == recs.size() && r.err_sq <= 1e-24 * recs.front().err_sq) floor_step = r.step;
  }
  const double r2 = r_squared_log(x, y);
  const double ratio = recs.back().err_sq / recs.front().err_sq;
  Outcome o;
  o.passed = increases == 0 && r2 >= 0.95 && ratio <= 1e-3 && run.seconds < 120.0;
  o.summary = fmt("alpha=0.5 eta=%.4g: loss increases %zu (0 allowed); R^2 of log-loss fit over 300 steps %.4f "
                  "(limit 0.95); final/initial %.3g (limit 1e-3); %.1f s (limit 120 s)",
                  run.trace.eta, increases, r2, ratio, run.seconds);
  const std::size_t pre = std::min<std::size_t>(floor_step, x.size());
  if (pre >= 3) {
    const std::vector<double> xp(x.begin(), x.begin() + static_cast<long>(pre)),
        yp(y.begin(), y.begin() + static_cast<long>(pre));
    o.info.push_back(fmt("loss reaches the float64 floor (err ratio 1e-24) at step %zu; R^2 before it %.4f", floor_step,
                         r_squared_log(xp, yp)));
  }
  o.info.push_back(fmt("strict increases without roundoff slack: %zu", strict_increases));
  return o;
}

Outcome c7_g_regime() {
  const GRuns& runs = g_regime_runs();
  std::vector<double> rates;
  std::string list;
  for (std::size_t i = 0; i < kGAlphas.size(); ++i) {
    rates.push_back(contraction_factor(runs.traces[i], kGWindow));
    list += fmt("%s%g:%.4f", i ? " " : "", kGAlphas[i], rates.back());
  }
  const double spread = relative_spread(rates);
  Outcome o;
  o.passed = spread <= 0.25;
  o.summary = fmt("shared eta=%.4g, %zu-step contraction factors {%s}: max/min - 1 = %.3f (limit 0.25)", runs.eta,
                  kGWindow, list.c_str(), spread);
  std::vector<double> own;
  for (std::size_t i = 0; i < kGAlphas.size(); ++i) {
    TrainConfig cfg;
    cfg.steps = kGWindow;
    cfg.eta = runs.per_alpha_eta[i];
    own.push_back(contraction_factor(
        train(init_params(kDeskD, kDeskM, kGAlphas[i], kDeskParamSeed), desk_data(), cfg), kGWindow));
  }
  o.info.push_back(fmt("with per-alpha eta = 1/(3||Lambda_alpha(0)||): factors {%.4f %.4f %.4f}, spread %.3f", own[0],
                       own[1], own[2], relative_spread(own)));
  for (std::size_t i = 0; i < kGAlphas.size(); ++i) {
    const auto& r0 = runs.traces[i].records.front();
    o.info.push_back(fmt("alpha=%g: lmin(Lambda(0)) %.4g = lmin(V)/a^2 %.4g + ..., lmin(G) %.4g", kGAlphas[i],
                         r0.lmin_lambda, r0.lmin_v_scaled, r0.lmin_g));
  }
  return o;
}

Outcome c8_eigen_floor() {
  std::size_t violations = 0, records = 0;
  double worst = std::numeric_limits<double>::infinity();
  auto scan = [&](const TrainTrace& t) {
    const double l0 = t.records.front().lmin_lambda;
    for (const auto& r : t.records) {
      ++records;
      worst = std::min(worst, r.lmin_lambda / l0);
      if (r.lmin_lambda < 0.5 * l0) ++violations;
    }
  };
  scan(v_regime_run().trace);
  for (const auto& t : g_regime_runs().traces) scan(t);
  return {violations == 0,
          fmt("%zu recorded steps: min lmin(Lambda(s))/lmin(Lambda(0)) = %.4f (limit 0.5), violations %zu", records,
              worst, violations)};
}

Outcome c9_decomposition() {
  const double alpha = 0.5;
  const WNParams p0 = init_params(kDeskD, kDeskM, alpha, kDeskParamSeed);
  TrainConfig cfg;
  cfg.steps = 300;
  cfg.regime = Regime::v_dom;
  cfg.eta = step_size_auto(desk_aux(alpha), alpha, Regime::v_dom);
  const DecomposedRun run = decompose_run(p0, desk_data(), cfg);
  double partition = 0, primary = 0, property = 0;
  for (std::size_t s = 0; s < run.steps.size(); ++s) {
    const auto& st = run.steps[s];
    partition = std::max(partition, st.partition_error);
    primary = std::max(primary, st.primary_error);
    const double e = st.err.norm();
    if (e > 0) property = std::max(property, st.r.norm() / (run.lmin_lambda[s] * e));
  }
  // Single step from init at eta and eta/2, each with R = 1.1 x its own drift.
  auto residual = [&](double h) {
    const WNParams p1 = gd_step(p0, desk_data(), h);
    const BoundarySets sets = boundary_sets(p0, desk_data(), 1.1 * max_direction_drift(p1, p0));
    return decompose_step(p0, p1, p0, desk_data(), sets, h).r.norm();
  };
  const double scaling = residual(*cfg.eta) / residual(*cfg.eta / 2);
  return {partition <= 1e-10 && primary <= 1e-8 && property <= 0.5 && std::abs(scaling - 2.0) <= 0.3,
          fmt("%zu steps, R=%.4g: partition %.3g (limit 1e-10); primary %.3g (limit 1e-8); max ||r||/(lmin ||f-y||) "
              "%.3f (limit 0.5); ||r|| ratio eta vs eta/2 %.3f (2 +- 0.3)",
              run.steps.size(), run.radius, partition, primary, property, scaling)};
}

Outcome c10_concentration() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = generate_dataset(8, 10, 1001, TargetMode::uniform);
  const AuxEstimate ref = estimate_aux(data, 1.0, kDefaultAuxSamples, 1002);
  std::vector<Eigen::Index> widths;
  for (int e = 7; e <= 13; ++e) widths.push_back(Eigen::Index{1} << e);
  const ConcentrationTable t = concentration_study(data, 1.0, widths, 20, 1003, ref);
  const double secs = seconds_since(t0);
  Outcome o;
  o.passed = std::abs(t.slope_V + 0.5) <= 0.15 && std::abs(t.slope_G + 0.5) <= 0.15 && secs < 300;
  o.summary = fmt("m = 2^7..2^13, 20 trials, 1e5 samples: slope V %.3f, slope G %.3f (-0.5 +- 0.15); %.1f s (limit "
                  "300 s)",
                  t.slope_V, t.slope_G, secs);
  o.info.push_back(fmt("reference stderr_max %.3g", t.aux_stderr_max));
  return o;
}

Outcome c11_boundary_bound() {
  const Eigen::Index n = 8, m = 10000;
  const double R = 0.01, alpha = 1.0;
  const double bound = std::sqrt(2.0) * m * R / (std::sqrt(M_PI) * alpha) + 16.0 * std::log(n / 0.05) / 3.0;
  std::size_t worst = 0, over = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset data = generate_dataset(n, 50, derive_seed(1101, seed), TargetMode::uniform);
    const BoundarySets s = boundary_sets(init_params(50, m, alpha, derive_seed(1102, seed)), data, R);
    for (auto c : s.cardinality) {
      worst = std::max(worst, c);
      if (static_cast<double>(c) > bound) ++over;
    }
  }
  return {over == 0, fmt("n=8, 50 seeds: max |S_i| = %zu, bound %.2f, exceedances %zu", worst, bound, over)};
}

Outcome c12_aux_positivity() {
  double worst = std::numeric_limits<double>::infinity();
  double worst_entrywise = worst;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const Dataset data = generate_dataset(8, 10, derive_seed(1201, t), TargetMode::uniform);
    const AuxEstimate aux = estimate_aux(data, 1.0, kDefaultAuxSamples, derive_seed(1202, t));
    worst = std::min({worst, aux.lambda0_hat / (3 * aux.lambda0_stderr), aux.mu0_hat / (3 * aux.mu0_stderr)});
    worst_entrywise = std::min({worst_entrywise, aux.lambda0_hat / (3 * aux.V_stderr.maxCoeff()),
                                aux.mu0_hat / (3 * aux.G_stderr.maxCoeff()), aux.mu0_hat / (3 * aux.stderr_max)});
  }
  const double d = 10;
  const Dataset one = generate_dataset(1, 10, 1203, TargetMode::uniform);
  const AuxEstimate a = estimate_aux(one, 1.0, kDefaultAuxSamples, 1204);
  const double zv = std::abs(a.V_inf(0, 0) - oracle::v_inf_single(d)) / a.V_stderr(0, 0);
  const double zg = std::abs(a.G_inf(0, 0) - oracle::g_inf_single(d)) / a.G_stderr(0, 0);
  Outcome o{worst > 1.0 && zv <= 3.0 && zg <= 3.0,
            fmt("10 datasets: min(lambda0/(3 se), mu0/(3 se)) = %.2f (must exceed 1); single point |V-(1-1/d)/2| = "
                "%.2f stderr, |G-1/(2d)| = %.2f stderr (limit 3)",
                worst, zv, zg)};
  o.info.push_back(fmt("against the largest entrywise stderr instead of the eigenvalue stderr: min ratio %.2f",
                       worst_entrywise));
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome c13_determinism() {
  const std::filesystem::path root = std::filesystem::temp_directory_path() / "wnntk_acceptance_determinism";
  std::filesystem::remove_all(root);
  cli::RunOptions o;
  o.config = WNNTK_SOURCE_DIR "/configs/desk.json";
  o.out_dir = root / "a";
  const int ca = cli::cmd_train(o);
  o.out_dir = root / "b";
  const int cb = cli::cmd_train(o);
  bool same = ca == 0 && cb == 0;
  std::size_t bytes = 0;
  for (const char* f : {"trace.csv", "summary.json"}) {
    const std::string a = slurp(root / "a" / f), b = slurp(root / "b" / f);
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  std::filesystem::remove_all(root);
  return {same, fmt("two train runs of configs/desk.json: exit %d/%d, outputs byte-identical: %s (%zu bytes)", ca, cb,
                    same ? "yes" : "no", bytes)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"kernel decomposition identity", c1_kernel_decomposition},
      {"alpha-independence at init", c2_alpha_independence},
      {"norm-growth law", c3_norm_growth},
      {"gradient orthogonality and oracle", c4_gradients},
      {"factorization identity", c5_factorization},
      {"linear convergence, V-regime", c6_v_regime},
      {"G-regime rate independent of alpha", c7_g_regime},
      {"eigenvalue floor", c8_eigen_floor},
      {"primary/residual decomposition", c9_decomposition},
      {"concentration rate", c10_concentration},
      {"boundary set cardinality bound", c11_boundary_bound},
      {"auxiliary kernel positivity", c12_aux_positivity},
      {"determinism", c13_determinism},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoul(argv[i]));
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);

  std::size_t failed = 0;
  for (std::size_t id : selected) {
    if (id < 1 || id > criteria.size()) {
      std::fprintf(stderr, "unknown criterion %zu\n", id);
      return 2;
    }
    const auto& [name, fn] = criteria[id - 1];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.summary = std::string("exception: ") + e.what();
    }
    failed += !o.passed;
    std::printf("%s  C%02zu  %s: %s\n", o.passed ? "PASS" : "FAIL", id, name, o.summary.c_str());
    for (const auto& line : o.info) std::printf("            %s\n", line.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", selected.size() - failed, selected.size());
  return failed == 0 ? 0 : 1;
}
