#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "experiment.hpp"
#include "wnntk/kernels.hpp"
#include "wnntk/report.hpp"
#include "wnntk/rng.hpp"
#include "wnntk/trainer.hpp"

namespace wnntk::cli {

namespace fs = std::filesystem;

namespace {

nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void print_validation(const ValidationReport& report) {
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& v : report.violations) std::cerr << "violation: " << v << '\n';
  std::cout << "validation: " << (report.ok() ? "ok" : "FAILED") << '\n';
}

/// Config, dataset and output directory of a config-driven run. Everything
/// here is checked up front so a configuration error writes nothing.
struct Prepared {
  ExperimentConfig config;
  Dataset data;
  fs::path out_dir;
};

Prepared prepare(const RunOptions& options) {
  Prepared p;
  p.config = load_config(options.config);
  try {
    p.data = resolve_dataset(p.config);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  const ValidationReport report = validate_dataset(p.data);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (!report.ok()) {
    std::string msg = "dataset fails validation:";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw ConfigError(msg);
  }
  p.out_dir = options.out_dir ? *options.out_dir : p.config.output_dir;
  if (fs::exists(p.out_dir) && !fs::is_directory(p.out_dir)) {
    throw ConfigError("output_dir is not a directory: " + p.out_dir.string());
  }
  return p;
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged at step " << e.step() << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

WNParams initial_params(const Prepared& p) {
  return init_params(p.data.d(), p.config.model.m, p.config.model.alpha, p.config.params_seed());
}

AuxEstimate run_aux(const Prepared& p) {
  return estimate_aux(p.data, p.config.model.alpha, p.config.mc_samples, p.config.aux_seed());
}

}  // namespace

int cmd_gen_data(const GenDataOptions& o) {
  return guarded([&] {
    if (o.n < 1 || o.d < 1) throw ConfigError("n and d must be positive");
    const Dataset data = generate_dataset(o.n, o.d, o.seed, o.target_mode);
    const ValidationReport report = validate_dataset(data);
    print_validation(report);
    if (!report.ok()) return kExitFailure;
    const nlohmann::json flags = {{"n", o.n}, {"d", o.d}, {"seed", o.seed}, {"target_mode", to_string(o.target_mode)}};
    nlohmann::json j = to_json(data);
    j["metadata"] = {{"config_hash", config_hash(flags)},
                     {"seed", o.seed},
                     {"rng", std::string(Rng::kName)},
                     {"build_id", build_id()}};
    if (o.out.has_parent_path()) make_out_dir(o.out.parent_path());
    write_json(o.out, j);
    std::cout << "wrote " << o.out.string() << '\n';
    return kExitOk;
  });
}

int cmd_train(const RunOptions& options) {
  return guarded([&] {
    const Prepared p = prepare(options);
    const WNParams params = initial_params(p);
    std::optional<AuxEstimate> aux;
    if (p.config.train.mode == TrainMode::wn) aux = run_aux(p);
    const TrainTrace trace = train(params, p.data, p.config.train, aux ? &*aux : nullptr);

    const auto& first = trace.records.front();
    const auto& last = trace.records.back();
    nlohmann::json summary = {
        {"metadata", provenance_json(p.config)},
        {"mode", to_string(p.config.train.mode)},
        {"regime", to_string(p.config.train.regime)},
        {"n", p.data.n()},
        {"d", p.data.d()},
        {"m", params.m()},
        {"alpha", params.alpha},
        {"eta", trace.eta},
        {"steps", last.step},
        {"initial_loss", number(first.loss)},
        {"final_loss", number(last.loss)},
        {"final_loss_ratio", number(last.err_sq / first.err_sq)},
        {"measured_rate", number(contraction_factor(trace, last.step))},
        {"lmin_lambda0", number(first.lmin_lambda)},
        {"boundary_radius", number(trace.boundary_radius)},
        {"radius_violations", trace.radius_violations},
    };
    if (aux) {
      summary["aux"] = {{"lambda0_hat", aux->lambda0_hat},
                        {"mu0_hat", aux->mu0_hat},
                        {"lambda0_stderr", aux->lambda0_stderr},
                        {"mu0_stderr", aux->mu0_stderr},
                        {"stderr_max", aux->stderr_max},
                        {"samples", aux->samples}};
      summary["theory"] = to_json(theory_report(trace, *aux));
    }

    make_out_dir(p.out_dir);
    write_trace_csv(trace, p.out_dir / "trace.csv", provenance_lines(p.config));
    write_json(p.out_dir / "summary.json", summary);
    std::cout << "final/initial squared error " << last.err_sq / first.err_sq << " after " << last.step
              << " steps; wrote " << (p.out_dir / "trace.csv").string() << '\n';
    return kExitOk;
  });
}

int cmd_kernels(const KernelsOptions& options) {
  return guarded([&] {
    const Prepared p = prepare(options);
    WNParams params = initial_params(p);
    double eta = 0.0;
    if (options.steps > 0) {
      eta = p.config.train.eta ? *p.config.train.eta
                               : step_size_auto(kernel_set(params, p.data), p.config.train.regime);
      for (std::size_t s = 0; s < options.steps; ++s) params = gd_step(params, p.data, eta);
    }
    const KernelSet ks = kernel_set(params, p.data);
    nlohmann::json j = to_json(ks);
    j["metadata"] = provenance_json(p.config);
    j["steps"] = options.steps;
    j["eta"] = eta;

    auto preamble = provenance_lines(p.config);
    preamble.push_back("steps=" + std::to_string(options.steps));
    make_out_dir(p.out_dir);
    write_kernel_csv(ks, p.out_dir / "kernels.csv", preamble);
    write_json(p.out_dir / "kernels.json", j);
    std::cout << "lambda_min(Lambda)=" << ks.lambda.lambda_min << " ||Lambda||=" << ks.lambda.spectral_norm << '\n';
    return kExitOk;
  });
}

int cmd_aux(const RunOptions& options) {
  return guarded([&] {
    const Prepared p = prepare(options);
    const AuxEstimate aux = run_aux(p);
    nlohmann::json j = to_json(aux);
    j["metadata"] = provenance_json(p.config);
    make_out_dir(p.out_dir);
    write_json(p.out_dir / "aux.json", j);
    std::cout << "lambda0_hat=" << aux.lambda0_hat << " (stderr " << aux.lambda0_stderr << ") mu0_hat=" << aux.mu0_hat
              << " (stderr " << aux.mu0_stderr << ")\n";
    return kExitOk;
  });
}

namespace {

struct SweepCell {
  double alpha = 0.0;
  Eigen::Index m = 0;
  std::uint64_t seed = 0;
  double rate = kNaN;
  double lmin_lambda0 = kNaN;
  double drift = kNaN;
  double eta = kNaN;
  bool diverged = false;
  bool alpha_star = false;
  std::string error;
  std::optional<TrainTrace> trace;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

int cmd_sweep(const SweepOptions& options) {
  return guarded([&] {
    const Prepared p = prepare(options);
    if (!p.config.sweep) throw ConfigError("config has no 'sweep' section");
    if (options.jobs < 1) throw ConfigError("--jobs must be positive");
    std::vector<double> alphas = p.config.sweep->alphas;
    if (std::find(alphas.begin(), alphas.end(), 1.0) == alphas.end()) alphas.push_back(1.0);

    std::vector<SweepCell> cells;
    for (Eigen::Index m : p.config.sweep->ms)
      for (double a : alphas) {
        SweepCell c;
        c.alpha = a;
        c.m = m;
        c.seed = derive_seed(p.config.seed, 1000 + cells.size());
        cells.push_back(c);
      }

    const std::size_t window = std::min<std::size_t>(50, p.config.train.steps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        SweepCell& c = cells[i];
        try {
          const WNParams params = init_params(p.data.d(), c.m, c.alpha, c.seed);
          TrainTrace t = train(params, p.data, p.config.train);
          c.eta = t.eta;
          c.lmin_lambda0 = t.records.front().lmin_lambda;
          c.rate = contraction_factor(t, window);
          c.drift = t.records.back().max_drift_v;
          c.trace = std::move(t);
        } catch (const DivergenceError& e) {
          c.diverged = true;
          c.error = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    const unsigned jobs = std::min<unsigned>(options.jobs, static_cast<unsigned>(cells.size()));
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // alpha* per width: smallest measured rate among converged cells.
    for (Eigen::Index m : p.config.sweep->ms) {
      SweepCell* best = nullptr;
      for (auto& c : cells)
        if (c.m == m && !c.diverged && (!best || c.rate < best->rate)) best = &c;
      if (best) best->alpha_star = true;
    }

    make_out_dir(p.out_dir / "cells");
    const auto preamble = provenance_lines(p.config);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!cells[i].trace) continue;
      auto lines = preamble;
      lines.push_back("cell=" + std::to_string(i) + " alpha=" + fmt(cells[i].alpha) + " m=" +
                      std::to_string(cells[i].m));
      write_trace_csv(*cells[i].trace, p.out_dir / "cells" / ("cell_" + std::to_string(i) + ".csv"), lines);
    }
    std::ofstream out(p.out_dir / "sweep.csv");
    if (!out) throw std::runtime_error("cannot write sweep.csv");
    for (const auto& line : preamble) out << "# " << line << '\n';
    out << "cell,alpha,m,rate,lmin_lambda0,drift,eta,diverged,alpha_star\n";
    std::size_t diverged = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      diverged += c.diverged;
      out << i << ',' << fmt(c.alpha) << ',' << c.m << ',' << fmt(c.rate) << ',' << fmt(c.lmin_lambda0) << ','
          << fmt(c.drift) << ',' << fmt(c.eta) << ',' << (c.diverged ? 1 : 0) << ',' << (c.alpha_star ? 1 : 0)
          << '\n';
      if (c.diverged) std::cerr << "cell " << i << " diverged: " << c.error << '\n';
    }
    std::cout << cells.size() << " cells (" << diverged << " diverged); wrote "
              << (p.out_dir / "sweep.csv").string() << '\n';
    return kExitOk;
  });
}

int cmd_decompose(const RunOptions& options) {
  return guarded([&] {
    const Prepared p = prepare(options);
    const WNParams params = initial_params(p);
    const DecomposedRun run = decompose_run(params, p.data, p.config.train);

    double partition = 0.0, primary = 0.0, ratio = 0.0;
    for (std::size_t s = 0; s < run.steps.size(); ++s) {
      const auto& st = run.steps[s];
      partition = std::max(partition, st.partition_error);
      primary = std::max(primary, st.primary_error);
      const double e = st.err.norm();
      if (e > 0.0 && run.lmin_lambda[s] > 0.0) ratio = std::max(ratio, st.r.norm() / (run.lmin_lambda[s] * e));
    }

    make_out_dir(p.out_dir);
    std::ofstream out(p.out_dir / "decomposition.csv");
    if (!out) throw std::runtime_error("cannot write decomposition.csv");
    for (const auto& line : provenance_lines(p.config)) out << "# " << line << '\n';
    out << "# eta=" << fmt(run.eta) << " radius=" << fmt(run.radius) << '\n';
    out << "step,i,aI,aII,bI,bII,p,r,S_card,partition_error,primary_error\n";
    for (std::size_t s = 0; s < run.steps.size(); ++s) {
      const auto& st = run.steps[s];
      for (Eigen::Index i = 0; i < st.p.size(); ++i) {
        out << s << ',' << i << ',' << fmt(st.aI(i)) << ',' << fmt(st.aII(i)) << ',' << fmt(st.bI(i)) << ','
            << fmt(st.bII(i)) << ',' << fmt(st.p(i)) << ',' << fmt(st.r(i)) << ','
            << st.S_cardinalities[static_cast<std::size_t>(i)] << ',' << fmt(st.partition_error) << ','
            << fmt(st.primary_error) << '\n';
      }
    }
    write_json(p.out_dir / "decomposition.json",
               {{"metadata", provenance_json(p.config)},
                {"eta", run.eta},
                {"radius", run.radius},
                {"steps", run.steps.size()},
                {"S_cardinality", run.sets.cardinality},
                {"max_partition_error", partition},
                {"max_primary_error", primary},
                {"max_residual_ratio", ratio}});
    std::cout << "max partition error " << partition << ", max primary error " << primary
              << ", max ||r||/(lmin ||f-y||) " << ratio << '\n';
    return kExitOk;
  });
}

int cmd_verify(const VerifyCommandOptions& options) {
  return guarded([&] {
    const VerifyReport report = run_verification(options.verify);
    for (const auto& c : report.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " threshold=" << c.threshold
                << "  " << c.detail << '\n';
    }
    const nlohmann::json j = to_json(report);
    if (options.report) {
      if (options.report->has_parent_path()) make_out_dir(options.report->parent_path());
      write_json(*options.report, j);
    } else {
      std::cout << j.dump() << '\n';
    }
    return report.passed() ? kExitOk : kExitFailure;
  });
}

}  // namespace wnntk::cli
