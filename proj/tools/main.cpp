#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/experiment.hpp"

using namespace wnntk;
using namespace wnntk::cli;

namespace {

void add_run_options(CLI::App* sub, RunOptions& o) {
  sub->add_option("config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "output directory (overrides output_dir)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wnntk: weight-normalized two-layer ReLU networks and their tangent kernels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", build_id());

  GenDataOptions gen;
  std::string target_mode = "uniform";
  auto* gen_cmd = app.add_subcommand("gen-data", "sample a dataset on the unit sphere");
  gen_cmd->add_option("--n", gen.n, "number of points")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--d", gen.d, "input dimension")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->required();
  gen_cmd->add_option("--target-mode", target_mode, "uniform | teacher")
      ->check(CLI::IsMember({"uniform", "teacher"}));
  gen_cmd->add_option("--out", gen.out, "output JSON path");

  RunOptions train_opts;
  add_run_options(app.add_subcommand("train", "gradient descent run: trace.csv and summary.json"), train_opts);

  KernelsOptions kernel_opts;
  auto* kernels_cmd = app.add_subcommand("kernels", "dump V, G, H and Lambda for a state");
  add_run_options(kernels_cmd, kernel_opts);
  kernels_cmd->add_option("--steps", kernel_opts.steps, "GD steps taken before the dump");

  RunOptions aux_opts;
  add_run_options(app.add_subcommand("aux", "Monte-Carlo estimate of V_inf and G_inf"), aux_opts);

  SweepOptions sweep_opts;
  auto* sweep_cmd = app.add_subcommand("sweep", "alpha x m grid of training runs");
  add_run_options(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--jobs", sweep_opts.jobs, "worker threads")->check(CLI::PositiveNumber);

  RunOptions decompose_opts;
  add_run_options(app.add_subcommand("decompose", "per-step primary/residual split"), decompose_opts);

  VerifyCommandOptions verify_opts;
  bool full = false;
  std::string fault;
  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  verify_cmd->add_flag("--full", full, "run every check, including concentration");
  verify_cmd->add_flag("--quick", "stop at the first failure (default)");
  verify_cmd->add_option("--seed", verify_opts.verify.seed, "master seed");
  verify_cmd->add_option("--report", verify_opts.report, "write the JSON report here");
  verify_cmd->add_option("--inject-fault", fault, "negative control")->check(CLI::IsMember({"kernel-scaling"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*gen_cmd) {
    gen.target_mode = parse_target_mode(target_mode);
    return cmd_gen_data(gen);
  }
  if (app.got_subcommand("train")) return cmd_train(train_opts);
  if (*kernels_cmd) return cmd_kernels(kernel_opts);
  if (app.got_subcommand("aux")) return cmd_aux(aux_opts);
  if (*sweep_cmd) return cmd_sweep(sweep_opts);
  if (app.got_subcommand("decompose")) return cmd_decompose(decompose_opts);
  if (*verify_cmd) {
    verify_opts.verify.mode = full ? VerifyMode::full : VerifyMode::quick;
    if (!fault.empty()) verify_opts.verify.inject_fault = fault;
    return cmd_verify(verify_opts);
  }
  return kExitConfig;
}
