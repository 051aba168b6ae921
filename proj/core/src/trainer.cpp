#include "wnntk/trainer.hpp"

#include <cmath>
#include <cstdio>

namespace wnntk {

namespace {

double err_sq_of(const Vector& f, const Vector& y) { return (f - y).squaredNorm(); }

bool is_recorded(std::size_t s, std::size_t steps, std::size_t every) {
  return s % every == 0 || s == steps;
}

void check_divergence(double current, double initial, double factor, std::size_t step) {
  const double threshold = factor * std::max(initial, 1e-300);
  if (!std::isfinite(current) || current > threshold) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "training diverged at step %zu: loss %.6g exceeds %.3g x initial loss %.6g "
                  "(step size too large?)",
                  step, current, factor, initial);
    throw DivergenceError(buf, step);
  }
}

TrainTrace train_vanilla(const WNParams& params, const Dataset& data, const TrainConfig& config) {
  VanillaParams w = effective_weights(params);
  const VanillaParams w0 = w;
  const Matrix H0 = kernel_H(w0, data);
  const double eta = config.eta ? *config.eta : 1.0 / (3.0 * spectral_norm(H0));

  TrainTrace trace;
  trace.eta = eta;
  trace.alpha = params.alpha;
  trace.n = data.n();
  trace.m = params.m();
  trace.mode = TrainMode::vanilla;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.m()));
  double loss0 = 0.0;
  double err0 = 0.0;
  double lmin0 = 0.0;
  for (std::size_t s = 0;; ++s) {
    const Vector f = predict(w, data.X);
    const double l = loss(f, data.y);
    if (s == 0) loss0 = l;
    check_divergence(l, loss0, config.divergence_factor, s);
    if (is_recorded(s, config.steps, config.record_every)) {
      TrainRecord rec;
      rec.step = s;
      rec.time = static_cast<double>(s) * eta;
      rec.loss = l;
      rec.err_sq = err_sq_of(f, data.y);
      const Spectrum sh = spectrum(kernel_H(w, data));
      rec.lmin_lambda = sh.lambda_min;
      rec.lambda_norm = sh.spectral_norm;
      rec.max_drift_v = (w.W - w0.W).rowwise().norm().maxCoeff();
      rec.min_norm_v = w.W.rowwise().norm().minCoeff();
      if (s == 0) {
        err0 = rec.err_sq;
        lmin0 = rec.lmin_lambda;
      }
      rec.pred_bound = std::pow(1.0 - eta * lmin0, static_cast<double>(s)) * err0;
      trace.records.push_back(rec);
    }
    if (s == config.steps) break;
    const Vector r = f - data.y;
    const Matrix pre = data.X * w.W.transpose();
    const Matrix Q = r.asDiagonal() * pre.unaryExpr([](double z) { return active(z) ? 1.0 : 0.0; });
    const Matrix dW = (scale * w.c).asDiagonal() * (Q.transpose() * data.X);
    w.W -= eta * dW;
  }
  trace.final_vanilla = w;
  return trace;
}

}  // namespace

std::string to_string(TrainMode mode) { return mode == TrainMode::wn ? "wn" : "vanilla"; }

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::v_dom: return "v_dom";
    case Regime::g_dom: return "g_dom";
    case Regime::general: return "general";
  }
  return "general";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "wn") return TrainMode::wn;
  if (name == "vanilla") return TrainMode::vanilla;
  throw std::invalid_argument("unknown train mode '" + name + "'");
}

Regime parse_regime(const std::string& name) {
  if (name == "v_dom") return Regime::v_dom;
  if (name == "g_dom") return Regime::g_dom;
  if (name == "general") return Regime::general;
  throw std::invalid_argument("unknown regime '" + name + "'");
}

void TrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
  if (record_every < 1) throw std::invalid_argument("TrainConfig: record_every must be >= 1");
  if (eta && !(*eta > 0.0)) throw std::invalid_argument("TrainConfig: eta must be positive");
  if (boundary_radius && !(*boundary_radius >= 0.0)) {
    throw std::invalid_argument("TrainConfig: boundary_radius must be >= 0");
  }
  if (!(divergence_factor > 1.0)) {
    throw std::invalid_argument("TrainConfig: divergence_factor must exceed 1");
  }
}

WNParams gd_step(const WNParams& params, const GradientSet& grad, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("gd_step: eta must be positive");
  WNParams next = params;
  next.V -= eta * grad.dV;
  next.g -= eta * grad.dg;
  // Orthogonal updates only grow ||v_k||, so this cannot fire for valid input.
  for (Eigen::Index k = 0; k < next.m(); ++k) {
    if (!(next.V.row(k).squaredNorm() > 0.0)) {
      throw DegenerateDirectionError("gd_step produced a zero direction v_" + std::to_string(k));
    }
  }
  return next;
}

WNParams gd_step(const WNParams& params, const Dataset& data, double eta) {
  return gd_step(params, grad_loss(params, data), eta);
}

VanillaParams gd_step_vanilla(const VanillaParams& params, const Dataset& data, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("gd_step_vanilla: eta must be positive");
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.m()));
  const Vector r = predict(params, data.X) - data.y;
  const Matrix pre = data.X * params.W.transpose();
  const Matrix Q = r.asDiagonal() * pre.unaryExpr([](double z) { return active(z) ? 1.0 : 0.0; });
  VanillaParams next = params;
  next.W -= eta * ((scale * params.c).asDiagonal() * (Q.transpose() * data.X));
  return next;
}

double step_size_auto(const KernelSet& kernels, Regime regime) {
  const double norm = regime == Regime::v_dom ? kernels.v.spectral_norm : kernels.lambda.spectral_norm;
  if (!(norm > 0.0)) throw std::invalid_argument("step_size_auto: zero spectral norm");
  if (regime == Regime::v_dom) return kernels.alpha * kernels.alpha / (3.0 * norm);
  return 1.0 / (3.0 * norm);
}

double step_size_auto(const AuxEstimate& aux, double alpha, Regime regime) {
  if (regime == Regime::v_dom) {
    if (!(aux.v_inf_norm > 0.0)) throw std::invalid_argument("step_size_auto: zero spectral norm");
    return alpha * alpha / (3.0 * aux.v_inf_norm);
  }
  const double norm = spectral_norm(aux.V_inf / (alpha * alpha) + aux.G_inf);
  if (!(norm > 0.0)) throw std::invalid_argument("step_size_auto: zero spectral norm");
  return 1.0 / (3.0 * norm);
}

double max_direction_drift(const WNParams& params, const WNParams& params0) {
  return (params.V - params0.V).rowwise().norm().maxCoeff();
}

double max_magnitude_drift(const WNParams& params, const WNParams& params0) {
  return (params.g - params0.g).cwiseAbs().maxCoeff();
}

TrainTrace train(const WNParams& params, const Dataset& data, const TrainConfig& config,
                 const AuxEstimate* aux) {
  config.validate();
  params.validate();
  if (params.d() != data.d()) throw std::invalid_argument("train: parameter and data dimensions differ");
  if (config.mode == TrainMode::vanilla) return train_vanilla(params, data, config);

  const KernelSet k0 = kernel_set(params, data);
  double eta = 0.0;
  if (config.eta) {
    eta = *config.eta;
  } else if (config.regime == Regime::v_dom && aux != nullptr) {
    eta = step_size_auto(*aux, params.alpha, Regime::v_dom);
  } else {
    eta = step_size_auto(k0, config.regime);
  }

  TrainTrace trace;
  trace.eta = eta;
  trace.alpha = params.alpha;
  trace.n = data.n();
  trace.m = params.m();
  trace.mode = TrainMode::wn;

  BoundarySets sets;
  if (config.decompose) {
    const double radius = config.boundary_radius ? *config.boundary_radius
                                                 : 1.1 * max_drift_over_run(params, data, eta, config.steps,
                                                                            config.divergence_factor);
    sets = boundary_sets(params, data, radius);
    trace.boundary_radius = radius;
  }

  const double alpha2 = params.alpha * params.alpha;
  const double lambda0 = aux ? aux->lambda0_conservative() : kNaN;
  const double mu0 = aux ? aux->mu0_conservative() : kNaN;
  const double lmin0 = k0.lambda.lambda_min;

  WNParams p = params;
  double loss0 = 0.0;
  double err0 = 0.0;
  for (std::size_t s = 0;; ++s) {
    const Vector f = predict(p, data.X);
    const double l = loss(f, data.y);
    if (s == 0) {
      loss0 = l;
      err0 = err_sq_of(f, data.y);
    }
    check_divergence(l, loss0, config.divergence_factor, s);
    const bool record = is_recorded(s, config.steps, config.record_every);
    if (record) {
      TrainRecord rec;
      rec.step = s;
      rec.time = static_cast<double>(s) * eta;
      rec.loss = l;
      rec.err_sq = err_sq_of(f, data.y);
      const KernelSet ks = s == 0 ? k0 : kernel_set(p, data);
      rec.lmin_lambda = ks.lambda.lambda_min;
      rec.lambda_norm = ks.lambda.spectral_norm;
      rec.lmin_v_scaled = ks.v.lambda_min / alpha2;
      rec.lmin_g = ks.g.lambda_min;
      rec.max_drift_v = max_direction_drift(p, params);
      rec.max_drift_g = max_magnitude_drift(p, params);
      rec.min_norm_v = p.direction_norms().minCoeff();
      const double sd = static_cast<double>(s);
      rec.pred_bound = std::pow(1.0 - eta * lmin0, sd) * err0;
      if (aux) {
        rec.bound_v = std::pow(1.0 - eta * lambda0 / (2.0 * alpha2), sd) * err0;
        rec.bound_g = std::pow(1.0 - eta * mu0 / 2.0, sd) * err0;
      }
      trace.records.push_back(rec);
    }
    if (s == config.steps) break;
    WNParams next = gd_step(p, data, eta);
    if (record && config.decompose) {
      const double reach = std::max(max_direction_drift(p, params), max_direction_drift(next, params));
      if (reach <= sets.radius) {
        const StepDecomposition dec = decompose_step(p, next, params, data, sets, eta);
        trace.records.back().residual_norm = dec.r.norm();
        trace.records.back().primary_norm = dec.p.norm();
      } else {
        ++trace.radius_violations;
      }
    }
    p = std::move(next);
  }
  trace.final_params = std::move(p);
  return trace;
}

TrainTrace gradient_flow(const WNParams& params, const Dataset& data, double T, double dt,
                         std::size_t record_every) {
  if (!(T >= 0.0)) throw std::invalid_argument("gradient_flow: T must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("gradient_flow: dt must be positive");
  const double eta_auto = step_size_auto(kernel_set(params, data), Regime::general);
  if (dt > eta_auto / 10.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("gradient_flow: dt must not exceed step_size_auto/10");
  }
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  if (steps == 0) {
    TrainConfig cfg;
    cfg.eta = dt;
    cfg.steps = 1;
    cfg.record_every = 1;
    TrainTrace trace = train(params, data, cfg);
    trace.records.resize(1);
    trace.final_params = params;
    return trace;
  }
  TrainConfig cfg;
  cfg.eta = dt;
  cfg.steps = steps;
  cfg.record_every = record_every;
  return train(params, data, cfg);
}

StepDecomposition decompose_step(const WNParams& params_s, const WNParams& params_next,
                                 const WNParams& params0, const Dataset& data,
                                 const BoundarySets& sets, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("decompose_step: eta must be positive");
  const Eigen::Index n = data.n();
  const Eigen::Index m = params_s.m();
  if (sets.member.rows() != n || sets.member.cols() != m) {
    throw std::invalid_argument("decompose_step: boundary sets do not match data/width");
  }
  const double reach = std::max(max_direction_drift(params_s, params0),
                                max_direction_drift(params_next, params0));
  if (reach > sets.radius) {
    throw std::invalid_argument("decompose_step: R is smaller than the direction drift");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const Vector n0 = params_s.direction_norms();
  const Vector n1 = params_next.direction_norms();
  const Vector coef0 = params_s.c.cwiseProduct(params_s.g).cwiseQuotient(n0);
  const Vector coef1 = params_next.c.cwiseProduct(params_next.g).cwiseQuotient(n1);
  const Vector coef_mix = params_next.c.cwiseProduct(params_next.g).cwiseQuotient(n0);

  const Matrix relu0 = (data.X * params_s.V.transpose()).cwiseMax(0.0);
  const Matrix relu1 = (data.X * params_next.V.transpose()).cwiseMax(0.0);
  const Matrix in_set = sets.member.cast<double>().matrix();
  const Matrix change = relu1 - relu0;

  StepDecomposition out;
  out.aI = scale * (relu0 * (coef_mix - coef0));
  out.aII = scale * (relu0 * (coef1 - coef_mix));
  out.bI = scale * (change.cwiseProduct(Matrix::Ones(n, m) - in_set) * coef1);
  out.bII = scale * (change.cwiseProduct(in_set) * coef1);
  out.p = (out.aI + out.bI) / eta;
  out.r = (out.aII + out.bII) / eta;
  out.S_cardinalities = sets.cardinality;

  const Vector f0 = predict(params_s, data.X);
  const Vector f1 = predict(params_next, data.X);
  out.f_diff = f1 - f0;
  out.err = f0 - data.y;

  const SurrogateKernels sur = surrogate_kernels(params_s, params_next, data, sets);
  const double alpha2 = params_s.alpha * params_s.alpha;
  out.Lambda_step = kernel_G(params_s, data) + (sur.V_tilde - sur.V_tilde_perp) / alpha2;

  const Vector partition = out.aI + out.aII + out.bI + out.bII;
  out.partition_error = (partition - out.f_diff).cwiseAbs().maxCoeff();
  out.eta_error = (eta * (out.p + out.r) - out.f_diff).cwiseAbs().maxCoeff();
  out.primary_error = (out.p + out.Lambda_step * out.err).cwiseAbs().maxCoeff();

  const double f_scale = std::max(1.0, std::max(f0.cwiseAbs().maxCoeff(), f1.cwiseAbs().maxCoeff()));
  const double p_scale = std::max(1.0, out.p.cwiseAbs().maxCoeff());
  if (out.partition_error > 1e-8 * f_scale || out.primary_error > 1e-8 * p_scale) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "decompose_step: identity violated (partition %.3g, primary %.3g)",
                  out.partition_error, out.primary_error);
    throw std::logic_error(buf);
  }
  return out;
}

double max_drift_over_run(const WNParams& params, const Dataset& data, double eta,
                          std::size_t steps, double divergence_factor) {
  WNParams p = params;
  const double loss0 = loss(predict(p, data.X), data.y);
  double worst = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    p = gd_step(p, data, eta);
    worst = std::max(worst, max_direction_drift(p, params));
    check_divergence(loss(predict(p, data.X), data.y), loss0, divergence_factor, s + 1);
  }
  return worst;
}

DecomposedRun decompose_run(const WNParams& params, const Dataset& data,
                            const TrainConfig& config) {
  config.validate();
  params.validate();
  DecomposedRun run;
  run.eta = config.eta ? *config.eta : step_size_auto(kernel_set(params, data), config.regime);
  run.radius = config.boundary_radius
                   ? *config.boundary_radius
                   : 1.1 * max_drift_over_run(params, data, run.eta, config.steps,
                                              config.divergence_factor);
  run.sets = boundary_sets(params, data, run.radius);
  WNParams p = params;
  for (std::size_t s = 0; s < config.steps; ++s) {
    WNParams next = gd_step(p, data, run.eta);
    run.steps.push_back(decompose_step(p, next, params, data, run.sets, run.eta));
    run.lmin_lambda.push_back(kernel_set(p, data).lambda.lambda_min);
    p = std::move(next);
  }
  return run;
}

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path,
                     const std::vector<std::string>& preamble) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write " + path.string());
  for (const auto& line : preamble) std::fprintf(f, "# %s\n", line.c_str());
  std::fputs("step,loss,pred_err_sq,lmin_lambda,lmin_v_scaled,lmin_g,max_drift_v,max_drift_g,"
             "min_norm_v,residual_norm,bound_v_regime,bound_g_regime\n",
             f);
  for (const auto& r : trace.records) {
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                 r.loss, r.err_sq, r.lmin_lambda, r.lmin_v_scaled, r.lmin_g, r.max_drift_v,
                 r.max_drift_g, r.min_norm_v, r.residual_norm, r.bound_v, r.bound_g);
  }
  std::fclose(f);
}

double contraction_factor(const TrainTrace& trace, std::size_t window) {
  if (trace.records.empty() || window == 0) return kNaN;
  const TrainRecord& first = trace.records.front();
  const TrainRecord* last = nullptr;
  for (const auto& r : trace.records) {
    if (r.step <= first.step + window) last = &r;
  }
  if (last == nullptr || last->step == first.step) return kNaN;
  const double steps = static_cast<double>(last->step - first.step);
  return std::pow(last->err_sq / first.err_sq, 1.0 / steps);
}

}  // namespace wnntk
