#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wnntk/boundary.hpp"
#include "wnntk/dataset.hpp"
#include "wnntk/linalg.hpp"
#include "wnntk/model.hpp"

namespace wnntk {

/// Direction kernel
///   V_ij = (1/m) sum_k (alpha c_k g_k/||v_k||)^2 <x_i^perp, x_j^perp> 1_ik 1_jk
/// with perp taken against v_k.
Matrix kernel_V(const WNParams& params, const Dataset& data);

/// Magnitude kernel G_ij = (1/m) sum_k relu(v_k^T x_i) relu(v_k^T x_j)/||v_k||^2.
Matrix kernel_G(const WNParams& params, const Dataset& data);

/// Un-normalized NTK H_ij = (1/m) sum_k x_i^T x_j 1_ik 1_jk.
Matrix kernel_H(const VanillaParams& params, const Dataset& data);

struct KernelSet {
  Matrix V, G, H, Lambda;
  Spectrum v, g, h, lambda;
  double alpha = 1.0;
};

/// V, G, H (at the effective weights) and Lambda = V/alpha^2 + G.
KernelSet kernel_set(const WNParams& params, const Dataset& data);

/// Lambda assembled as (J S^T)(J S^T)^T from the vanilla Jacobian J at the
/// effective weights and the reparametrization Jacobian
///   S_k = [ (g_k/||v_k||)(I - v_k v_k^T/||v_k||^2), v_k/||v_k|| ].
/// Independent of kernel_V / kernel_G.
Matrix lambda_via_factorization(const WNParams& params, const Dataset& data);

/// Monte-Carlo estimates of the population kernels
///   V_inf_ij = E <x_i^perp, x_j^perp> 1 1,  G_inf_ij = E <x_i^par, x_j^par> 1 1
/// over v ~ N(0, alpha^2 I).
struct AuxEstimate {
  Matrix V_inf, G_inf;
  Matrix V_stderr, G_stderr;
  double lambda0_hat = 0.0;
  double mu0_hat = 0.0;
  double v_inf_norm = 0.0;
  double g_inf_norm = 0.0;
  std::size_t samples = 0;
  double stderr_max = 0.0;      // largest entrywise standard error of V_inf, G_inf
  double lambda0_stderr = 0.0;  // standard error of lambda0_hat, first order in the eigenvector
  double mu0_stderr = 0.0;
  double alpha = 1.0;

  /// Estimates less three standard errors; what downstream bounds consume.
  double lambda0_conservative() const { return lambda0_hat - 3.0 * lambda0_stderr; }
  double mu0_conservative() const { return mu0_hat - 3.0 * mu0_stderr; }
};

inline constexpr std::size_t kDefaultAuxSamples = 100000;

/// Throws std::invalid_argument for samples < 1000.
AuxEstimate estimate_aux(const Dataset& data, double alpha,
                         std::size_t samples, std::uint64_t seed);

/// V_hat: V with unit scaling in place of (alpha c g/||v||)^2,
/// V_tilde: cross-step scaling (alpha c g(s+1)/||v(s+1)||)(alpha c g(s)/||v(s)||),
/// V_tilde_perp: V_tilde restricted per row i to k in S_i.
struct SurrogateKernels {
  Matrix V_hat;
  Matrix V_tilde;
  Matrix V_tilde_perp;
};

Matrix surrogate_V_hat(const WNParams& params, const Dataset& data);

/// Pass BoundarySets::empty for a zero V_tilde_perp.
SurrogateKernels surrogate_kernels(const WNParams& params_s,
                                   const WNParams& params_next,
                                   const Dataset& data,
                                   const BoundarySets& sets);

struct ConcentrationRow {
  Eigen::Index m = 0;
  double mean_dev_V = 0.0;  // mean ||V(0) - V_inf||_F over trials
  double mean_dev_G = 0.0;
  double sd_dev_V = 0.0;
  double sd_dev_G = 0.0;
};

struct ConcentrationTable {
  std::vector<ConcentrationRow> rows;
  double slope_V = 0.0;  // least-squares slope of log mean_dev vs log m
  double slope_G = 0.0;
  std::size_t trials = 0;
  double aux_stderr_max = 0.0;
};

/// Deviation of freshly initialized V(0), G(0) from a shared Monte-Carlo
/// reference across widths.
ConcentrationTable concentration_study(const Dataset& data, double alpha,
                                       const std::vector<Eigen::Index>& widths,
                                       std::size_t trials, std::uint64_t seed,
                                       const AuxEstimate& reference);

/// Row-major CSV with header "i,j,V,G,H,Lambda", preceded by `preamble`
/// lines each prefixed with "# ".
void write_kernel_csv(const KernelSet& kernels, const std::filesystem::path& path,
                      const std::vector<std::string>& preamble = {});
nlohmann::json to_json(const KernelSet& kernels);
nlohmann::json to_json(const AuxEstimate& aux);
nlohmann::json matrix_to_json(const Matrix& M);

}  // namespace wnntk
