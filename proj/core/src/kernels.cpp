#include "wnntk/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <tuple>

#include "wnntk/rng.hpp"

namespace wnntk {

namespace {

Vector checked_norms(const WNParams& params) {
  const Vector norms = params.direction_norms();
  for (Eigen::Index k = 0; k < norms.size(); ++k) {
    if (!(norms(k) > 0.0)) {
      throw DegenerateDirectionError("direction v_" + std::to_string(k) + " has zero norm");
    }
  }
  return norms;
}

Matrix indicator(const Matrix& pre) {
  return pre.unaryExpr([](double z) { return active(z) ? 1.0 : 0.0; });
}

// (1/m) sum_k A_ik B_jk <x_i^perp, x_j^perp>, perp against the unit
// directions whose projections are P_ik = u_k^T x_i. Uses
// <x_i^perp, x_j^perp> = x_i^T x_j - P_ik P_jk.
Matrix orthogonal_gram(const Matrix& X, const Matrix& P, const Matrix& A, const Matrix& B) {
  const double m = static_cast<double>(P.cols());
  const Matrix inner = X * X.transpose();
  const Matrix AP = A.cwiseProduct(P);
  const Matrix BP = B.cwiseProduct(P);
  return (inner.cwiseProduct(A * B.transpose()) - AP * BP.transpose()) / m;
}

// Projections onto unit directions and the per-neuron scale alpha c g/||v||.
struct DirectionState {
  Vector norms;
  Matrix P;        // n x m, u_k^T x_i
  Matrix active;   // n x m, 1{v_k^T x_i >= 0}
  Vector scale;    // alpha c_k g_k / ||v_k||
};

DirectionState direction_state(const WNParams& params, const Dataset& data) {
  DirectionState s;
  s.norms = checked_norms(params);
  const Matrix pre = data.X * params.V.transpose();
  s.P = pre * s.norms.cwiseInverse().asDiagonal();
  s.active = indicator(pre);
  s.scale = params.alpha * params.c.cwiseProduct(params.g).cwiseQuotient(s.norms);
  return s;
}

void write_number(std::FILE* f, double x) { std::fprintf(f, "%.17g", x); }

}  // namespace

Matrix kernel_V(const WNParams& params, const Dataset& data) {
  const DirectionState s = direction_state(params, data);
  const Matrix A = s.active * s.scale.asDiagonal();
  return orthogonal_gram(data.X, s.P, A, A);
}

Matrix kernel_G(const WNParams& params, const Dataset& data) {
  const DirectionState s = direction_state(params, data);
  const Matrix R = s.P.cwiseMax(0.0);
  return R * R.transpose() / static_cast<double>(params.m());
}

Matrix kernel_H(const VanillaParams& params, const Dataset& data) {
  const Matrix B = indicator(data.X * params.W.transpose());
  const Matrix inner = data.X * data.X.transpose();
  return inner.cwiseProduct(B * B.transpose()) / static_cast<double>(params.m());
}

KernelSet kernel_set(const WNParams& params, const Dataset& data) {
  KernelSet ks;
  ks.alpha = params.alpha;
  ks.V = kernel_V(params, data);
  ks.G = kernel_G(params, data);
  ks.H = kernel_H(effective_weights(params), data);
  ks.Lambda = ks.V / (params.alpha * params.alpha) + ks.G;
  ks.v = spectrum(ks.V);
  ks.g = spectrum(ks.G);
  ks.h = spectrum(ks.H);
  ks.lambda = spectrum(ks.Lambda);
  return ks;
}

Matrix lambda_via_factorization(const WNParams& params, const Dataset& data) {
  const Eigen::Index n = data.n();
  const Eigen::Index m = params.m();
  const Eigen::Index d = params.d();
  const Vector norms = checked_norms(params);
  const VanillaParams vanilla = effective_weights(params);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));

  // K = J S^T, one (d+1)-column block per neuron.
  Matrix K = Matrix::Zero(n, m * (d + 1));
  for (Eigen::Index k = 0; k < m; ++k) {
    const Vector u = params.V.row(k).transpose() / norms(k);
    const Matrix projector = Matrix::Identity(d, d) - u * u.transpose();
    const Matrix Sk_v = (params.g(k) / norms(k)) * projector;  // symmetric d x d
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector x = data.X.row(i).transpose();
      if (!active(vanilla.W.row(k).dot(x))) continue;
      const Vector J = scale * params.c(k) * x;  // df_i/dw_k
      K.block(i, k * (d + 1), 1, d) = (Sk_v * J).transpose();
      K(i, k * (d + 1) + d) = u.dot(J);
    }
  }
  return K * K.transpose();
}

AuxEstimate estimate_aux(const Dataset& data, double alpha, std::size_t samples,
                         std::uint64_t seed) {
  if (samples < 1000) throw std::invalid_argument("estimate_aux: samples must be >= 1000");
  if (!(alpha > 0.0)) throw std::invalid_argument("estimate_aux: alpha must be positive");
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  constexpr Eigen::Index kBlock = 2048;

  const Matrix inner = data.X * data.X.transpose();
  // Replays the same unit directions for every pass over the samples.
  auto for_each_block = [&](auto&& body) {
    Rng rng(seed);
    Matrix U(d, kBlock);
    std::size_t done = 0;
    while (done < samples) {
      const Eigen::Index b = static_cast<Eigen::Index>(std::min<std::size_t>(kBlock, samples - done));
      for (Eigen::Index s = 0; s < b; ++s) {
        double norm = 0.0;
        while (norm == 0.0) {
          for (Eigen::Index j = 0; j < d; ++j) U(j, s) = alpha * rng.normal();
          norm = U.col(s).norm();
        }
        U.col(s) /= norm;
      }
      const Matrix P = data.X * U.leftCols(b);  // n x b
      body(P, indicator(P));
      done += static_cast<std::size_t>(b);
    }
  };

  Matrix sum_aa = Matrix::Zero(n, n);      // sum 1_i 1_j
  Matrix sum_app = Matrix::Zero(n, n);     // sum 1_i 1_j p_i p_j
  Matrix sum_ap2p2 = Matrix::Zero(n, n);   // sum 1_i 1_j p_i^2 p_j^2
  for_each_block([&](const Matrix& P, const Matrix& A) {
    const Matrix AP = A.cwiseProduct(P);
    const Matrix AP2 = AP.cwiseProduct(P);
    sum_aa.noalias() += A * A.transpose();
    sum_app.noalias() += AP * AP.transpose();
    sum_ap2p2.noalias() += AP2 * AP2.transpose();
  });

  const double N = static_cast<double>(samples);
  AuxEstimate aux;
  aux.samples = samples;
  aux.alpha = alpha;
  // Per-sample V term: 1_i 1_j (K_ij - p_i p_j); G term: 1_i 1_j p_i p_j.
  const Matrix sum_v = inner.cwiseProduct(sum_aa) - sum_app;
  const Matrix sum_v2 = inner.cwiseProduct(inner).cwiseProduct(sum_aa) -
                        2.0 * inner.cwiseProduct(sum_app) + sum_ap2p2;
  aux.V_inf = sum_v / N;
  aux.G_inf = sum_app / N;
  auto stderr_of = [N](const Matrix& mean, const Matrix& sumsq) {
    const Matrix var = ((sumsq - N * mean.cwiseProduct(mean)) / (N - 1.0)).cwiseMax(0.0);
    return Matrix((var / N).cwiseSqrt());
  };
  aux.V_stderr = stderr_of(aux.V_inf, sum_v2);
  aux.G_stderr = stderr_of(aux.G_inf, sum_ap2p2);
  aux.stderr_max = std::max(aux.V_stderr.maxCoeff(), aux.G_stderr.maxCoeff());

  Eigen::SelfAdjointEigenSolver<Matrix> ev(symmetrize(aux.V_inf));
  Eigen::SelfAdjointEigenSolver<Matrix> eg(symmetrize(aux.G_inf));
  const Vector uv = ev.eigenvectors().col(0);
  const Vector ug = eg.eigenvectors().col(0);
  // First-order error of lambda_min: spread of u^T X_s u over the samples.
  double zv = 0.0, zv2 = 0.0, zg = 0.0, zg2 = 0.0;
  for_each_block([&](const Matrix& P, const Matrix& A) {
    const Matrix Au = A.array().colwise() * uv.array();                      // n x b
    const Vector quad = (data.X.transpose() * Au).colwise().squaredNorm();  // a^T K a
    const Vector lin_v = (Au.cwiseProduct(P)).colwise().sum();
    const Vector lin_g = (A.cwiseProduct(P).array().colwise() * ug.array()).matrix().colwise().sum();
    const Vector v = quad - lin_v.cwiseAbs2();
    const Vector g = lin_g.cwiseAbs2();
    zv += v.sum();
    zv2 += v.squaredNorm();
    zg += g.sum();
    zg2 += g.squaredNorm();
  });
  auto mean_stderr = [N](double sum, double sumsq) {
    const double mean = sum / N;
    return std::sqrt(std::max(0.0, (sumsq - N * mean * mean) / (N - 1.0)) / N);
  };
  aux.lambda0_stderr = mean_stderr(zv, zv2);
  aux.mu0_stderr = mean_stderr(zg, zg2);

  const Spectrum sv = spectrum(aux.V_inf);
  const Spectrum sg = spectrum(aux.G_inf);
  aux.lambda0_hat = sv.lambda_min;
  aux.mu0_hat = sg.lambda_min;
  aux.v_inf_norm = sv.spectral_norm;
  aux.g_inf_norm = sg.spectral_norm;
  return aux;
}

Matrix surrogate_V_hat(const WNParams& params, const Dataset& data) {
  const DirectionState s = direction_state(params, data);
  return orthogonal_gram(data.X, s.P, s.active, s.active);
}

SurrogateKernels surrogate_kernels(const WNParams& params_s, const WNParams& params_next,
                                   const Dataset& data, const BoundarySets& sets) {
  const DirectionState now = direction_state(params_s, data);
  const Vector next_norms = checked_norms(params_next);
  const Vector next_scale =
      params_s.alpha * params_next.c.cwiseProduct(params_next.g).cwiseQuotient(next_norms);

  SurrogateKernels out;
  out.V_hat = orthogonal_gram(data.X, now.P, now.active, now.active);
  const Matrix A = now.active * next_scale.asDiagonal();
  const Matrix B = now.active * now.scale.asDiagonal();
  out.V_tilde = orthogonal_gram(data.X, now.P, A, B);
  if (sets.member.size() == 0 || !sets.member.any()) {
    out.V_tilde_perp = Matrix::Zero(data.n(), data.n());
  } else {
    const Matrix A_perp = A.cwiseProduct(sets.member.cast<double>().matrix());
    out.V_tilde_perp = orthogonal_gram(data.X, now.P, A_perp, B);
  }
  return out;
}

ConcentrationTable concentration_study(const Dataset& data, double alpha,
                                       const std::vector<Eigen::Index>& widths,
                                       std::size_t trials, std::uint64_t seed,
                                       const AuxEstimate& reference) {
  if (trials < 1) throw std::invalid_argument("concentration_study: trials must be >= 1");
  ConcentrationTable table;
  table.trials = trials;
  table.aux_stderr_max = reference.stderr_max;
  for (std::size_t w = 0; w < widths.size(); ++w) {
    ConcentrationRow row;
    row.m = widths[w];
    std::vector<double> dv, dg;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed = mix64(mix64(seed ^ static_cast<std::uint64_t>(row.m)) + t);
      const WNParams p = init_params(data.d(), row.m, alpha, trial_seed);
      dv.push_back((kernel_V(p, data) - reference.V_inf).norm());
      dg.push_back((kernel_G(p, data) - reference.G_inf).norm());
    }
    auto mean_sd = [](const std::vector<double>& xs) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
      return std::pair{mean, sd};
    };
    std::tie(row.mean_dev_V, row.sd_dev_V) = mean_sd(dv);
    std::tie(row.mean_dev_G, row.sd_dev_G) = mean_sd(dg);
    table.rows.push_back(row);
  }
  auto slope = [&](auto field) {
    const std::size_t k = table.rows.size();
    if (k < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : table.rows) {
      const double x = std::log(static_cast<double>(r.m));
      const double y = std::log(field(r));
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double kk = static_cast<double>(k);
    return (kk * sxy - sx * sy) / (kk * sxx - sx * sx);
  };
  table.slope_V = slope([](const ConcentrationRow& r) { return r.mean_dev_V; });
  table.slope_G = slope([](const ConcentrationRow& r) { return r.mean_dev_G; });
  return table;
}

void write_kernel_csv(const KernelSet& ks, const std::filesystem::path& path,
                      const std::vector<std::string>& preamble) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write " + path.string());
  for (const auto& line : preamble) std::fprintf(f, "# %s\n", line.c_str());
  std::fputs("i,j,V,G,H,Lambda\n", f);
  for (Eigen::Index i = 0; i < ks.V.rows(); ++i) {
    for (Eigen::Index j = 0; j < ks.V.cols(); ++j) {
      std::fprintf(f, "%td,%td,", static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j));
      write_number(f, ks.V(i, j));
      std::fputc(',', f);
      write_number(f, ks.G(i, j));
      std::fputc(',', f);
      write_number(f, ks.H(i, j));
      std::fputc(',', f);
      write_number(f, ks.Lambda(i, j));
      std::fputc('\n', f);
    }
  }
  std::fclose(f);
}

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const KernelSet& ks) {
  auto summary = [](const Spectrum& s) {
    return nlohmann::json{{"lambda_min", s.lambda_min}, {"spectral_norm", s.spectral_norm}};
  };
  return {{"alpha", ks.alpha},
          {"V", matrix_to_json(ks.V)},
          {"G", matrix_to_json(ks.G)},
          {"H", matrix_to_json(ks.H)},
          {"Lambda", matrix_to_json(ks.Lambda)},
          {"spectra",
           {{"V", summary(ks.v)}, {"G", summary(ks.g)}, {"H", summary(ks.h)}, {"Lambda", summary(ks.lambda)}}}};
}

nlohmann::json to_json(const AuxEstimate& aux) {
  return {{"alpha", aux.alpha},
          {"samples", aux.samples},
          {"lambda0_hat", aux.lambda0_hat},
          {"mu0_hat", aux.mu0_hat},
          {"lambda0_conservative", aux.lambda0_conservative()},
          {"mu0_conservative", aux.mu0_conservative()},
          {"v_inf_norm", aux.v_inf_norm},
          {"g_inf_norm", aux.g_inf_norm},
          {"stderr_max", aux.stderr_max},
          {"lambda0_stderr", aux.lambda0_stderr},
          {"mu0_stderr", aux.mu0_stderr},
          {"V_inf", matrix_to_json(aux.V_inf)},
          {"G_inf", matrix_to_json(aux.G_inf)},
          {"V_stderr", matrix_to_json(aux.V_stderr)},
          {"G_stderr", matrix_to_json(aux.G_stderr)}};
}

}  // namespace wnntk
