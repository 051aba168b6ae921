#include "wnntk/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wnntk/model.hpp"
#include "wnntk/rng.hpp"

namespace wnntk {

namespace {

constexpr int kMaxRejectionRounds = 100;
constexpr Eigen::Index kTeacherWidth = 64;
constexpr std::uint64_t kTeacherStream = 0x7eac4e7;

double max_abs_cosine(const Matrix& X) {
  const Vector norms = X.rowwise().norm();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
      const double c = std::abs(X.row(i).dot(X.row(j))) / (norms(i) * norms(j));
      worst = std::max(worst, c);
    }
  }
  return worst;
}

}  // namespace

std::string to_string(TargetMode mode) {
  return mode == TargetMode::uniform ? "uniform" : "teacher";
}

TargetMode parse_target_mode(const std::string& name) {
  if (name == "uniform") return TargetMode::uniform;
  if (name == "teacher") return TargetMode::teacher;
  throw std::invalid_argument("unknown target_mode '" + name + "'");
}

ValidationReport validate_dataset(const Dataset& data) {
  ValidationReport report;
  const Eigen::Index n = data.n();
  if (data.y.size() != n) {
    report.violations.push_back("target length " + std::to_string(data.y.size()) +
                                " does not match n = " + std::to_string(n));
    return report;
  }
  if (!data.X.allFinite() || !data.y.allFinite()) {
    report.violations.push_back("non-finite entries");
    return report;
  }
  const Vector norms = data.X.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms(i) == 0.0) {
      report.zero_vector = true;
      report.violations.push_back("x_" + std::to_string(i) + " is the zero vector");
    } else if (norms(i) > 1.0 + 1e-12) {
      report.norm_violation = true;
      std::ostringstream os;
      os << "||x_" << i << "|| = " << norms(i) << " exceeds 1";
      report.violations.push_back(os.str());
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (norms(i) == 0.0 || norms(j) == 0.0) continue;
      const double inner = std::abs(data.X.row(i).dot(data.X.row(j)));
      if (inner >= (1.0 - kParallelTolerance) * norms(i) * norms(j)) {
        report.parallel_violation = true;
        report.violations.push_back("x_" + std::to_string(i) + " and x_" +
                                    std::to_string(j) + " are parallel");
      }
    }
  }
  if (n > 0 && data.y.cwiseAbs().maxCoeff() > 1.0) {
    report.target_violation = true;
    report.violations.push_back("||y||_inf exceeds 1");
  }
  if (data.d() < kTheoryDimension) {
    report.low_dimension = true;
    report.warnings.push_back("d = " + std::to_string(data.d()) +
                              " < 50: outside the dimension regime of the theory");
  }
  return report;
}

Dataset generate_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                         TargetMode mode) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  if (d < 2) throw std::invalid_argument("generate_dataset: d must be >= 2");
  Rng rng(seed);
  Dataset data;
  data.seed = seed;
  data.target_mode = mode;
  data.X.resize(n, d);
  bool accepted = false;
  for (int round = 0; round < kMaxRejectionRounds && !accepted; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double norm = 0.0;
      while (norm == 0.0) {
        for (Eigen::Index c = 0; c < d; ++c) data.X(i, c) = rng.normal();
        norm = data.X.row(i).norm();
      }
      data.X.row(i) /= norm;
    }
    accepted = n < 2 || max_abs_cosine(data.X) < 1.0 - kGenerationMargin;
  }
  if (!accepted) {
    throw std::runtime_error("generate_dataset: no draw met the non-parallel margin in " +
                             std::to_string(kMaxRejectionRounds) +
                             " rounds; n is too large for d = " + std::to_string(d));
  }
  data.y.resize(n);
  if (mode == TargetMode::uniform) {
    for (Eigen::Index i = 0; i < n; ++i) data.y(i) = rng.uniform(-1.0, 1.0);
  } else {
    const WNParams teacher = init_params(d, kTeacherWidth, 1.0, mix64(seed ^ kTeacherStream));
    data.y = predict(teacher, data.X);
    const double scale = std::max(1.0, data.y.cwiseAbs().maxCoeff());
    data.y /= scale;
  }
  return data;
}

nlohmann::json to_json(const Dataset& data) {
  nlohmann::json X = nlohmann::json::array();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < data.d(); ++c) row.push_back(data.X(i, c));
    X.push_back(std::move(row));
  }
  nlohmann::json y = nlohmann::json::array();
  for (Eigen::Index i = 0; i < data.y.size(); ++i) y.push_back(data.y(i));
  return {{"n", data.n()},   {"d", data.d()},
          {"X", X},          {"y", y},
          {"seed", data.seed}, {"target_mode", to_string(data.target_mode)}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset data;
  const auto n = j.at("n").get<Eigen::Index>();
  const auto d = j.at("d").get<Eigen::Index>();
  const auto& X = j.at("X");
  const auto& y = j.at("y");
  if (static_cast<Eigen::Index>(X.size()) != n || static_cast<Eigen::Index>(y.size()) != n) {
    throw std::invalid_argument("dataset JSON: X and y must have n entries");
  }
  data.X.resize(n, d);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(X[i].size()) != d) {
      throw std::invalid_argument("dataset JSON: row " + std::to_string(i) + " has wrong length");
    }
    for (Eigen::Index c = 0; c < d; ++c) data.X(i, c) = X[i][c].get<double>();
    data.y(i) = y[i].get<double>();
  }
  data.seed = j.value("seed", std::uint64_t{0});
  data.target_mode = parse_target_mode(j.value("target_mode", std::string("uniform")));
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(data).dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return dataset_from_json(nlohmann::json::parse(in));
}

}  // namespace wnntk
