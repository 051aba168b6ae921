#include "experiment.hpp"

#include <fstream>
#include <sstream>

#include "wnntk/rng.hpp"

#ifndef WNNTK_BUILD_ID
#define WNNTK_BUILD_ID "wnntk-dev"
#endif

namespace wnntk::cli {

namespace {

template <class T>
T positive_count(const nlohmann::json& section, const char* key, T fallback) {
  if (!section.contains(key)) return fallback;
  const auto& v = section.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ConfigError(std::string("'") + key + "' must be a positive integer");
  }
  return static_cast<T>(v.get<long long>());
}

double positive_number(const nlohmann::json& section, const char* key, double fallback) {
  if (!section.contains(key)) return fallback;
  const auto& v = section.at(key);
  if (!v.is_number() || !(v.get<double>() > 0.0)) {
    throw ConfigError(std::string("'") + key + "' must be a positive number");
  }
  return v.get<double>();
}

const nlohmann::json& section_of(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return j.at(key);
}

}  // namespace

std::uint64_t ExperimentConfig::params_seed() const { return derive_seed(seed, 1); }
std::uint64_t ExperimentConfig::aux_seed() const { return derive_seed(seed, 2); }

std::string config_hash(const nlohmann::json& j) {
  // FNV-1a over the canonical dump, finalized with SplitMix64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  h = mix64(h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  try {
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
        throw ConfigError("'seed' must be an integer");
      }
      cfg.seed = j.at("seed").get<std::uint64_t>();
    }

    const auto& data = section_of(j, "data");
    cfg.data.n = positive_count<Eigen::Index>(data, "n", cfg.data.n);
    cfg.data.d = positive_count<Eigen::Index>(data, "d", cfg.data.d);
    if (cfg.data.d < 2) throw ConfigError("'d' must be >= 2");
    if (data.contains("target_mode")) {
      cfg.data.target_mode = parse_target_mode(data.at("target_mode").get<std::string>());
    }
    if (data.contains("path") && !data.at("path").is_null()) {
      std::filesystem::path p = data.at("path").get<std::string>();
      cfg.data.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }

    const auto& model = section_of(j, "model");
    cfg.model.m = positive_count<Eigen::Index>(model, "m", cfg.model.m);
    cfg.model.alpha = positive_number(model, "alpha", cfg.model.alpha);

    const auto& train = section_of(j, "train");
    if (train.contains("eta")) {
      const auto& eta = train.at("eta");
      if (eta.is_string()) {
        if (eta.get<std::string>() != "auto") throw ConfigError("'eta' must be a number or \"auto\"");
      } else {
        cfg.train.eta = positive_number(train, "eta", 1.0);
      }
    }
    cfg.train.steps = positive_count<std::size_t>(train, "steps", cfg.train.steps);
    cfg.train.record_every = positive_count<std::size_t>(train, "record_every", cfg.train.record_every);
    if (train.contains("regime")) cfg.train.regime = parse_regime(train.at("regime").get<std::string>());
    if (train.contains("mode")) cfg.train.mode = parse_train_mode(train.at("mode").get<std::string>());
    if (train.contains("decompose")) cfg.train.decompose = train.at("decompose").get<bool>();
    if (train.contains("boundary_radius") && !train.at("boundary_radius").is_null()) {
      const double r = train.at("boundary_radius").get<double>();
      if (!(r >= 0.0)) throw ConfigError("'boundary_radius' must be >= 0");
      cfg.train.boundary_radius = r;
    }

    const auto& aux = section_of(j, "aux");
    cfg.mc_samples = positive_count<std::size_t>(aux, "mc_samples", cfg.mc_samples);
    if (cfg.mc_samples < 1000) throw ConfigError("'mc_samples' must be >= 1000");

    if (j.contains("sweep") && !j.at("sweep").is_null()) {
      const auto& sweep = section_of(j, "sweep");
      SweepSection s;
      for (const auto& a : sweep.value("alphas", nlohmann::json::array())) {
        if (!a.is_number() || !(a.get<double>() > 0.0)) throw ConfigError("sweep alphas must be positive");
        s.alphas.push_back(a.get<double>());
      }
      for (const auto& m : sweep.value("ms", nlohmann::json::array())) {
        if (!m.is_number_integer() || m.get<long long>() < 1) throw ConfigError("sweep ms must be positive integers");
        s.ms.push_back(m.get<Eigen::Index>());
      }
      if (s.alphas.empty()) s.alphas.push_back(cfg.model.alpha);
      if (s.ms.empty()) s.ms.push_back(cfg.model.m);
      cfg.sweep = s;
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.hash = config_hash(j);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

std::vector<std::string> provenance_lines(const ExperimentConfig& config) {
  return {"config_hash=" + config.hash, "seed=" + std::to_string(config.seed),
          "rng=" + std::string(Rng::kName), "build_id=" + build_id()};
}

nlohmann::json provenance_json(const ExperimentConfig& config) {
  return {{"config_hash", config.hash},
          {"seed", config.seed},
          {"rng", std::string(Rng::kName)},
          {"build_id", build_id()},
          {"target_mode", to_string(config.data.target_mode)}};
}

Dataset resolve_dataset(const ExperimentConfig& config) {
  if (config.data.path) return load_dataset(*config.data.path);
  return generate_dataset(config.data.n, config.data.d, config.data_seed(), config.data.target_mode);
}

std::string build_id() { return WNNTK_BUILD_ID; }

}  // namespace wnntk::cli
