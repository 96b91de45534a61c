#include "rhfpt/config.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rhfpt/io.hpp"

namespace rhfpt {

RunMode run_mode_from_string(const std::string& s) {
  if (s == "nondeg") return RunMode::nondeg;
  if (s == "deg") return RunMode::deg;
  if (s == "mo") return RunMode::mo;
  if (s == "wigner") return RunMode::wigner;
  if (s == "validate") return RunMode::validate;
  if (s == "ground-state" || s == "ground_state") return RunMode::ground_state;
  if (s == "fd" || s == "fd-check") return RunMode::fd;
  throw InputError("unknown mode: " + s);
}

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::nondeg: return "nondeg";
    case RunMode::deg: return "deg";
    case RunMode::mo: return "mo";
    case RunMode::wigner: return "wigner";
    case RunMode::validate: return "validate";
    case RunMode::ground_state: return "ground-state";
    case RunMode::fd: return "fd-check";
  }
  return "?";
}

namespace {

const std::set<std::string> kExperimentKeys = {
    "schema_version", "mode",       "order",      "beta_grid",
    "w_path",         "seed",       "w_norm",     "tol_residual",
    "tol_cluster",    "slope_tol",  "noise_floor", "workers",
    "out",
};

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    grid.push_back(std::stod(tok));
  }
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= 0)
      throw InputError("beta_grid entries must be positive");
    if (i > 0 && grid[i] >= grid[i - 1])
      throw InputError("beta_grid must be strictly decreasing");
  }
  return grid;
}

}  // namespace

ExperimentConfig config_from_keys(
    const std::map<std::string, std::string>& kv,
    const std::string& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  for (const auto& [k, v] : kv) {
    if (io::is_system_key(k)) {
      cfg.system_keys.emplace(k, v);
    } else if (!kExperimentKeys.count(k)) {
      throw InputError("unknown config key: " + k);
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  const auto version = get("schema_version");
  if (!version) throw InputError("config is missing schema_version");
  if (std::stoi(*version) != 1)
    throw InputError("unsupported schema_version: " + *version);
  if (auto v = get("mode")) cfg.mode = run_mode_from_string(*v);
  if (auto v = get("order")) cfg.order = std::stoi(*v);
  if (auto v = get("beta_grid")) cfg.beta_grid = parse_grid(*v);
  if (auto v = get("w_path")) cfg.w_path = *v;
  if (auto v = get("seed")) cfg.seed = static_cast<unsigned>(std::stoul(*v));
  if (auto v = get("w_norm")) cfg.w_norm = std::stod(*v);
  if (auto v = get("tol_residual")) cfg.tol_residual = std::stod(*v);
  if (auto v = get("tol_cluster")) cfg.tol_cluster = std::stod(*v);
  if (auto v = get("slope_tol")) cfg.slope_tol = std::stod(*v);
  if (auto v = get("noise_floor")) cfg.noise_floor = std::stod(*v);
  if (auto v = get("workers")) cfg.workers = std::stoi(*v);
  if (auto v = get("out")) cfg.out_dir = *v;
  if (cfg.order < 0) throw InputError("order must be nonnegative");
  if (cfg.workers < 1) throw InputError("workers must be >= 1");
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config: " + path);
  const auto kv = io::read_key_values(f);
  return config_from_keys(
      kv, std::filesystem::path(path).parent_path().string());
}

LatticeSystem ExperimentConfig::build_system() const {
  return io::system_from_keys(system_keys, base_dir);
}

Vector random_potential(const LatticeSystem& sys, unsigned seed,
                        double dual_norm_target) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vector w(sys.n_sites());
  for (int i = 0; i < sys.n_sites(); ++i) w(i) = gauss(rng);
  const double nrm = sys.dual_norm(w);
  if (nrm == 0) throw AccuracyError("random potential degenerated to zero");
  return (dual_norm_target / nrm) * w;
}

Vector ExperimentConfig::build_perturbation(const LatticeSystem& sys) const {
  if (w_path) {
    namespace fs = std::filesystem;
    const fs::path p(*w_path);
    const std::string full =
        p.is_absolute() ? p.string() : (fs::path(base_dir) / p).string();
    Vector w = io::load_vector(full);
    if (w.size() != sys.n_sites())
      throw InputError("perturbation vector length does not match system");
    return w;
  }
  return random_potential(sys, seed, w_norm);
}

}  // namespace rhfpt
