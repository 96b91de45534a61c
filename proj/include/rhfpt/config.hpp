#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhfpt/model.hpp"

namespace rhfpt {

enum class RunMode { nondeg, deg, mo, wigner, validate, ground_state, fd };

RunMode run_mode_from_string(const std::string& s);
const char* to_string(RunMode m);

/// One experiment: a system definition plus the pipeline controls. Parsed
/// from a key = value file with an explicit schema version; unknown keys
/// are rejected.
struct ExperimentConfig {
  // system section (kept as raw keys so runs can echo them verbatim)
  std::map<std::string, std::string> system_keys;
  std::string base_dir;

  RunMode mode = RunMode::ground_state;
  int order = 1;
  std::vector<double> beta_grid;  // strictly decreasing positive

  // perturbation: a named vector file or a seeded random draw scaled to
  // w_norm in the dual interaction norm
  std::optional<std::string> w_path;
  unsigned seed = 1;
  double w_norm = 0.1;

  // tolerance overrides
  double tol_residual = 1e-11;
  double tol_cluster = -1.0;  // negative: derived from the spectral range
  double slope_tol = 0.35;
  double noise_floor = 1e-11;

  int workers = 1;
  std::string out_dir = "out";

  LatticeSystem build_system() const;
  Vector build_perturbation(const LatticeSystem& sys) const;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig config_from_keys(
    const std::map<std::string, std::string>& kv, const std::string& base_dir);

/// Seeded Gaussian site vector scaled to the requested dual norm.
Vector random_potential(const LatticeSystem& sys, unsigned seed,
                        double dual_norm_target);

}  // namespace rhfpt
