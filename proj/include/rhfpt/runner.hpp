#pragma once

#include <string>

#include "rhfpt/config.hpp"
#include "rhfpt/ground_state.hpp"

namespace rhfpt {

struct FdReport {
  double first = 0.0;        // d E / d beta at 0
  double second_half = 0.0;  // 1/2 d^2 E / d beta^2 at 0
  double first_error = 0.0;  // Richardson step differences
  double second_error = 0.0;
};

/// Central differences with one Richardson level of the map
/// beta -> minimum energy at beta*w, around beta = 0.
FdReport fd_oracle(const LatticeSystem& sys, const GroundState& gs,
                   const Vector& w, double step);

/// Executes the configured pipeline, writing a manifest, result tables and
/// a summary with one status line per check into the output directory.
/// Returns the process exit status (0 iff all hard checks passed).
int run(const ExperimentConfig& config);

}  // namespace rhfpt
