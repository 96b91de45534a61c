#pragma once

#include <Eigen/Core>

namespace rhfpt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Construction-time tolerances for the problem data and for density
/// matrices tagged as elements of the admissible set.
struct Tolerances {
  double spd = 1e-10;    // smallest kernel eigenvalue must exceed this
  double psd = 1e-9;     // allowed spectral overshoot of gamma outside [0,1]
  double trace = 1e-9;   // |Tr(gamma) - N|
};

}  // namespace rhfpt
