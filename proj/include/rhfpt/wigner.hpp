#pragma once

#include <vector>

#include "rhfpt/deg_pt.hpp"
#include "rhfpt/nondeg_pt.hpp"

namespace rhfpt {

/// Spectral projector onto the eigenvectors of t with eigenvalue >= 1/2:
/// the nearest rank-N orthogonal projector in Frobenius distance when t is
/// within 1/2 of the projector manifold. Throws DomainError when an
/// eigenvalue sits within tol_half of 1/2 (the threshold is ambiguous) or
/// when the eigenvalue count above 1/2 is not N.
Matrix pi_project(const Matrix& t, int n_electrons, double tol_half = 1e-9);

struct SlopeReport {
  std::vector<double> beta_grid;  // decreasing positive
  std::vector<double> errors;     // same length
  double fitted_slope = 0.0;
  double expected_slope = 0.0;
  double slope_tol = 0.35;
  bool pass = false;
  double min_error = 0.0;  // most negative error seen (sign check)
  int points_used = 0;
};

struct SlopeFitOptions {
  double slope_tol = 0.35;
  double noise_floor = 1e-11;  // drop beta points below this error
  bool drop_largest = true;    // discard the largest beta (asymptotics)
  double sign_tol = 1e-12;     // variational errors may not dip below this
  bool check_sign = true;
  int min_points = 3;
};

/// Least-squares log-log fit of errors vs beta under the options above.
SlopeReport fit_slope(const std::vector<double>& beta_grid,
                      const std::vector<double>& errors, double expected,
                      const SlopeFitOptions& opts = {});

/// Order-(2n+2) energy error of the projected truncated expansion:
/// for each beta, E(Pi(gamma0 + sum beta^k gamma^{(k)}), beta w) minus the
/// tightly converged minimum at beta w. Beta points are independent and
/// evaluated on up to `workers` threads with a fixed assembly order.
SlopeReport wigner_check_nondeg(const LatticeSystem& sys,
                                const GroundState& gs,
                                const NondegSeries& series, const Vector& w,
                                int n, const std::vector<double>& beta_grid,
                                const SlopeFitOptions& opts = {},
                                int workers = 1);

struct DegWignerReport {
  SlopeReport variational;    // chart form: E(Gamma(sum beta^k A^{(k)}), .)
  SlopeReport energy_series;  // |sum_{k<=2n+1} beta^k E^{(k)} - E(beta w)|
};

/// Degenerate counterpart: the chart point Gamma(sum_{k<=n} beta^k A^{(k)})
/// must over-shoot the minimum by O(beta^{2n+2}), and the replicated-index
/// energy series through order 2n+1 must match it at the same rate.
/// Beta points whose chart argument leaves the occupancy box are dropped.
DegWignerReport wigner_check_deg(const LatticeSystem& sys,
                                 const GroundState& gs,
                                 const DegSeries& series, const Vector& w,
                                 int n, const std::vector<double>& beta_grid,
                                 const SlopeFitOptions& opts = {},
                                 int workers = 1);

/// |Tr(h Q) - Tr(|h - eps_f| Q^2)| for Q = gamma' - 1_{(-inf,eps_f)}(h);
/// both sides are equal and nonnegative for any projector gamma' of the
/// same rank. Throws on a trace mismatch or eps_f on the spectrum.
double trace_identity_check(const Matrix& h, double eps_f,
                            const Matrix& gamma_prime);

}  // namespace rhfpt
