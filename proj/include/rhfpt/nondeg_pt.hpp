#pragma once

#include <vector>

#include "rhfpt/ground_state.hpp"

namespace rhfpt {

/// Circle in the complex plane separating the occupied from the unoccupied
/// spectrum, discretized by n_quad trapezoid points. The default crosses
/// the real axis at eps_1 - 1 and the Fermi level.
struct ContourSpec {
  double center = 0.0;
  double radius = 0.0;
  int n_quad = 64;

  static ContourSpec enclosing_occupied(const GroundState& gs,
                                        int n_quad = 64);

  /// Same separation with the left crossing pulled close to the bottom of
  /// the spectrum. A smaller circle resolves a narrow Fermi gap with far
  /// fewer points, so the iterative solvers use this one.
  static ContourSpec tight(const GroundState& gs, double margin = 0.1,
                           int n_quad = 64);

  /// Distance from the circle to the given spectrum; must stay positive.
  double spectrum_distance(const Vector& eigvals) const;
};

/// k-linear contour operator
///   Q^{(k)}(v_1,..,v_k) = 1/(2 pi i) oint R(z) v_1 R(z) ... v_k R(z) dz
/// with R the resolvent of h0 and v_i on-site potentials, evaluated by
/// trapezoid quadrature with automatic refinement (n_quad doubles until the
/// result settles). Trace-free with rank <= 2 min(k N, n).
Matrix contour_q(const GroundState& gs, const std::vector<Vector>& vs,
                 const ContourSpec& c, double tol_q = 1e-11);
Matrix contour_q(const GroundState& gs, const std::vector<Vector>& vs);

/// Same operator for general symmetric arguments (the quadrature does not
/// care that the lattice perturbations happen to be diagonal).
Matrix contour_q_operator(const GroundState& gs,
                          const std::vector<Matrix>& vs, const ContourSpec& c,
                          double tol_q = 1e-11);

/// Daleckii-Krein evaluation of the same operator by divided differences of
/// the occupation step function in the eigenbasis; implemented for k <= 2
/// and used as an independent cross-check of the quadrature.
Matrix divided_difference_q(const GroundState& gs,
                            const std::vector<Vector>& vs);
Matrix divided_difference_q_operator(const GroundState& gs,
                                     const std::vector<Matrix>& vs);

/// Response map L rho = -density of Q^{(1)}(K rho); bounded, symmetric and
/// positive in the (.,.)_C inner product.
Vector apply_response(const LatticeSystem& sys, const GroundState& gs,
                      const Vector& rho);

struct ScreenedSolveStats {
  int iterations = 0;
  double residual = 0.0;  // relative, in the C norm
};

/// Solve (1 + L) rho = rhs by conjugate gradients in the C inner product.
Vector solve_screened(const LatticeSystem& sys, const GroundState& gs,
                      const Vector& rhs, double tol = 1e-11,
                      ScreenedSolveStats* stats = nullptr);

struct NondegSeries {
  int order = 0;
  std::vector<Vector> rho;      // rho[k-1] = rho^{(k)}
  std::vector<Matrix> gamma;    // gamma[k-1] = gamma^{(k)}
  std::vector<double> energy;   // energy[k-1] = E^{(k)}
  std::vector<Vector> w_eff;    // w_eff[k-1] = W^{(k)}
  std::vector<Matrix> q_tilde;  // q_tilde[k-1] = Qtilde^{(k)}

  /// gamma0 + sum_{k<=n} beta^k gamma^{(k)}
  Matrix truncated_gamma(const Matrix& gamma0, double beta, int n) const;
  double truncated_energy(double energy0, double beta, int n) const;
};

/// Non-degenerate Rayleigh-Schrodinger expansion: the screened recursion
/// (1+L) rho^{(k)} = rho of Qtilde^{(k)}, with W^{(1)} = w + K rho^{(1)},
/// W^{(k)} = K rho^{(k)} for k >= 2, gamma^{(k)} = Q^{(1)}(W^{(k)}) +
/// Qtilde^{(k)} and the energy coefficients assembled from them.
NondegSeries expand(const LatticeSystem& sys, const GroundState& gs,
                    const Vector& w, int order, int order_cap = 6);

}  // namespace rhfpt
