#pragma once

#include <vector>

#include "rhfpt/ground_state.hpp"

namespace rhfpt {

/// Orbital-by-orbital (coupled-perturbed) expansion data: phi[k] is n x N
/// with column i the order-k coefficient of orbital i, eps[k] the order-k
/// eigenvalue coefficients. phi[0], eps[0] are the unperturbed data.
struct MOSeries {
  int order = 0;
  std::vector<Matrix> phi;
  std::vector<Vector> eps;

  /// gamma^{(k)} = sum_i sum_{l=0..k} |phi_i^{(l)}><phi_i^{(k-l)}|
  Matrix gamma_coefficient(int k) const;
};

struct CPSolution {
  Matrix psi;  // n x N
  Vector eta;  // length N
};

/// Unique solution of the constrained coupled-perturbed system
///   (h0 - eps_i) psi_i + sum_j K0_ij psi_j = f_i + eta_i phi_i0,
///   (psi_i, phi_i0) = alpha_i,
/// with K0_ij psi = 2 phi_i0 o K(phi_j0 o psi). Requires the lowest N
/// eigenvalues of h0 to be simple. Solved densely as a saddle system.
CPSolution solve_cp_system(const LatticeSystem& sys, const GroundState& gs,
                           const Matrix& f, const Vector& alpha);

/// Triangular recursion filling the orbital expansion order by order; signs
/// of the orbital corrections follow the constraint values, with phases
/// fixed by (phi_i(beta), phi_i0) > 0.
MOSeries mo_expand(const LatticeSystem& sys, const GroundState& gs,
                   const Vector& w, int order);

/// max over i,j and 0 <= m <= k of |sum_l (phi_i^{(l)})' phi_j^{(m-l)} -
/// delta_ij delta_m0|: the order-by-order orthonormality defects.
std::vector<double> orthogonality_defects(const MOSeries& ms);

}  // namespace rhfpt
