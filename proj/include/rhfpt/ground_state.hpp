#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rhfpt/model.hpp"

namespace rhfpt {

/// Converged minimizer of the rHF functional over the admissible set,
/// together with the Fermi-level structure of its mean-field Hamiltonian:
/// gamma0 = P_f + Phi_p Lambda Phi_p' with P_f the projector onto the
/// n_full lowest eigenvectors and Lambda the occupation matrix on the
/// Fermi cluster.
struct GroundState {
  Matrix gamma0;
  Matrix h0;
  Vector eigvals;  // ascending
  Matrix eigvecs;  // orthonormal columns, same order
  double fermi_level = 0.0;
  int n_full = 0;
  int n_partial = 0;
  Matrix lambda;          // n_partial x n_partial
  double gap_below = 0.0;  // fermi_level - eps_{n_full}
  double gap_above = 0.0;  // eps_{n_full + n_partial + 1} - fermi_level
  double energy = 0.0;     // converged value of the functional
  int n_electrons = 0;
  Vector w;  // the potential the state was solved at (zero for unperturbed)

  int n_sites() const { return static_cast<int>(eigvals.size()); }
  int n_unocc() const { return n_sites() - n_full - n_partial; }
  Vector density() const { return gamma0.diagonal(); }
};

struct ScfOptions {
  int max_iter = 5000;
  double tol_residual = 1e-11;  // optimal-damping certificate
  bool newton_refine = true;
  double newton_tol = 1e-13;  // gradient norm target, relative to |H| scale
  int max_newton = 50;
  // Group of orthogonal matrices commuting with the problem; iterates are
  // averaged over it so exact degeneracies survive rounding.
  std::vector<Matrix> symmetrizer;
  double cluster_tol_rel = 1e-8;  // eigenvalue clustering vs spectral range
  double occupation_tol = 1e-6;   // full/empty threshold on occupations
  std::optional<Matrix> initial_gamma;
  unsigned seed = 0;  // nonzero: random admissible start
};

/// Minimize the rHF functional at external perturbation w over the set of
/// admissible density matrices by optimal damping (exact line search on the
/// convex functional), then polish with chart Newton steps. The returned
/// state satisfies the aufbau structure to the requested tolerance.
GroundState solve_scf(const LatticeSystem& sys, const Vector& w,
                      const ScfOptions& opts = {});
GroundState solve_scf(const LatticeSystem& sys, const ScfOptions& opts = {});

enum class FermiCase { NonDegenerate, Degenerate, Boundary };

/// NonDegenerate: gap above the N-th level exceeds tol_cluster.
/// Degenerate: the Fermi cluster has size >= 2 and all Lambda eigenvalues
/// are strictly inside (0,1) within occupation_tol.
/// Boundary: everything else (occupation pinned at 0 or 1).
FermiCase classify(const GroundState& gs, double tol_cluster = -1.0,
                   double occupation_tol = 1e-6);

const char* to_string(FermiCase c);

struct UniquenessReport {
  double sigma_min = 0.0;  // smallest singular value of the product map
  double sigma_max = 0.0;  // largest, for scale
  bool holds = false;
};

/// Tests the kernel condition on the Fermi-cluster orbital products: the
/// map M -> sum_ij M_ij phi_i phi_j on traceless symmetric M must be
/// injective. Vacuously true for n_partial == 1.
UniquenessReport uniqueness_kernel_test(const GroundState& gs,
                                        double tol_rank_rel = 1e-8);

/// Eigenvalue counts of h0 + diag(v) in the five windows
/// (-inf,a1], (a1,a2), [a2,a3], (a3,a4], (a4,a5] with
/// a1 = eps_1 - 1, a2,a3 = fermi -+ 3g-/4, g-/4, a4,a5 = fermi + g+/4,
/// 3g+/4. Small perturbations leave them at (0, n_full, 0, n_partial, 0).
std::array<int, 5> stability_ranks(const GroundState& gs, const Vector& v);

/// Ground state assembled by fiat from the eigenbasis of the bare core
/// Hamiltonian (kinetic + v_ext): the first n_full levels filled and the
/// following lambda.rows() levels occupied by lambda. No self-consistency
/// is implied; intended for exercising the perturbation machinery on
/// prescribed spectra.
GroundState synthetic_ground_state(const LatticeSystem& sys, int n_full,
                                   const Matrix& lambda);

}  // namespace rhfpt
