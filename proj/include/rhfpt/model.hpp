#pragma once

#include <Eigen/Cholesky>

#include "rhfpt/errors.hpp"
#include "rhfpt/types.hpp"

namespace rhfpt {

/// Finite-dimensional reduced Hartree-Fock problem on a lattice of sites:
/// a kinetic matrix, an on-site external potential, a symmetric
/// positive-definite interaction kernel K defining the pairing
/// D(f,g) = f' K g, and an electron count N.
///
/// The one-particle space is spanned by an orthonormal site basis, so the
/// density of a state gamma is its diagonal. The interaction norms are
///   ||rho||_C  = sqrt(rho' K rho),     ||w||_C' = sqrt(w' K^{-1} w),
/// dual to each other under the pairing w' rho.
class LatticeSystem {
 public:
  LatticeSystem(Matrix kinetic, Vector v_ext, Matrix kernel, int n_electrons,
                Tolerances tol = {});

  int n_sites() const { return static_cast<int>(v_ext_.size()); }
  int n_electrons() const { return n_electrons_; }
  const Matrix& kinetic() const { return kinetic_; }
  const Vector& v_ext() const { return v_ext_; }
  const Matrix& kernel() const { return kernel_; }
  const Tolerances& tolerances() const { return tol_; }

  Vector apply_kernel(const Vector& rho) const { return kernel_ * rho; }
  Vector solve_kernel(const Vector& w) const { return kernel_llt_.solve(w); }

  /// ||rho||_C
  double coulomb_norm(const Vector& rho) const;
  /// ||w||_C'
  double dual_norm(const Vector& w) const;
  /// (a, b)_C = a' K b
  double coulomb_dot(const Vector& a, const Vector& b) const;

 private:
  Matrix kinetic_;
  Vector v_ext_;
  Matrix kernel_;
  int n_electrons_;
  Tolerances tol_;
  Eigen::LLT<Matrix> kernel_llt_;
};

/// rho_i = gamma_ii.
Vector density_of(const Matrix& gamma);

/// Tr(kinetic gamma) + v_ext' rho + 1/2 rho' K rho + w' rho.
/// Throws AccuracyError naming the offending term if any piece is
/// non-finite.
double energy(const LatticeSystem& sys, const Matrix& gamma, const Vector& w);
double energy(const LatticeSystem& sys, const Matrix& gamma);

/// kinetic + diag(v_ext + K rho + w).
Matrix mean_field(const LatticeSystem& sys, const Vector& rho,
                  const Vector& w);
Matrix mean_field(const LatticeSystem& sys, const Vector& rho);

/// Throws unless gamma is symmetric with spectrum in [-tol.psd, 1+tol.psd];
/// when n_electrons >= 0 also requires |Tr(gamma) - n_electrons| <=
/// tol.trace.
void check_density_matrix(const Matrix& gamma, double n_electrons,
                          const Tolerances& tol = {});

// ---- demo systems ---------------------------------------------------------

struct RingParams {
  int n_sites = 8;
  int n_electrons = 2;
  double hopping = 1.0;       // strength of the discrete -1/2 Laplacian
  double yukawa_mass = 1.0;   // screening mass m of the kernel
  double kernel_scale = 1.0;  // overall factor on the kernel
};

/// Translation-invariant periodic 1D lattice. The kinetic matrix is
/// hopping * (I - (S + S')/2) for the cyclic shift S, and the kernel is
/// kernel_scale * (L + m^2 I)^{-1} with L the periodic lattice Laplacian,
/// i.e. the k-space multiplier 1/(|k|^2 + m^2). The mean-field Hamiltonian
/// commutes with S, so the +-k level pairs stay exactly degenerate.
LatticeSystem make_ring(const RingParams& p);

struct DoubleWellParams {
  int n_sites = 12;
  int n_electrons = 3;
  double hopping = 1.0;
  double depth1 = 1.0;
  double depth2 = 0.6;
  double pos1 = 3.0;   // site index of first well center
  double pos2 = 8.0;
  double width = 1.5;  // Gaussian well width in sites
  double yukawa_mass = 1.0;
  double kernel_scale = 1.0;
};

/// Open 1D chain with two Gaussian wells of different depths; the asymmetry
/// makes the low-lying spectrum simple.
LatticeSystem make_double_well(const DoubleWellParams& p);

struct SyntheticDegenerateParams {
  int n_sites = 10;
  int n_electrons = 3;
  int n_partial = 2;        // multiplicity of the prescribed Fermi cluster
  double gap_below = 0.5;   // distance from the cluster to the level below
  double gap_above = 0.8;   // and to the level above
  double level_spacing = 0.3;
  double kernel_scale = 1e-3;
  unsigned seed = 0;
};

/// Core Hamiltonian with a prescribed eigenvalue cluster of multiplicity
/// n_partial at the Fermi level (random orthogonal eigenbasis) and a small
/// random SPD kernel. Meant for exercising the degenerate machinery
/// independently of the self-consistent solve.
LatticeSystem make_synthetic_degenerate(const SyntheticDegenerateParams& p);

enum class DemoKind { ring, double_well, synthetic_degenerate };

struct DemoParams {
  RingParams ring;
  DoubleWellParams double_well;
  SyntheticDegenerateParams synthetic;
};

LatticeSystem build_demo_system(DemoKind kind, const DemoParams& params);

}  // namespace rhfpt
