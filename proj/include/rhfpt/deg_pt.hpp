#pragma once

#include <vector>

#include "rhfpt/ground_state.hpp"

namespace rhfpt {

/// Eigenbasis of the mean-field Hamiltonian split into fully occupied (f),
/// partially occupied (p) and unoccupied (u) blocks, with the occupation
/// matrix Lambda on the p block. All degenerate-chart operators are
/// expressed in this basis; `basis` maps frame coordinates to site
/// coordinates.
struct BlockFrame {
  Matrix basis;    // n x n orthonormal, columns ordered [f | p | u]
  Vector eigvals;  // same order
  int n_full = 0;
  int n_partial = 0;
  double fermi_level = 0.0;
  Matrix lambda;  // n_partial x n_partial symmetric

  int n_sites() const { return static_cast<int>(eigvals.size()); }
  int n_unocc() const { return n_sites() - n_full - n_partial; }

  Vector eps_full() const { return eigvals.head(n_full); }
  Vector eps_unocc() const { return eigvals.tail(n_unocc()); }

  /// spec(lambda) must stay inside (occupation_tol, 1 - occupation_tol)
  /// for the chart machinery to be coercive.
  void validate(double occupation_tol = 1e-9) const;
};

BlockFrame frame_of(const GroundState& gs);

Matrix to_site(const BlockFrame& f, const Matrix& m_frame);
Matrix to_frame(const BlockFrame& f, const Matrix& m_site);

/// Density (site basis) of a frame-basis operator.
Vector frame_density(const BlockFrame& f, const Matrix& m_frame);

/// Tangent parameter A = (A_uf, A_up, A_pf, A_pp) of the exponential chart;
/// a_pp is symmetric traceless. The same storage is used for dual
/// coefficients, paired with tangents by the Euclidean block trace
/// <B, A> = sum_x Tr(B_x' A_x).
struct BlockCoefficient {
  Matrix a_uf, a_up, a_pf, a_pp;

  static BlockCoefficient zero(const BlockFrame& f);

  BlockCoefficient& operator+=(const BlockCoefficient& o);
  BlockCoefficient& operator-=(const BlockCoefficient& o);
  BlockCoefficient& operator*=(double s);
  friend BlockCoefficient operator+(BlockCoefficient a,
                                    const BlockCoefficient& b) {
    return a += b;
  }
  friend BlockCoefficient operator-(BlockCoefficient a,
                                    const BlockCoefficient& b) {
    return a -= b;
  }
  friend BlockCoefficient operator*(double s, BlockCoefficient a) {
    return a *= s;
  }

  double dot(const BlockCoefficient& o) const;
  double norm() const;
};

/// Projection of an arbitrary square matrix onto the symmetric traceless
/// space the pp block lives in.
Matrix project_traceless_symmetric(const Matrix& m);

/// Euclidean-orthonormal basis of the tangent space (uf entries, up
/// entries, pf entries, then a traceless symmetric pp basis).
std::vector<BlockCoefficient> tangent_basis(const BlockFrame& f);

/// Gaussian random tangent, for property tests.
BlockCoefficient random_coefficient(const BlockFrame& f, unsigned seed);

// ---- chart ----------------------------------------------------------------

/// Gamma(A) = e^{L_uo} e^{L_pf} (gamma0 + L_pp) e^{-L_pf} e^{-L_uo}, in the
/// site basis. Requires 0 <= lambda + a_pp <= 1 (occupancy box), otherwise
/// throws DomainError. Trace and spectrum are those of
/// diag(1, lambda + a_pp, 0) exactly.
Matrix gamma_of(const BlockFrame& f, const BlockCoefficient& a,
                double box_tol = 1e-12);

/// Multilinear expansion terms: Gamma(A) = gamma0 + sum_l gamma_l(A,..,A).
/// Not symmetric in its arguments. Returned in the site basis;
/// gamma_l_frame is the frame-basis variant used by the recursions.
Matrix gamma_l(const BlockFrame& f, const std::vector<BlockCoefficient>& args);
Matrix gamma_l_frame(const BlockFrame& f,
                     const std::vector<BlockCoefficient>& args);

/// Dual coefficient g with <g, A> = Tr(M gamma_1(A)) for symmetric M in
/// frame coordinates: g = (2 M_uf, 2 M_up Lambda, 2 (1-Lambda) M_pf,
/// traceless-symmetric part of M_pp).
BlockCoefficient pair_with_gamma1(const BlockFrame& f, const Matrix& m_frame);

// ---- the coercive map Theta ------------------------------------------------

/// Theta(A), as a dual coefficient:
///   [Theta A]_uf = (H++ - eF) A_uf - A_uf (H-- - eF)  + 1/2 [J(A)]_uf
///   [Theta A]_up = (H++ - eF) A_up Lambda             + 1/2 [J(A)]_up
///   [Theta A]_pf = -(1-Lambda) A_pf (H-- - eF)        + 1/2 [J(A)]_pf
///   [Theta A]_pp =                                      1/2 [J(A)]_pp
/// where <J(A), A'> = D(rho_{gamma_1(A)}, rho_{gamma_1(A')}).
BlockCoefficient theta_apply(const LatticeSystem& sys, const BlockFrame& f,
                             const BlockCoefficient& a);

/// <Theta(A), A> for convenience.
double theta_quadratic(const LatticeSystem& sys, const BlockFrame& f,
                       const BlockCoefficient& a);

/// Inner product the chart tangent space carries: Euclidean on the p
/// blocks, (H++ - eF)-weighted trace on the u blocks.
double tangent_metric_dot(const BlockFrame& f, const BlockCoefficient& a,
                          const BlockCoefficient& b);

/// Solve Theta(A) = rhs by conjugate gradients in the tangent metric, with
/// a dense factorization fallback. Detected loss of coercivity (negative
/// curvature / indefinite assembled form) raises StructuralError pointing
/// at the uniqueness and fractional-occupation assumptions.
BlockCoefficient theta_solve(const LatticeSystem& sys, const BlockFrame& f,
                             const BlockCoefficient& rhs, double tol = 1e-12);

// ---- Rayleigh-Schrodinger recursion ----------------------------------------

/// Right-hand side B^{(k)} of the order-k stationarity equation
/// Theta(A^{(k)}) = -1/2 B^{(k)}, assembled from the lower-order
/// coefficients `prior` = (A^{(1)}, ..., A^{(k-1)}).
BlockCoefficient assemble_b(const LatticeSystem& sys, const BlockFrame& f,
                            const Vector& w, int order,
                            const std::vector<BlockCoefficient>& prior);

struct DegSeries {
  int order = 0;
  std::vector<BlockCoefficient> a;  // a[k-1] = A^{(k)}, k = 1..order
  std::vector<BlockCoefficient> b;  // b[k-1] = B^{(k)}
  std::vector<Matrix> gamma;        // site basis, gamma[k-1], k = 1..order
  // energy[m-1] for m = 1..2*order+1, by the replicated-index energy
  // formula that needs coefficients only up to floor(m/2)
  std::vector<double> energy;
  BlockFrame frame;
};

/// Degenerate Rayleigh-Schrodinger expansion at perturbation w up to the
/// given order; energies are produced through order 2*order+1.
DegSeries expand_degenerate(const LatticeSystem& sys, const GroundState& gs,
                            const Vector& w, int order, int order_cap = 4);

/// Energy coefficient by the direct order-k formula (needs gamma^{(k)};
/// cross-check oracle for the replicated-index formula).
double deg_energy_direct(const LatticeSystem& sys, const GroundState& gs,
                         const DegSeries& series, const Vector& w, int k);

/// Gradient of A -> E(Gamma(A), w) by central differences over the tangent
/// basis; independent check of the stationarity of truncated expansions.
BlockCoefficient chart_gradient_fd(const LatticeSystem& sys,
                                   const BlockFrame& f, const Vector& w,
                                   const BlockCoefficient& a,
                                   double step = 1e-6);

}  // namespace rhfpt
