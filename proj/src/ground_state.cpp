#include "rhfpt/ground_state.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <random>

#include "rhfpt/deg_pt.hpp"

namespace rhfpt {

namespace {

struct Spectrum {
  Vector eigvals;
  Matrix eigvecs;
};

Spectrum diagonalize(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw AccuracyError("eigensolver failed on the mean-field Hamiltonian");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Partition ascending eigenvalues into clusters of relative width tol.
std::vector<std::pair<int, int>> cluster_spectrum(const Vector& eigvals,
                                                  double tol_abs) {
  std::vector<std::pair<int, int>> clusters;
  const int n = static_cast<int>(eigvals.size());
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || eigvals(i) - eigvals(i - 1) > tol_abs) {
      clusters.emplace_back(start, i - start);
      start = i;
    }
  }
  return clusters;
}

double cluster_tolerance(const Vector& eigvals, double rel) {
  const double range = eigvals(eigvals.size() - 1) - eigvals(0);
  return rel * std::max(range, 1.0);
}

/// Minimizer of Tr(H gamma) over the admissible set: fill whole clusters
/// from the bottom, split the boundary cluster evenly.
Matrix aufbau_fill(const Spectrum& sp, int n_electrons, double tol_abs) {
  const int n = static_cast<int>(sp.eigvals.size());
  Vector occ = Vector::Zero(n);
  int left = n_electrons;
  for (const auto& [start, size] : cluster_spectrum(sp.eigvals, tol_abs)) {
    if (left <= 0) break;
    if (left >= size) {
      occ.segment(start, size).setOnes();
      left -= size;
    } else {
      occ.segment(start, size).setConstant(double(left) / size);
      left = 0;
    }
  }
  return sp.eigvecs * occ.asDiagonal() * sp.eigvecs.transpose();
}

Matrix symmetrize_over(const std::vector<Matrix>& group, const Matrix& g) {
  if (group.empty()) return g;
  Matrix avg = Matrix::Zero(g.rows(), g.cols());
  for (const Matrix& u : group) avg += u * g * u.transpose();
  return avg / double(group.size());
}

struct BlockStructure {
  int n_full = 0;
  int n_partial = 0;
  Matrix lambda;  // occupations on the partial cluster
  bool clean = false;
};

/// Classify clusters of h-eigenvalues as full / partial / empty from the
/// occupation matrix of gamma in the eigenbasis. Adjacent fractional
/// clusters merge into a single partial block: on the way to a degenerate
/// minimizer the Fermi cluster is split by the residual, but its levels all
/// carry fractional weight. `clean` is false when the pattern is not an
/// aufbau profile (full, then one partial block, then empty).
BlockStructure detect_blocks(const Spectrum& sp, const Matrix& gamma,
                             double tol_abs, double occ_tol) {
  const Matrix g = sp.eigvecs.transpose() * gamma * sp.eigvecs;
  BlockStructure bs;
  enum { Full, Partial, Empty } stage = Full;
  int partial_start = -1;
  int partial_size = 0;
  for (const auto& [start, size] : cluster_spectrum(sp.eigvals, tol_abs)) {
    const Matrix sub = g.block(start, start, size, size);
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        0.5 * (sub + sub.transpose()), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo >= 1.0 - occ_tol) {
      if (stage != Full) return bs;  // full block after the Fermi level
      bs.n_full += size;
    } else if (hi <= occ_tol) {
      stage = Empty;
    } else {
      if (stage == Empty) return bs;  // fractional weight above empty levels
      if (stage == Full) partial_start = bs.n_full;
      stage = Partial;
      partial_size += size;
    }
  }
  if (partial_size > 0) {
    const Matrix sub = g.block(partial_start, partial_start, partial_size,
                               partial_size);
    bs.n_partial = partial_size;
    bs.lambda = 0.5 * (sub + sub.transpose());
  }
  bs.clean = true;
  return bs;
}

double matrix_scale(const Matrix& h) {
  return std::max(1.0, h.cwiseAbs().maxCoeff());
}

/// Linear-optimality certificate: Tr(H(gamma) (gamma_aufbau - gamma)),
/// nonpositive and zero exactly at the minimizer.
double oda_certificate(const LatticeSystem& sys, const Vector& w,
                       const Matrix& gamma, const ScfOptions& opts) {
  const Matrix h = mean_field(sys, gamma.diagonal(), w);
  const Spectrum sp = diagonalize(h);
  const double tol_abs = cluster_tolerance(sp.eigvals, opts.cluster_tol_rel);
  const Matrix target = aufbau_fill(sp, sys.n_electrons(), tol_abs);
  return (h.array() * (target - gamma).array()).sum();
}

/// One pass of optimal damping: returns the converged gamma (certificate
/// below tol) or, when the budget runs out, throws ConvergenceError or
/// returns the best effort per `throw_on_exhaust`.
Matrix optimal_damping(const LatticeSystem& sys, const Vector& w,
                       Matrix gamma, const ScfOptions& opts, double tol,
                       int max_iter, bool throw_on_exhaust) {
  double e_prev = energy(sys, gamma, w);
  double slope = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector rho = gamma.diagonal();
    const Matrix h = mean_field(sys, rho, w);
    const Spectrum sp = diagonalize(h);
    const double tol_abs = cluster_tolerance(sp.eigvals, opts.cluster_tol_rel);
    const Matrix target = aufbau_fill(sp, sys.n_electrons(), tol_abs);
    const Matrix delta = target - gamma;
    slope = (h.array() * delta.array()).sum();
    if (slope >= -tol) return gamma;
    const Vector rho_d = delta.diagonal();
    const double curv = rho_d.dot(sys.kernel() * rho_d);
    const double t = curv > 0 ? std::min(1.0, -slope / curv) : 1.0;
    gamma += t * delta;
    gamma = symmetrize_over(opts.symmetrizer, gamma);
    const double e = energy(sys, gamma, w);
    if (e > e_prev + 1e-12 * std::max(1.0, std::abs(e_prev)))
      throw StructuralError(
          "optimal damping: energy increased along an accepted step; the "
          "functional is not behaving convexly");
    e_prev = e;
  }
  if (throw_on_exhaust)
    throw ConvergenceError("optimal damping: iteration budget exhausted",
                           -slope);
  return gamma;
}

struct RefineResult {
  Matrix gamma;
  bool structured = false;  // aufbau block pattern was identified
};

/// Chart Newton polish: purify gamma onto the detected block structure and
/// solve the local stationarity system until the gradient is at rounding
/// level. Falls back to the unrefined state when the structure is unclear
/// or coercivity fails.
RefineResult newton_refine(const LatticeSystem& sys, const Vector& w,
                           Matrix gamma, const ScfOptions& opts) {
  const bool dbg = std::getenv("RHFPT_DEBUG_NEWTON") != nullptr;
  double e_prev = energy(sys, gamma, w);
  for (int pass = 0; pass < opts.max_newton; ++pass) {
    const Spectrum sp = diagonalize(mean_field(sys, gamma.diagonal(), w));
    const double tol_abs = cluster_tolerance(sp.eigvals, opts.cluster_tol_rel);
    // Coarse occupation threshold: mid-iteration occupations are only
    // settled to the damping residual. A wrong snap is caught by the
    // certificate check in the driver.
    const double occ_coarse = std::max(opts.occupation_tol, 1e-2);
    BlockStructure bs =
        detect_blocks(sp, gamma, std::max(tol_abs, 1e-7), occ_coarse);
    if (dbg)
      fprintf(stderr, "newton pass %d: clean=%d nf=%d np=%d e=%.16g\n", pass,
              int(bs.clean), bs.n_full, bs.n_partial, e_prev);
    if (!bs.clean) return {gamma, false};
    const int np = bs.n_partial;
    const int nf = bs.n_full;
    const int ne = sys.n_electrons();
    if (nf > ne || ne > nf + np) return {gamma, false};
    if (np >= 2) {
      // the merged Fermi cluster must be narrow against its bounding gaps
      const double spread = sp.eigvals(nf + np - 1) - sp.eigvals(nf);
      const double below =
          nf > 0 ? sp.eigvals(nf) - sp.eigvals(nf - 1)
                 : std::numeric_limits<double>::infinity();
      const double above = nf + np < sys.n_sites()
                               ? sp.eigvals(nf + np) - sp.eigvals(nf + np - 1)
                               : std::numeric_limits<double>::infinity();
      if (spread > 0.25 * std::min(below, above)) return {gamma, false};
    }

    // purified iterate: exact projector plus occupation block
    Matrix lam = bs.lambda;
    if (np > 0) {
      const double excess =
          (sys.n_electrons() - nf - lam.trace()) / double(np);
      lam.diagonal().array() += excess;
    } else if (nf != sys.n_electrons()) {
      return {gamma, false};
    }
    const Matrix phi_f = sp.eigvecs.leftCols(nf);
    const Matrix phi_p = sp.eigvecs.middleCols(nf, np);
    gamma = phi_f * phi_f.transpose() + phi_p * lam * phi_p.transpose();

    BlockFrame frame;
    frame.basis = sp.eigvecs;
    frame.eigvals = sp.eigvals;
    frame.n_full = nf;
    frame.n_partial = np;
    frame.lambda = lam;
    if (np > 0) {
      frame.fermi_level = sp.eigvals.segment(nf, np).mean();
    } else {
      frame.fermi_level =
          0.5 * (sp.eigvals(nf - 1) + sp.eigvals(nf));
    }

    const Matrix h = mean_field(sys, gamma.diagonal(), w);
    const Matrix m = frame.basis.transpose() * h * frame.basis;
    const BlockCoefficient grad = pair_with_gamma1(frame, m);
    const double scale = matrix_scale(h);
    if (dbg) fprintf(stderr, "  grad=%.3e\n", grad.norm());
    if (grad.norm() <= opts.newton_tol * scale) return {gamma, true};

    BlockCoefficient step;
    try {
      frame.validate(1e-12);
      step = theta_solve(sys, frame, -0.5 * grad, 1e-13);
    } catch (const StructuralError&) {
      return {gamma, false};
    } catch (const DomainError&) {
      return {gamma, false};
    }

    // backtrack into the occupancy box and down the energy
    bool accepted = false;
    double t = 1.0;
    for (int cut = 0; cut < 40 && !accepted; ++cut, t *= 0.5) {
      Matrix candidate;
      try {
        candidate = gamma_of(frame, t * step, 1e-12);
      } catch (const DomainError&) {
        continue;
      }
      const double e = energy(sys, candidate, w);
      if (e <= e_prev + 1e-13 * std::max(1.0, std::abs(e_prev))) {
        gamma = candidate;
        e_prev = e;
        accepted = true;
      }
    }
    if (!accepted) return {gamma, true};  // at the numerical floor
  }
  return {gamma, true};
}

GroundState extract_state(const LatticeSystem& sys, const Vector& w,
                          const Matrix& gamma, const ScfOptions& opts) {
  GroundState gs;
  gs.gamma0 = gamma;
  gs.w = w;
  gs.n_electrons = sys.n_electrons();
  gs.h0 = mean_field(sys, gamma.diagonal(), w);
  const Spectrum sp = diagonalize(gs.h0);
  gs.eigvals = sp.eigvals;
  gs.eigvecs = sp.eigvecs;
  gs.energy = energy(sys, gamma, w);

  const double tol_abs = cluster_tolerance(sp.eigvals, opts.cluster_tol_rel);
  BlockStructure bs =
      detect_blocks(sp, gamma, std::max(tol_abs, 1e-7), opts.occupation_tol);
  const int n = sys.n_sites();
  const int ne = sys.n_electrons();
  if (bs.clean && (bs.n_partial > 0 || bs.n_full == ne)) {
    gs.n_full = bs.n_full;
    gs.n_partial = bs.n_partial;
    gs.lambda = bs.lambda;
  } else {
    // fall back to a purely spectral split around the electron count
    gs.n_full = ne;
    gs.n_partial = 0;
    gs.lambda = Matrix::Zero(0, 0);
  }
  if (gs.n_partial > 0) {
    gs.fermi_level = sp.eigvals.segment(gs.n_full, gs.n_partial).mean();
  } else if (gs.n_full < n) {
    gs.fermi_level = 0.5 * (sp.eigvals(gs.n_full - 1) + sp.eigvals(gs.n_full));
  } else {
    gs.fermi_level = sp.eigvals(n - 1) + 1.0;
  }
  gs.gap_below =
      gs.n_full > 0 ? gs.fermi_level - sp.eigvals(gs.n_full - 1) : 0.0;
  const int above = gs.n_full + gs.n_partial;
  gs.gap_above = above < n ? sp.eigvals(above) - gs.fermi_level : 0.0;
  return gs;
}

}  // namespace

GroundState solve_scf(const LatticeSystem& sys, const Vector& w,
                      const ScfOptions& opts) {
  if (w.size() != sys.n_sites())
    throw InputError("solve_scf: potential length mismatch");

  Matrix gamma;
  if (opts.initial_gamma) {
    gamma = *opts.initial_gamma;
    check_density_matrix(gamma, sys.n_electrons(), sys.tolerances());
  } else {
    Vector rho;
    if (opts.seed != 0) {
      std::mt19937_64 rng(opts.seed);
      std::uniform_real_distribution<double> unif(0.1, 1.0);
      rho.resize(sys.n_sites());
      for (int i = 0; i < sys.n_sites(); ++i) rho(i) = unif(rng);
      rho *= sys.n_electrons() / rho.sum();
    } else {
      rho = Vector::Zero(sys.n_sites());
    }
    const Spectrum sp = diagonalize(mean_field(sys, rho, w));
    gamma = aufbau_fill(sp, sys.n_electrons(),
                        cluster_tolerance(sp.eigvals, opts.cluster_tol_rel));
  }
  gamma = symmetrize_over(opts.symmetrizer, gamma);

  if (!opts.newton_refine) {
    gamma = optimal_damping(sys, w, gamma, opts, opts.tol_residual,
                            opts.max_iter, true);
    return extract_state(sys, w, gamma, opts);
  }

  // Damping only needs to localize the block structure; near a degenerate
  // minimizer its certificate creeps (the split Fermi cluster keeps the
  // linear target integral), so it runs best-effort and the chart Newton
  // polish brings the certificate to the requested level.
  const int burst = std::min(opts.max_iter, 400);
  gamma = optimal_damping(sys, w, gamma, opts,
                          std::max(opts.tol_residual, 1e-7), burst, false);
  for (int round = 0; round < 6; ++round) {
    const RefineResult rr = newton_refine(sys, w, gamma, opts);
    gamma = symmetrize_over(opts.symmetrizer, rr.gamma);
    if (!opts.symmetrizer.empty() && rr.structured)
      gamma = newton_refine(sys, w, gamma, opts).gamma;
    if (oda_certificate(sys, w, gamma, opts) >= -opts.tol_residual)
      return extract_state(sys, w, gamma, opts);
    // structure detection failed at this point; grind further with damping
    gamma = optimal_damping(sys, w, gamma, opts, opts.tol_residual, burst,
                            false);
  }
  gamma = optimal_damping(sys, w, gamma, opts, opts.tol_residual,
                          opts.max_iter, true);
  return extract_state(sys, w, gamma, opts);
}

GroundState solve_scf(const LatticeSystem& sys, const ScfOptions& opts) {
  return solve_scf(sys, Vector::Zero(sys.n_sites()), opts);
}

FermiCase classify(const GroundState& gs, double tol_cluster,
                   double occupation_tol) {
  const int n = gs.n_sites();
  const int ne = gs.n_electrons;
  if (tol_cluster <= 0)
    tol_cluster =
        1e-8 * std::max(1.0, gs.eigvals(n - 1) - gs.eigvals(0));
  if (ne < n && gs.eigvals(ne) - gs.eigvals(ne - 1) > tol_cluster)
    return FermiCase::NonDegenerate;
  if (gs.n_partial >= 2) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gs.lambda,
                                             Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    // the partial cluster must really sit around the electron-count edge
    const bool cluster_wide =
        gs.n_full + gs.n_partial <= n &&
        gs.eigvals(gs.n_full + gs.n_partial - 1) - gs.eigvals(gs.n_full) <=
            tol_cluster;
    if (cluster_wide && lo > occupation_tol && hi < 1.0 - occupation_tol)
      return FermiCase::Degenerate;
  }
  return FermiCase::Boundary;
}

const char* to_string(FermiCase c) {
  switch (c) {
    case FermiCase::NonDegenerate:
      return "NonDegenerate";
    case FermiCase::Degenerate:
      return "Degenerate";
    case FermiCase::Boundary:
      return "Boundary";
  }
  return "?";
}

UniquenessReport uniqueness_kernel_test(const GroundState& gs,
                                        double tol_rank_rel) {
  const int np = gs.n_partial;
  if (np == 0)
    throw DomainError(
        "uniqueness_kernel_test: no partially occupied cluster");
  UniquenessReport rep;
  if (np == 1) {
    // the traceless symmetric space is {0}; nothing can vanish
    rep.sigma_min = std::numeric_limits<double>::infinity();
    rep.sigma_max = rep.sigma_min;
    rep.holds = true;
    return rep;
  }
  const int n = gs.n_sites();
  const Matrix phi = gs.eigvecs.middleCols(gs.n_full, np);
  // columns: site-wise orbital products over an orthonormal basis of the
  // symmetric matrices (off-diagonal pairs scaled by sqrt(2))
  const int n_sym = np * (np + 1) / 2;
  Matrix products(n, n_sym);
  std::vector<bool> is_diagonal(n_sym, false);
  {
    int c = 0;
    for (int i = 0; i < np; ++i, ++c) {
      products.col(c) = phi.col(i).cwiseProduct(phi.col(i));
      is_diagonal[c] = true;
    }
    for (int i = 0; i < np; ++i)
      for (int j = i + 1; j < np; ++j, ++c)
        products.col(c) =
            std::sqrt(2.0) * phi.col(i).cwiseProduct(phi.col(j));
  }
  // restrict to traceless coefficient directions
  Matrix constraint = Matrix::Zero(n_sym, 1);
  for (int c = 0; c < n_sym; ++c)
    if (is_diagonal[c]) constraint(c, 0) = 1.0;
  Eigen::HouseholderQR<Matrix> qr(constraint);
  const Matrix q = qr.householderQ();
  const Matrix traceless_basis = q.rightCols(n_sym - 1);
  Eigen::JacobiSVD<Matrix> svd(products * traceless_basis);
  rep.sigma_min = svd.singularValues().minCoeff();
  rep.sigma_max = svd.singularValues().maxCoeff();
  rep.holds = rep.sigma_min > tol_rank_rel * rep.sigma_max;
  return rep;
}

std::array<int, 5> stability_ranks(const GroundState& gs, const Vector& v) {
  if (v.size() != gs.n_sites())
    throw InputError("stability_ranks: potential length mismatch");
  const double gm = gs.gap_below;
  const double gp = gs.gap_above;
  const double ef = gs.fermi_level;
  const std::array<double, 5> alpha = {gs.eigvals(0) - 1.0, ef - 0.75 * gm,
                                       ef - 0.25 * gm, ef + 0.25 * gp,
                                       ef + 0.75 * gp};
  Matrix h = gs.h0;
  h.diagonal() += v;
  const Vector ev =
      Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly)
          .eigenvalues();
  std::array<int, 5> counts{};
  for (int i = 0; i < ev.size(); ++i) {
    const double x = ev(i);
    if (x <= alpha[0])
      ++counts[0];
    else if (x < alpha[1])
      ++counts[1];
    else if (x <= alpha[2])
      ++counts[2];
    else if (x <= alpha[3])
      ++counts[3];
    else if (x <= alpha[4])
      ++counts[4];
  }
  return counts;
}

GroundState synthetic_ground_state(const LatticeSystem& sys, int n_full,
                                   const Matrix& lambda) {
  const int n = sys.n_sites();
  const int np = static_cast<int>(lambda.rows());
  if (n_full < 0 || n_full + np > n)
    throw InputError("synthetic_ground_state: blocks do not fit");
  const Matrix core = mean_field(sys, Vector::Zero(n));
  const Spectrum sp = diagonalize(core);
  GroundState gs;
  gs.h0 = core;
  gs.eigvals = sp.eigvals;
  gs.eigvecs = sp.eigvecs;
  gs.n_full = n_full;
  gs.n_partial = np;
  gs.lambda = lambda;
  gs.n_electrons = sys.n_electrons();
  const Matrix phi_f = sp.eigvecs.leftCols(n_full);
  const Matrix phi_p = sp.eigvecs.middleCols(n_full, np);
  gs.gamma0 = phi_f * phi_f.transpose() + phi_p * lambda * phi_p.transpose();
  gs.w = Vector::Zero(n);
  if (np > 0) {
    gs.fermi_level = sp.eigvals.segment(n_full, np).mean();
  } else if (n_full < n) {
    gs.fermi_level = 0.5 * (sp.eigvals(n_full - 1) + sp.eigvals(n_full));
  }
  gs.gap_below = n_full > 0 ? gs.fermi_level - sp.eigvals(n_full - 1) : 0.0;
  const int above = n_full + np;
  gs.gap_above = above < n ? sp.eigvals(above) - gs.fermi_level : 0.0;
  gs.energy = energy(sys, gs.gamma0);
  return gs;
}

}  // namespace rhfpt
