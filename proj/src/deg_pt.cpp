#include "rhfpt/deg_pt.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "rhfpt/compositions.hpp"

namespace rhfpt {

namespace {

Matrix comm(const Matrix& x, const Matrix& y) { return x * y - y * x; }

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

void BlockFrame::validate(double occupation_tol) const {
  const int n = n_sites();
  if (basis.rows() != n || basis.cols() != n)
    throw InputError("block frame: basis shape mismatch");
  if (n_full < 0 || n_partial < 0 || n_full + n_partial > n)
    throw InputError("block frame: invalid block sizes");
  if (lambda.rows() != n_partial || lambda.cols() != n_partial)
    throw InputError("block frame: lambda shape mismatch");
  if (n_partial > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(lambda, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= occupation_tol ||
        es.eigenvalues().maxCoeff() >= 1.0 - occupation_tol)
      throw DomainError(
          "block frame: occupation matrix has an eigenvalue pinned at 0 or 1");
  }
  for (int i = 0; i < n_full; ++i)
    if (eigvals(i) >= fermi_level)
      throw InputError("block frame: full level above the Fermi level");
  for (int i = n_full + n_partial; i < n; ++i)
    if (eigvals(i) <= fermi_level)
      throw InputError("block frame: unoccupied level below the Fermi level");
}

BlockFrame frame_of(const GroundState& gs) {
  BlockFrame f;
  f.basis = gs.eigvecs;
  f.eigvals = gs.eigvals;
  f.n_full = gs.n_full;
  f.n_partial = gs.n_partial;
  f.fermi_level = gs.fermi_level;
  f.lambda = gs.lambda;
  return f;
}

Matrix to_site(const BlockFrame& f, const Matrix& m_frame) {
  return f.basis * m_frame * f.basis.transpose();
}

Matrix to_frame(const BlockFrame& f, const Matrix& m_site) {
  return f.basis.transpose() * m_site * f.basis;
}

Vector frame_density(const BlockFrame& f, const Matrix& m_frame) {
  return ((f.basis * m_frame).cwiseProduct(f.basis)).rowwise().sum();
}

BlockCoefficient BlockCoefficient::zero(const BlockFrame& f) {
  BlockCoefficient a;
  const int nu = f.n_unocc();
  a.a_uf = Matrix::Zero(nu, f.n_full);
  a.a_up = Matrix::Zero(nu, f.n_partial);
  a.a_pf = Matrix::Zero(f.n_partial, f.n_full);
  a.a_pp = Matrix::Zero(f.n_partial, f.n_partial);
  return a;
}

BlockCoefficient& BlockCoefficient::operator+=(const BlockCoefficient& o) {
  a_uf += o.a_uf;
  a_up += o.a_up;
  a_pf += o.a_pf;
  a_pp += o.a_pp;
  return *this;
}

BlockCoefficient& BlockCoefficient::operator-=(const BlockCoefficient& o) {
  a_uf -= o.a_uf;
  a_up -= o.a_up;
  a_pf -= o.a_pf;
  a_pp -= o.a_pp;
  return *this;
}

BlockCoefficient& BlockCoefficient::operator*=(double s) {
  a_uf *= s;
  a_up *= s;
  a_pf *= s;
  a_pp *= s;
  return *this;
}

double BlockCoefficient::dot(const BlockCoefficient& o) const {
  return (a_uf.array() * o.a_uf.array()).sum() +
         (a_up.array() * o.a_up.array()).sum() +
         (a_pf.array() * o.a_pf.array()).sum() +
         (a_pp.array() * o.a_pp.array()).sum();
}

double BlockCoefficient::norm() const { return std::sqrt(dot(*this)); }

Matrix project_traceless_symmetric(const Matrix& m) {
  Matrix s = 0.5 * (m + m.transpose());
  if (s.rows() > 0) s.diagonal().array() -= s.trace() / s.rows();
  return s;
}

std::vector<BlockCoefficient> tangent_basis(const BlockFrame& f) {
  std::vector<BlockCoefficient> basis;
  const int nu = f.n_unocc();
  const int nf = f.n_full;
  const int np = f.n_partial;
  auto push = [&](auto fill) {
    BlockCoefficient e = BlockCoefficient::zero(f);
    fill(e);
    basis.push_back(std::move(e));
  };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nf; ++j)
      push([&](BlockCoefficient& e) { e.a_uf(i, j) = 1.0; });
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < np; ++j)
      push([&](BlockCoefficient& e) { e.a_up(i, j) = 1.0; });
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nf; ++j)
      push([&](BlockCoefficient& e) { e.a_pf(i, j) = 1.0; });
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < np; ++i)
    for (int j = i + 1; j < np; ++j)
      push([&](BlockCoefficient& e) {
        e.a_pp(i, j) = inv_sqrt2;
        e.a_pp(j, i) = inv_sqrt2;
      });
  // Helmert vectors span the traceless diagonal directions.
  for (int m = 1; m < np; ++m) {
    const double scale = 1.0 / std::sqrt(double(m) * (m + 1));
    push([&](BlockCoefficient& e) {
      for (int i = 0; i < m; ++i) e.a_pp(i, i) = scale;
      e.a_pp(m, m) = -m * scale;
    });
  }
  return basis;
}

BlockCoefficient random_coefficient(const BlockFrame& f, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  BlockCoefficient a = BlockCoefficient::zero(f);
  auto fill = [&](Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = gauss(rng);
  };
  fill(a.a_uf);
  fill(a.a_up);
  fill(a.a_pf);
  fill(a.a_pp);
  a.a_pp = project_traceless_symmetric(a.a_pp);
  const double nrm = a.norm();
  if (nrm > 0) a *= 1.0 / nrm;
  return a;
}

namespace {

Matrix lift_uo(const BlockFrame& f, const BlockCoefficient& a) {
  const int n = f.n_sites();
  const int no = f.n_full + f.n_partial;
  const int nu = f.n_unocc();
  Matrix l = Matrix::Zero(n, n);
  l.block(no, 0, nu, f.n_full) = a.a_uf;
  l.block(no, f.n_full, nu, f.n_partial) = a.a_up;
  l.block(0, no, f.n_full, nu) = -a.a_uf.transpose();
  l.block(f.n_full, no, f.n_partial, nu) = -a.a_up.transpose();
  return l;
}

Matrix lift_pf(const BlockFrame& f, const BlockCoefficient& a) {
  const int n = f.n_sites();
  Matrix l = Matrix::Zero(n, n);
  l.block(f.n_full, 0, f.n_partial, f.n_full) = a.a_pf;
  l.block(0, f.n_full, f.n_full, f.n_partial) = -a.a_pf.transpose();
  return l;
}

Matrix lift_pp(const BlockFrame& f, const BlockCoefficient& a) {
  const int n = f.n_sites();
  Matrix l = Matrix::Zero(n, n);
  l.block(f.n_full, f.n_full, f.n_partial, f.n_partial) = a.a_pp;
  return l;
}

Matrix gamma0_frame(const BlockFrame& f) {
  const int n = f.n_sites();
  Matrix g = Matrix::Zero(n, n);
  g.topLeftCorner(f.n_full, f.n_full).setIdentity();
  g.block(f.n_full, f.n_full, f.n_partial, f.n_partial) = f.lambda;
  return g;
}

}  // namespace

Matrix gamma_of(const BlockFrame& f, const BlockCoefficient& a,
                double box_tol) {
  if (f.n_partial > 0) {
    const Matrix occ = f.lambda + a.a_pp;
    Eigen::SelfAdjointEigenSolver<Matrix> es(occ, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -box_tol ||
        es.eigenvalues().maxCoeff() > 1.0 + box_tol)
      throw DomainError(
          "gamma_of: lambda + a_pp leaves [0,1], outside the chart's "
          "occupancy box");
  }
  const Matrix ex = lift_uo(f, a).exp();
  const Matrix ey = lift_pf(f, a).exp();
  const Matrix core = gamma0_frame(f) + lift_pp(f, a);
  const Matrix g = ex * (ey * core * ey.transpose()) * ex.transpose();
  return to_site(f, g);
}

namespace {

/// Closed block form of the chart derivative: much cheaper than the
/// commutator chain for the solver-facing linear case.
Matrix gamma1_frame(const BlockFrame& f, const BlockCoefficient& a) {
  const int nf = f.n_full;
  const int np = f.n_partial;
  const int nu = f.n_unocc();
  const int no = nf + np;
  const Matrix one_minus = Matrix::Identity(np, np) - f.lambda;
  Matrix g = Matrix::Zero(f.n_sites(), f.n_sites());
  g.block(nf, 0, np, nf) = one_minus * a.a_pf;
  g.block(0, nf, nf, np) = g.block(nf, 0, np, nf).transpose();
  g.block(nf, nf, np, np) = a.a_pp;
  g.block(no, 0, nu, nf) = a.a_uf;
  g.block(0, no, nf, nu) = a.a_uf.transpose();
  g.block(no, nf, nu, np) = a.a_up * f.lambda;
  g.block(nf, no, np, nu) = g.block(no, nf, nu, np).transpose();
  return g;
}

}  // namespace

Matrix gamma_l_frame(const BlockFrame& f,
                     const std::vector<BlockCoefficient>& args) {
  const int l = static_cast<int>(args.size());
  if (l < 1) throw InputError("gamma_l: needs at least one argument");
  if (l == 1) return gamma1_frame(f, args[0]);
  const int n = f.n_sites();
  std::vector<Matrix> u(l), p(l);
  for (int s = 0; s < l; ++s) {
    u[s] = lift_uo(f, args[s]);
    p[s] = lift_pf(f, args[s]);
  }
  const Matrix g0 = gamma0_frame(f);
  Matrix total = Matrix::Zero(n, n);
  // outer uo commutators wrap inner pf commutators around gamma0 ...
  for (int i = 0; i <= l; ++i) {
    Matrix m = g0;
    for (int s = l; s >= i + 1; --s) m = comm(p[s - 1], m);
    for (int s = i; s >= 1; --s) m = comm(u[s - 1], m);
    total += m / (factorial(i) * factorial(l - i));
  }
  // ... and around the pp injection of the last argument.
  const Matrix core = lift_pp(f, args[l - 1]);
  for (int i = 0; i <= l - 1; ++i) {
    Matrix m = core;
    for (int s = l - 1; s >= i + 1; --s) m = comm(p[s - 1], m);
    for (int s = i; s >= 1; --s) m = comm(u[s - 1], m);
    total += m / (factorial(i) * factorial(l - 1 - i));
  }
  return total;
}

Matrix gamma_l(const BlockFrame& f,
               const std::vector<BlockCoefficient>& args) {
  return to_site(f, gamma_l_frame(f, args));
}

BlockCoefficient pair_with_gamma1(const BlockFrame& f, const Matrix& m) {
  const int nf = f.n_full;
  const int np = f.n_partial;
  const int nu = f.n_unocc();
  const int no = nf + np;
  BlockCoefficient g;
  const Matrix one_minus = Matrix::Identity(np, np) - f.lambda;
  g.a_uf = 2.0 * m.block(no, 0, nu, nf);
  g.a_up = 2.0 * m.block(no, nf, nu, np) * f.lambda;
  g.a_pf = 2.0 * one_minus * m.block(nf, 0, np, nf);
  g.a_pp = project_traceless_symmetric(m.block(nf, nf, np, np));
  return g;
}

BlockCoefficient theta_apply(const LatticeSystem& sys, const BlockFrame& f,
                             const BlockCoefficient& a) {
  const int np = f.n_partial;
  const Vector wu = f.eps_unocc().array() - f.fermi_level;  // > 0
  const Vector wf = f.eps_full().array() - f.fermi_level;   // < 0
  const Matrix one_minus = Matrix::Identity(np, np) - f.lambda;

  BlockCoefficient out;
  out.a_uf = wu.asDiagonal() * a.a_uf - a.a_uf * wf.asDiagonal();
  out.a_up = wu.asDiagonal() * a.a_up * f.lambda;
  out.a_pf = -one_minus * a.a_pf * wf.asDiagonal();
  out.a_pp = Matrix::Zero(np, np);

  const Vector rho = frame_density(f, gamma1_frame(f, a));
  const Vector coul = sys.kernel() * rho;
  const Matrix coul_frame =
      f.basis.transpose() * coul.asDiagonal() * f.basis;
  out += 0.5 * pair_with_gamma1(f, coul_frame);
  return out;
}

double theta_quadratic(const LatticeSystem& sys, const BlockFrame& f,
                       const BlockCoefficient& a) {
  return theta_apply(sys, f, a).dot(a);
}

double tangent_metric_dot(const BlockFrame& f, const BlockCoefficient& a,
                          const BlockCoefficient& b) {
  const Vector wu = f.eps_unocc().array() - f.fermi_level;
  double s = 0.0;
  s += (a.a_uf.array() * (wu.asDiagonal() * b.a_uf).array()).sum();
  s += (a.a_up.array() * (wu.asDiagonal() * b.a_up).array()).sum();
  s += (a.a_pf.array() * b.a_pf.array()).sum();
  s += (a.a_pp.array() * b.a_pp.array()).sum();
  return s;
}

namespace {

// dual -> primal Riesz map of the tangent metric (u blocks divided by the
// gap weights, p blocks unchanged)
BlockCoefficient metric_solve(const BlockFrame& f, const BlockCoefficient& r) {
  const Vector wu_inv = (f.eps_unocc().array() - f.fermi_level).inverse();
  BlockCoefficient z = r;
  z.a_uf = wu_inv.asDiagonal() * r.a_uf;
  z.a_up = wu_inv.asDiagonal() * r.a_up;
  return z;
}

BlockCoefficient theta_solve_dense(const LatticeSystem& sys,
                                   const BlockFrame& f,
                                   const BlockCoefficient& rhs) {
  const auto basis = tangent_basis(f);
  const int dim = static_cast<int>(basis.size());
  if (dim == 0) return BlockCoefficient::zero(f);
  Matrix t(dim, dim);
  Vector r(dim);
  for (int j = 0; j < dim; ++j) {
    const BlockCoefficient tj = theta_apply(sys, f, basis[j]);
    for (int i = 0; i < dim; ++i) t(i, j) = tj.dot(basis[i]);
    r(j) = rhs.dot(basis[j]);
  }
  t = 0.5 * (t + t.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(t);
  if (es.eigenvalues().minCoeff() <= 0)
    throw StructuralError(
        "theta_solve: assembled form is not positive definite; the "
        "uniqueness or fractional-occupation assumption fails on this "
        "frame");
  const Vector c = es.eigenvectors() *
                   (es.eigenvectors().transpose() * r).cwiseQuotient(
                       es.eigenvalues());
  BlockCoefficient x = BlockCoefficient::zero(f);
  for (int j = 0; j < dim; ++j) x += c(j) * basis[j];
  return x;
}

}  // namespace

BlockCoefficient theta_solve(const LatticeSystem& sys, const BlockFrame& f,
                             const BlockCoefficient& rhs, double tol) {
  const int dim = f.n_unocc() * (f.n_full + f.n_partial) +
                  f.n_partial * f.n_full +
                  (f.n_partial * (f.n_partial + 1)) / 2 -
                  (f.n_partial > 0 ? 1 : 0);
  if (dim <= 0) return BlockCoefficient::zero(f);

  BlockCoefficient x = BlockCoefficient::zero(f);
  BlockCoefficient r = rhs;
  BlockCoefficient z = metric_solve(f, r);
  BlockCoefficient p = z;
  double rz = r.dot(z);
  const double rz0 = std::sqrt(std::max(rz, 0.0));
  if (rz0 == 0.0) return x;

  const int max_iter = 2 * dim + 10;
  for (int it = 0; it < max_iter; ++it) {
    const BlockCoefficient q = theta_apply(sys, f, p);
    const double pq = p.dot(q);
    if (pq <= 0)
      throw StructuralError(
          "theta_solve: negative curvature direction found; coercivity "
          "lost (uniqueness condition or fractional-occupation assumption "
          "violated)");
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    z = metric_solve(f, r);
    const double rz_new = r.dot(z);
    if (std::sqrt(std::max(rz_new, 0.0)) <= tol * rz0) return x;
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return theta_solve_dense(sys, f, rhs);
}

namespace {

// Cached per-composition data for the recursion and the energy formula.
struct SeriesCache {
  const LatticeSystem* sys = nullptr;
  const BlockFrame* frame = nullptr;
  const std::vector<BlockCoefficient>* coeffs = nullptr;  // A^{(1)}, ...

  struct Entry {
    Matrix gamma_frame;
    Vector rho;     // site-basis density
    double tr_h0;   // Tr(H0 gamma)
  };
  std::map<std::vector<int>, Entry> entries;

  const Entry& get(const std::vector<int>& alpha) {
    auto it = entries.find(alpha);
    if (it != entries.end()) return it->second;
    std::vector<BlockCoefficient> args;
    args.reserve(alpha.size());
    for (int idx : alpha) args.push_back((*coeffs)[idx - 1]);
    Entry e;
    e.gamma_frame = gamma_l_frame(*frame, args);
    e.rho = frame_density(*frame, e.gamma_frame);
    e.tr_h0 =
        (frame->eigvals.array() * e.gamma_frame.diagonal().array()).sum();
    entries.emplace(alpha, e);
    return entries.at(alpha);
  }
};

double trace_h0(const BlockFrame& f, const Matrix& m_frame) {
  return (f.eigvals.array() * m_frame.diagonal().array()).sum();
}

}  // namespace

BlockCoefficient assemble_b(const LatticeSystem& sys, const BlockFrame& f,
                            const Vector& w, int order,
                            const std::vector<BlockCoefficient>& prior) {
  if (order < 1) throw InputError("assemble_b: order must be >= 1");
  if (static_cast<int>(prior.size()) < order - 1)
    throw InputError("assemble_b: missing lower-order coefficients");
  if (order == 1) {
    const Matrix m = to_frame(f, Matrix(w.asDiagonal()));
    return pair_with_gamma1(f, m);
  }

  const int k = order;
  SeriesCache cache{&sys, &f, &prior, {}};

  // Evaluates gamma_l with the probe coefficient placed at slot `spot`
  // (after swapping with the final slot), fixed arguments from `alpha`.
  auto probed_gamma = [&](const std::vector<int>& alpha, int spot,
                          const BlockCoefficient& probe) {
    const int l = static_cast<int>(alpha.size()) + 1;
    std::vector<BlockCoefficient> args;
    args.reserve(l);
    for (int idx : alpha) args.push_back(prior[idx - 1]);
    args.push_back(probe);
    std::swap(args[spot - 1], args[l - 1]);
    return gamma_l_frame(f, args);
  };

  // Fixed-density factors of the interaction cross terms: every
  // composition of a sub-order, parts capped at k-1 so the unknown
  // coefficient never appears.
  struct FixedTerm {
    std::vector<int> alpha;
    int total = 0;
    Vector coulomb;  // K rho_{gamma^alpha}
  };
  std::vector<FixedTerm> fixed;
  for (int s = 1; s <= k; ++s)
    for_each_composition(s, k - 1, [&](const std::vector<int>& alpha) {
      fixed.push_back({alpha, s, sys.kernel() * cache.get(alpha).rho});
    });

  const auto basis = tangent_basis(f);
  BlockCoefficient b = BlockCoefficient::zero(f);
  for (const auto& e : basis) {
    double val = 0.0;
    // mean-field curvature terms beyond quadratic
    for_each_composition(k, k - 1, [&](const std::vector<int>& alpha) {
      if (alpha.size() < 2) return;  // the quadratic part lives in Theta
      const int l = static_cast<int>(alpha.size()) + 1;
      for (int i = 1; i <= l; ++i)
        val += trace_h0(f, probed_gamma(alpha, i, e));
    });
    // interaction cross terms D(rho^alpha, rho_{gamma_l'(...,probe,...)})
    for (const auto& ft : fixed) {
      const int remaining = k - ft.total;
      if (remaining == 0) {
        // probe enters alone; total block count must still exceed two
        if (ft.alpha.size() >= 2)
          val += ft.coulomb.dot(frame_density(f, gamma_l_frame(f, {e})));
      } else {
        for_each_composition(
            remaining, k - 1, [&](const std::vector<int>& alpha_p) {
              const int lp = static_cast<int>(alpha_p.size()) + 1;
              if (static_cast<int>(ft.alpha.size()) + lp < 3) return;
              for (int i = 1; i <= lp; ++i)
                val += ft.coulomb.dot(
                    frame_density(f, probed_gamma(alpha_p, i, e)));
            });
      }
    }
    // perturbation terms w' rho_{gamma_l(...,probe,...)}
    for_each_composition(k - 1, k - 1, [&](const std::vector<int>& alpha) {
      const int l = static_cast<int>(alpha.size()) + 1;
      for (int i = 1; i <= l; ++i)
        val += w.dot(frame_density(f, probed_gamma(alpha, i, e)));
    });
    b += val * e;
  }
  return b;
}

DegSeries expand_degenerate(const LatticeSystem& sys, const GroundState& gs,
                            const Vector& w, int order, int order_cap) {
  if (order < 1) throw InputError("expand_degenerate: order must be >= 1");
  if (order > order_cap)
    throw DomainError(
        "expand_degenerate: requested order exceeds the cap (term count "
        "grows combinatorially); raise order_cap explicitly to override");
  if (w.size() != sys.n_sites())
    throw InputError("expand_degenerate: potential length mismatch");
  if (gs.n_partial < 1)
    throw DomainError(
        "expand_degenerate: ground state has no partially occupied Fermi "
        "cluster; use the non-degenerate expansion");

  DegSeries series;
  series.order = order;
  series.frame = frame_of(gs);
  series.frame.validate();

  for (int k = 1; k <= order; ++k) {
    BlockCoefficient b = assemble_b(sys, series.frame, w, k, series.a);
    BlockCoefficient a = theta_solve(sys, series.frame, -0.5 * b);
    series.b.push_back(std::move(b));
    series.a.push_back(std::move(a));
  }

  SeriesCache cache{&sys, &series.frame, &series.a, {}};

  // density-matrix coefficients: all replicated-index terms of total order k
  for (int k = 1; k <= order; ++k) {
    Matrix g = Matrix::Zero(sys.n_sites(), sys.n_sites());
    for_each_composition(k, order, [&](const std::vector<int>& alpha) {
      g += cache.get(alpha).gamma_frame;
    });
    series.gamma.push_back(to_site(series.frame, g));
  }

  // energy coefficients through order 2*order+1; the coefficient of order m
  // only involves compositions with parts <= floor(m/2)
  const Vector rho0 = gs.density();
  series.energy.resize(2 * order + 1, 0.0);
  series.energy[0] = rho0.dot(w) + cache.get({1}).tr_h0;
  for (int m = 2; m <= 2 * order + 1; ++m) {
    const int cutoff = m / 2;
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for_each_composition(m, cutoff, [&](const std::vector<int>& alpha) {
      if (alpha.size() >= 2) t1 += cache.get(alpha).tr_h0;
    });
    for (int s = 1; s <= m - 1; ++s) {
      std::vector<const Vector*> left;
      for_each_composition(s, cutoff, [&](const std::vector<int>& alpha) {
        left.push_back(&cache.get(alpha).rho);
      });
      if (left.empty()) continue;
      for_each_composition(m - s, cutoff,
                           [&](const std::vector<int>& alpha) {
                             const Vector& rr = cache.get(alpha).rho;
                             const Vector krr = sys.kernel() * rr;
                             for (const Vector* lr : left)
                               t2 += 0.5 * lr->dot(krr);
                           });
    }
    for_each_composition(m - 1, cutoff, [&](const std::vector<int>& alpha) {
      t3 += w.dot(cache.get(alpha).rho);
    });
    series.energy[m - 1] = t1 + t2 + t3;
  }
  return series;
}

double deg_energy_direct(const LatticeSystem& sys, const GroundState& gs,
                         const DegSeries& series, const Vector& w, int k) {
  if (k < 1 || k > series.order)
    throw InputError("deg_energy_direct: order out of range");
  const Vector rho0 = gs.density();
  auto rho_of = [&](int j) -> Vector {
    return j == 0 ? rho0 : series.gamma[j - 1].diagonal();
  };
  double e = (gs.h0.array() * series.gamma[k - 1].array()).sum();
  for (int l = 1; l <= k - 1; ++l)
    e += 0.5 * rho_of(l).dot(sys.kernel() * rho_of(k - l));
  e += w.dot(rho_of(k - 1));
  return e;
}

BlockCoefficient chart_gradient_fd(const LatticeSystem& sys,
                                   const BlockFrame& f, const Vector& w,
                                   const BlockCoefficient& a, double step) {
  BlockCoefficient g = BlockCoefficient::zero(f);
  for (const auto& e : tangent_basis(f)) {
    const double ep = energy(sys, gamma_of(f, a + step * e, 1.0), w);
    const double em = energy(sys, gamma_of(f, a - step * e, 1.0), w);
    g += ((ep - em) / (2.0 * step)) * e;
  }
  return g;
}

}  // namespace rhfpt
