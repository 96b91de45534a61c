#include "rhfpt/nondeg_pt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "rhfpt/compositions.hpp"

namespace rhfpt {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

void require_gapped(const GroundState& gs, const char* who) {
  if (gs.n_partial != 0)
    throw DomainError(std::string(who) +
                      ": ground state has a partially occupied Fermi "
                      "cluster; use the degenerate machinery");
}

}  // namespace

ContourSpec ContourSpec::enclosing_occupied(const GroundState& gs,
                                            int n_quad) {
  ContourSpec c;
  const double left = gs.eigvals(0) - 1.0;
  const double right = gs.fermi_level;
  c.center = 0.5 * (left + right);
  c.radius = 0.5 * (right - left);
  c.n_quad = n_quad;
  return c;
}

ContourSpec ContourSpec::tight(const GroundState& gs, double margin,
                               int n_quad) {
  ContourSpec c;
  const double span =
      std::max(gs.fermi_level - gs.eigvals(0), 0.5 * gs.gap_above);
  const double left = gs.eigvals(0) - margin * span;
  const double right = gs.fermi_level;
  c.center = 0.5 * (left + right);
  c.radius = 0.5 * (right - left);
  c.n_quad = n_quad;
  return c;
}

double ContourSpec::spectrum_distance(const Vector& eigvals) const {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < eigvals.size(); ++i)
    d = std::min(d, std::abs(std::abs(eigvals(i) - center) - radius));
  return d;
}

namespace {

/// Single trapezoid evaluation of the multilinear contour operator with
/// n_quad points on the circle, already transformed to the eigenbasis.
/// Resolvents are diagonal there, so the linear case costs one scaling per
/// point and the k-linear case k-1 products; points below the real axis
/// are conjugates of those above, so only half the circle is visited.
Matrix contour_q_eig(const Vector& eigvals, const std::vector<Matrix>& v_eig,
                     const ContourSpec& c, int n_quad) {
  const int n = static_cast<int>(eigvals.size());
  const int k = static_cast<int>(v_eig.size());
  if (n_quad % 2) ++n_quad;
  ComplexMatrix acc = ComplexMatrix::Zero(n, n);
  for (int m = 0; m < n_quad / 2; ++m) {
    const double theta = 2.0 * M_PI * (m + 0.5) / n_quad;
    const std::complex<double> phase =
        std::exp(std::complex<double>(0.0, theta));
    const std::complex<double> z = c.center + c.radius * phase;
    const ComplexVector res =
        (z - eigvals.array().cast<std::complex<double>>()).inverse();
    const std::complex<double> weight = c.radius * phase / double(n_quad);
    if (k == 1) {
      acc.noalias() +=
          weight * (res * res.transpose()).cwiseProduct(v_eig[0]);
      continue;
    }
    ComplexMatrix term = res.asDiagonal() * v_eig[0] * res.asDiagonal();
    for (int l = 1; l < k; ++l)
      term = (term * v_eig[l]) * res.asDiagonal();
    acc += weight * term;
  }
  Matrix out = 2.0 * acc.real();
  return 0.5 * (out + out.transpose());
}

std::vector<Matrix> to_eigenbasis(const GroundState& gs,
                                  const std::vector<Matrix>& vs) {
  std::vector<Matrix> v_eig;
  v_eig.reserve(vs.size());
  for (const Matrix& v : vs)
    v_eig.push_back(gs.eigvecs.transpose() * v * gs.eigvecs);
  return v_eig;
}

Matrix contour_q_fixed(const GroundState& gs, const std::vector<Matrix>& vs,
                       const ContourSpec& c, int n_quad) {
  const Matrix out_eig =
      contour_q_eig(gs.eigvals, to_eigenbasis(gs, vs), c, n_quad);
  return gs.eigvecs * out_eig * gs.eigvecs.transpose();
}

Matrix contour_q_refined(const GroundState& gs, const std::vector<Matrix>& vs,
                         const ContourSpec& c, double tol_q,
                         int* settled_n_quad) {
  require_gapped(gs, "contour_q");
  if (vs.empty()) throw InputError("contour_q: needs at least one potential");
  for (const Matrix& v : vs)
    if (v.rows() != gs.n_sites() || v.cols() != gs.n_sites())
      throw InputError("contour_q: operator shape mismatch");
  if (c.radius <= 0) throw InputError("contour_q: radius must be positive");
  if (c.spectrum_distance(gs.eigvals) < 1e-8)
    throw InputError("contour_q: quadrature circle touches the spectrum");

  // Work with unit-size arguments so the refinement tolerance is relative;
  // multilinearity restores the overall scale.
  std::vector<Matrix> unit = vs;
  double scale = 1.0;
  for (Matrix& v : unit) {
    const double nrm = v.cwiseAbs().maxCoeff();
    if (nrm == 0.0) return Matrix::Zero(gs.n_sites(), gs.n_sites());
    v /= nrm;
    scale *= nrm;
  }
  const std::vector<Matrix> unit_eig = to_eigenbasis(gs, unit);

  int n_quad = std::max(8, c.n_quad);
  Matrix coarse = contour_q_eig(gs.eigvals, unit_eig, c, n_quad);
  const int n_quad_max = 1 << 15;
  while (n_quad < n_quad_max) {
    n_quad *= 2;
    const Matrix fine = contour_q_eig(gs.eigvals, unit_eig, c, n_quad);
    const double diff = (fine - coarse).cwiseAbs().maxCoeff();
    coarse = fine;
    if (diff <= tol_q) {
      if (settled_n_quad) *settled_n_quad = n_quad;
      return scale * gs.eigvecs * coarse * gs.eigvecs.transpose();
    }
  }
  throw AccuracyError(
      "contour_q: quadrature did not settle under refinement");
}

/// Refines once to find the quadrature order this spectrum/contour needs,
/// then reuses that order: the pole structure does not depend on the
/// potential arguments.
struct CalibratedContour {
  const GroundState* gs;
  ContourSpec spec;
  double tol;
  int n_quad = 0;

  Matrix eval(const std::vector<Matrix>& ops) {
    if (n_quad == 0) return contour_q_refined(*gs, ops, spec, tol, &n_quad);
    std::vector<Matrix> unit = ops;
    double scale = 1.0;
    for (Matrix& v : unit) {
      const double nrm = v.cwiseAbs().maxCoeff();
      if (nrm == 0.0) return Matrix::Zero(gs->n_sites(), gs->n_sites());
      v /= nrm;
      scale *= nrm;
    }
    return scale * contour_q_fixed(*gs, unit, spec, n_quad);
  }

  Matrix eval(const std::vector<Vector>& vs) {
    std::vector<Matrix> ops;
    ops.reserve(vs.size());
    for (const Vector& v : vs) ops.push_back(v.asDiagonal());
    return eval(ops);
  }
};

}  // namespace

Matrix contour_q_operator(const GroundState& gs,
                          const std::vector<Matrix>& vs, const ContourSpec& c,
                          double tol_q) {
  return contour_q_refined(gs, vs, c, tol_q, nullptr);
}

Matrix contour_q(const GroundState& gs, const std::vector<Vector>& vs,
                 const ContourSpec& c, double tol_q) {
  std::vector<Matrix> ops;
  ops.reserve(vs.size());
  for (const Vector& v : vs) {
    if (v.size() != gs.n_sites())
      throw InputError("contour_q: potential length mismatch");
    ops.push_back(v.asDiagonal());
  }
  return contour_q_operator(gs, ops, c, tol_q);
}

Matrix contour_q(const GroundState& gs, const std::vector<Vector>& vs) {
  return contour_q(gs, vs, ContourSpec::enclosing_occupied(gs));
}

namespace {

/// Divided differences of the occupation step function (1 on the occupied
/// part of the spectrum, 0 above). Locally constant, so confluent values
/// vanish; points are passed unsorted.
double step_divided_difference(std::vector<double> x,
                               std::vector<int> occupied, double merge_tol) {
  const size_t k = x.size();
  if (k == 1) return occupied[0] ? 1.0 : 0.0;
  // symmetric in the nodes: sort so equal nodes become adjacent
  std::vector<size_t> idx(k);
  for (size_t i = 0; i < k; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> xs(k);
  std::vector<int> os(k);
  for (size_t i = 0; i < k; ++i) {
    xs[i] = x[idx[i]];
    os[i] = occupied[idx[i]];
  }
  if (std::abs(xs[k - 1] - xs[0]) <= merge_tol)
    return 0.0;  // all nodes coincide: derivative of a constant
  std::vector<double> xl(xs.begin(), xs.end() - 1);
  std::vector<int> ol(os.begin(), os.end() - 1);
  std::vector<double> xr(xs.begin() + 1, xs.end());
  std::vector<int> orr(os.begin() + 1, os.end());
  return (step_divided_difference(xl, ol, merge_tol) -
          step_divided_difference(xr, orr, merge_tol)) /
         (xs[0] - xs[k - 1]);
}

}  // namespace

Matrix divided_difference_q_operator(const GroundState& gs,
                                     const std::vector<Matrix>& vs) {
  require_gapped(gs, "divided_difference_q");
  const int k = static_cast<int>(vs.size());
  if (k < 1 || k > 2)
    throw InputError(
        "divided_difference_q: implemented for one or two potentials only");
  const int n = gs.n_sites();
  const Matrix& u = gs.eigvecs;
  const double merge_tol =
      1e-10 * std::max(1.0, gs.eigvals(n - 1) - gs.eigvals(0));
  auto occ = [&](int i) { return gs.eigvals(i) < gs.fermi_level ? 1 : 0; };

  Matrix out_eig(n, n);
  if (k == 1) {
    const Matrix v = u.transpose() * vs[0] * u;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out_eig(i, j) = v(i, j) * step_divided_difference(
                                      {gs.eigvals(i), gs.eigvals(j)},
                                      {occ(i), occ(j)}, merge_tol);
  } else {
    const Matrix v1 = u.transpose() * vs[0] * u;
    const Matrix v2 = u.transpose() * vs[1] * u;
    out_eig.setZero();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int m = 0; m < n; ++m)
          s += v1(i, m) * v2(m, j) *
               step_divided_difference(
                   {gs.eigvals(i), gs.eigvals(m), gs.eigvals(j)},
                   {occ(i), occ(m), occ(j)}, merge_tol);
        out_eig(i, j) = s;
      }
  }
  Matrix out = u * out_eig * u.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix divided_difference_q(const GroundState& gs,
                            const std::vector<Vector>& vs) {
  std::vector<Matrix> ops;
  ops.reserve(vs.size());
  for (const Vector& v : vs) {
    if (v.size() != gs.n_sites())
      throw InputError("divided_difference_q: potential length mismatch");
    ops.push_back(v.asDiagonal());
  }
  return divided_difference_q_operator(gs, ops);
}

Vector apply_response(const LatticeSystem& sys, const GroundState& gs,
                      const Vector& rho) {
  if (rho.size() != sys.n_sites())
    throw InputError("apply_response: density length mismatch");
  const Vector coulomb = sys.kernel() * rho;
  return -contour_q(gs, {coulomb}).diagonal();
}

Vector solve_screened(const LatticeSystem& sys, const GroundState& gs,
                      const Vector& rhs, double tol,
                      ScreenedSolveStats* stats) {
  const int n = sys.n_sites();
  if (rhs.size() != n)
    throw InputError("solve_screened: right-hand side length mismatch");
  auto cdot = [&](const Vector& a, const Vector& b) {
    return sys.coulomb_dot(a, b);
  };
  CalibratedContour contour{&gs, ContourSpec::tight(gs), 1e-11, 0};
  auto apply = [&](const Vector& x) -> Vector {
    const Vector coulomb = sys.kernel() * x;
    return x - contour.eval(std::vector<Vector>{coulomb}).diagonal();
  };
  Vector x = Vector::Zero(n);
  Vector r = rhs;
  const double rhs_norm = std::sqrt(std::max(0.0, cdot(rhs, rhs)));
  if (rhs_norm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return x;
  }
  Vector p = r;
  double rr = cdot(r, r);
  std::vector<double> history;
  const int max_iter = 2 * n + 10;
  for (int it = 0; it < max_iter; ++it) {
    const Vector ap = apply(p);
    const double pap = cdot(p, ap);
    if (pap <= 0)
      throw StructuralError(
          "solve_screened: the screened operator lost positivity");
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = cdot(r, r);
    history.push_back(std::sqrt(std::max(0.0, rr_new)) / rhs_norm);
    if (history.back() <= tol) {
      if (stats) *stats = {it + 1, history.back()};
      return x;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  std::string msg = "solve_screened: conjugate gradients stagnated; last "
                    "relative residuals:";
  const size_t tail = std::min<size_t>(history.size(), 5);
  for (size_t i = history.size() - tail; i < history.size(); ++i)
    msg += " " + std::to_string(history[i]);
  throw ConvergenceError(msg, history.empty() ? 1.0 : history.back());
}

Matrix NondegSeries::truncated_gamma(const Matrix& gamma0, double beta,
                                     int n) const {
  Matrix g = gamma0;
  double b = 1.0;
  for (int k = 1; k <= n && k <= order; ++k) {
    b *= beta;
    g += b * gamma[k - 1];
  }
  return g;
}

double NondegSeries::truncated_energy(double energy0, double beta,
                                      int n) const {
  double e = energy0;
  double b = 1.0;
  for (int k = 1; k <= n && k <= order; ++k) {
    b *= beta;
    e += b * energy[k - 1];
  }
  return e;
}

NondegSeries expand(const LatticeSystem& sys, const GroundState& gs,
                    const Vector& w, int order, int order_cap) {
  require_gapped(gs, "expand");
  if (order < 1) throw InputError("expand: order must be >= 1");
  if (order > order_cap)
    throw DomainError(
        "expand: requested order exceeds the cap (composition count grows "
        "as 2^k); raise order_cap explicitly to override");
  if (w.size() != sys.n_sites())
    throw InputError("expand: potential length mismatch");

  CalibratedContour contour{&gs, ContourSpec::tight(gs), 1e-11, 0};
  const Vector rho0 = gs.density();

  NondegSeries s;
  s.order = order;
  for (int k = 1; k <= order; ++k) {
    Matrix q_tilde;
    if (k == 1) {
      q_tilde = contour.eval(std::vector<Vector>{w});
    } else {
      q_tilde = Matrix::Zero(sys.n_sites(), sys.n_sites());
      for_each_composition(k, k - 1, [&](const std::vector<int>& parts) {
        if (parts.size() < 2) return;
        std::vector<Vector> args;
        args.reserve(parts.size());
        for (int j : parts) args.push_back(s.w_eff[j - 1]);
        q_tilde += contour.eval(args);
      });
    }
    const Vector rho_tilde = q_tilde.diagonal();
    const Vector rho_k = solve_screened(sys, gs, rho_tilde);
    Vector w_k = sys.kernel() * rho_k;
    if (k == 1) w_k += w;
    // order k of the resolvent expansion: the screened potential plus the
    // nested lower-order blocks, which only exist from second order on
    Matrix gamma_k = contour.eval(std::vector<Vector>{w_k});
    if (k >= 2) gamma_k += q_tilde;

    double e_k = (gs.h0.array() * gamma_k.array()).sum();
    for (int l = 1; l <= k - 1; ++l)
      e_k += 0.5 * s.rho[l - 1].dot(sys.kernel() * s.rho[k - l - 1]);
    e_k += w.dot(k == 1 ? rho0 : s.rho[k - 2]);

    s.q_tilde.push_back(std::move(q_tilde));
    s.rho.push_back(rho_k);
    s.w_eff.push_back(std::move(w_k));
    s.gamma.push_back(gamma_k);
    s.energy.push_back(e_k);
  }
  return s;
}

}  // namespace rhfpt
