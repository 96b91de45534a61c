#include "rhfpt/mo_pt.hpp"

#include <Eigen/LU>
#include <cmath>

namespace rhfpt {

namespace {

void require_simple_occupied(const GroundState& gs) {
  const int ne = gs.n_electrons;
  if (gs.n_partial != 0)
    throw DomainError(
        "coupled-perturbed system: partially occupied Fermi cluster");
  const double tol =
      1e-8 * std::max(1.0, gs.eigvals(gs.n_sites() - 1) - gs.eigvals(0));
  for (int i = 0; i + 1 < ne; ++i)
    if (gs.eigvals(i + 1) - gs.eigvals(i) <= tol)
      throw DomainError(
          "coupled-perturbed system: occupied spectrum is not simple");
  if (gs.eigvals(ne - 1) >= gs.fermi_level)
    throw DomainError(
        "coupled-perturbed system: occupied level at the Fermi level");
}

}  // namespace

Matrix MOSeries::gamma_coefficient(int k) const {
  if (k < 0 || k > order)
    throw InputError("gamma_coefficient: order out of range");
  const int n = static_cast<int>(phi[0].rows());
  Matrix g = Matrix::Zero(n, n);
  for (int l = 0; l <= k; ++l)
    g += phi[l] * phi[k - l].transpose();
  return g;
}

CPSolution solve_cp_system(const LatticeSystem& sys, const GroundState& gs,
                           const Matrix& f, const Vector& alpha) {
  require_simple_occupied(gs);
  const int n = sys.n_sites();
  const int ne = gs.n_electrons;
  if (f.rows() != n || f.cols() != ne)
    throw InputError("solve_cp_system: right-hand side shape mismatch");
  if (alpha.size() != ne)
    throw InputError("solve_cp_system: constraint length mismatch");

  const int dim = n * ne + ne;
  Matrix s = Matrix::Zero(dim, dim);
  Vector rhs(dim);
  const Matrix& k = sys.kernel();
  for (int i = 0; i < ne; ++i) {
    const Vector phi_i = gs.eigvecs.col(i);
    // (h0 - eps_i) on the diagonal block
    s.block(i * n, i * n, n, n) =
        gs.h0 - gs.eigvals(i) * Matrix::Identity(n, n);
    // orbital-coupling operator: psi -> 2 phi_i o K (phi_j o psi)
    for (int j = 0; j < ne; ++j) {
      const Vector phi_j = gs.eigvecs.col(j);
      s.block(i * n, j * n, n, n) +=
          2.0 * phi_i.asDiagonal() * k * Matrix(phi_j.asDiagonal());
    }
    s.block(i * n, n * ne + i, n, 1) = -phi_i;
    s.block(n * ne + i, i * n, 1, n) = phi_i.transpose();
    rhs.segment(i * n, n) = f.col(i);
    rhs(n * ne + i) = alpha(i);
  }

  Eigen::FullPivLU<Matrix> lu(s);
  if (!lu.isInvertible())
    throw StructuralError(
        "solve_cp_system: assembled saddle system is singular, which the "
        "simple-spectrum precondition should rule out");
  const Vector sol = lu.solve(rhs);

  CPSolution out;
  out.psi.resize(n, ne);
  out.eta.resize(ne);
  for (int i = 0; i < ne; ++i) {
    out.psi.col(i) = sol.segment(i * n, n);
    out.eta(i) = sol(n * ne + i);
  }
  return out;
}

MOSeries mo_expand(const LatticeSystem& sys, const GroundState& gs,
                   const Vector& w, int order) {
  require_simple_occupied(gs);
  if (order < 1) throw InputError("mo_expand: order must be >= 1");
  if (w.size() != sys.n_sites())
    throw InputError("mo_expand: potential length mismatch");
  const int n = sys.n_sites();
  const int ne = gs.n_electrons;

  MOSeries s;
  s.order = order;
  s.phi.push_back(gs.eigvecs.leftCols(ne));
  s.eps.push_back(gs.eigvals.head(ne));

  for (int k = 1; k <= order; ++k) {
    Matrix f = Matrix::Zero(n, ne);
    for (int i = 0; i < ne; ++i)
      f.col(i) -= w.cwiseProduct(s.phi[k - 1].col(i));
    // Screened lower-order products. Orders may be zero except that the
    // m = 0 pair is the reference Hartree term inside h0 and the
    // single-order-k pairs are the orbital-coupling operator on the
    // left-hand side; both are excluded here by the caps.
    for (int l1 = 0; l1 <= k - 1; ++l1)
      for (int l2 = (l1 == 0 ? 1 : 0); l2 <= k - 1 && l1 + l2 <= k; ++l2) {
        const int l3 = k - l1 - l2;
        if (l3 < 0 || l3 > k - 1) continue;
        Vector pair_density = Vector::Zero(n);
        for (int j = 0; j < ne; ++j)
          pair_density +=
              s.phi[l1].col(j).cwiseProduct(s.phi[l2].col(j));
        const Vector pot = sys.kernel() * pair_density;
        for (int i = 0; i < ne; ++i)
          f.col(i) -= pot.cwiseProduct(s.phi[l3].col(i));
      }
    for (int l = 1; l <= k - 1; ++l)
      for (int i = 0; i < ne; ++i)
        f.col(i) += s.eps[l](i) * s.phi[k - l].col(i);

    Vector alpha = Vector::Zero(ne);
    for (int l = 1; l <= k - 1; ++l)
      for (int i = 0; i < ne; ++i)
        alpha(i) -= 0.5 * s.phi[l].col(i).dot(s.phi[k - l].col(i));

    const CPSolution sol = solve_cp_system(sys, gs, f, alpha);
    s.phi.push_back(sol.psi);
    s.eps.push_back(sol.eta);
  }
  return s;
}

std::vector<double> orthogonality_defects(const MOSeries& ms) {
  const int ne = static_cast<int>(ms.phi[0].cols());
  std::vector<double> defects(ms.order + 1, 0.0);
  for (int m = 0; m <= ms.order; ++m) {
    double worst = 0.0;
    for (int i = 0; i < ne; ++i)
      for (int j = 0; j < ne; ++j) {
        double sum = 0.0;
        for (int l = 0; l <= m; ++l)
          sum += ms.phi[l].col(i).dot(ms.phi[m - l].col(j));
        if (m == 0 && i == j) sum -= 1.0;
        worst = std::max(worst, std::abs(sum));
      }
    defects[m] = worst;
  }
  return defects;
}

}  // namespace rhfpt
