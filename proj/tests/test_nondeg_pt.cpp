#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "rhfpt/config.hpp"
#include "rhfpt/nondeg_pt.hpp"
#include "test_helpers.hpp"

using namespace rhfpt;
namespace tt = rhfpt::testing;

namespace {

/// Random gapped reference state on a random-kinetic system.
std::pair<LatticeSystem, GroundState> random_gapped(int n, int ne,
                                                    unsigned seed) {
  const Matrix kinetic = tt::random_symmetric(n, seed);
  Matrix b = tt::random_symmetric(n, seed + 7);
  const Matrix kernel =
      0.5 * (b * b.transpose() / n + Matrix::Identity(n, n));
  LatticeSystem sys(kinetic, Vector::Zero(n), kernel, ne);
  GroundState gs = synthetic_ground_state(sys, ne, Matrix::Zero(0, 0));
  return {std::move(sys), std::move(gs)};
}

/// Spectral projector onto the lowest ne eigenvectors.
Matrix lowest_projector(const Matrix& h, int ne) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Matrix cols = es.eigenvectors().leftCols(ne);
  return cols * cols.transpose();
}

}  // namespace

TEST_CASE("contour operator on the two-level textbook case") {
  const int n = 2;
  Matrix kinetic(n, n);
  kinetic << -1.0, 0.0, 0.0, 1.0;
  const LatticeSystem sys(kinetic, Vector::Zero(n),
                          Matrix::Identity(n, n), 1);
  const GroundState gs = synthetic_ground_state(sys, 1, Matrix::Zero(0, 0));
  Matrix v(n, n);
  v << 0.0, 1.0, 1.0, 0.0;

  const Matrix q = contour_q_operator(
      gs, {v}, ContourSpec::enclosing_occupied(gs), 1e-13);
  Matrix expected(n, n);
  expected << 0.0, -0.5, -0.5, 0.0;
  CHECK((q - expected).cwiseAbs().maxCoeff() < 1e-11);

  // independent oracle: finite difference of the spectral projector
  const double t = 1e-6;
  const Matrix fd = (lowest_projector(kinetic + t * v, 1) -
                     lowest_projector(kinetic - t * v, 1)) /
                    (2.0 * t);
  CHECK((q - fd).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("contour operator is multilinear and trace-free") {
  auto [sys, gs] = random_gapped(6, 2, 3);
  const int n = sys.n_sites();
  SUBCASE("zero argument annihilates") {
    const Vector v1 = tt::random_vector(n, 5);
    const Matrix q = contour_q(gs, {v1, Vector::Zero(n)});
    CHECK(q.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("traces vanish pointwise up to order two") {
    for (int k = 1; k <= 2; ++k) {
      std::vector<Vector> vs;
      for (int j = 0; j < k; ++j)
        vs.push_back(tt::random_vector(n, 10 * k + j));
      const Matrix q = contour_q(gs, vs);
      CHECK(std::abs(q.trace()) < 1e-10);
    }
  }
  SUBCASE("traces vanish for replicated arguments at any order") {
    for (int k = 3; k <= 4; ++k) {
      const Vector v = tt::random_vector(n, 10 * k);
      const Matrix q = contour_q(gs, std::vector<Vector>(k, v));
      CHECK(std::abs(q.trace()) < 1e-10);
    }
  }
  SUBCASE("traces vanish for cyclic sums at higher order") {
    // a single ordering of three distinct arguments carries a nonzero
    // trace; only the cyclic symmetrization is trace-free, and that is
    // what the composition sums of the recursion assemble
    for (int k = 3; k <= 4; ++k) {
      std::vector<Vector> vs;
      for (int j = 0; j < k; ++j)
        vs.push_back(tt::random_vector(n, 10 * k + j));
      double cyclic = 0.0;
      for (int shift = 0; shift < k; ++shift) {
        std::vector<Vector> rotated;
        for (int j = 0; j < k; ++j) rotated.push_back(vs[(j + shift) % k]);
        cyclic += contour_q(gs, rotated).trace();
      }
      CHECK(std::abs(cyclic) < 1e-10);
    }
  }
}

TEST_CASE("contour operators are low rank") {
  auto [sys, gs] = random_gapped(8, 2, 17);
  const int n = sys.n_sites();
  const int ne = sys.n_electrons();
  for (int k = 1; k <= 2; ++k) {
    std::vector<Vector> vs;
    for (int j = 0; j < k; ++j) vs.push_back(tt::random_vector(n, 60 + j));
    const Matrix q = contour_q(gs, vs);
    Eigen::JacobiSVD<Matrix> svd(q);
    const Vector sv = svd.singularValues();
    const int bound = 2 * std::min(k * ne, n);
    for (int j = bound; j < n; ++j) CHECK(sv(j) <= 1e-10 * sv(0));
  }
}

TEST_CASE("quadrature agrees with the divided-difference oracle") {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    auto [sys, gs] = random_gapped(8, 3, seed);
    const int n = sys.n_sites();
    const Vector v1 = tt::random_vector(n, 100 + seed);
    const Vector v2 = tt::random_vector(n, 200 + seed);
    const Matrix q1 = contour_q(gs, {v1});
    const Matrix q1_dd = divided_difference_q(gs, {v1});
    CHECK((q1 - q1_dd).cwiseAbs().maxCoeff() < 1e-9);
    const Matrix q2 = contour_q(gs, {v1, v2});
    const Matrix q2_dd = divided_difference_q(gs, {v1, v2});
    CHECK((q2 - q2_dd).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("first-order projector response from a finite difference") {
  auto [sys, gs] = random_gapped(7, 3, 11);
  const Vector v = tt::random_vector(7, 42);
  const Matrix q = contour_q(gs, {v});
  const double t = 1e-6;
  const Matrix fd =
      (lowest_projector(gs.h0 + t * Matrix(v.asDiagonal()), 3) -
       lowest_projector(gs.h0 - t * Matrix(v.asDiagonal()), 3)) /
      (2.0 * t);
  CHECK((q - fd).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("response map is symmetric and positive in the interaction dot") {
  const auto sys = make_ring(tt::nondeg_ring_params());
  const GroundState gs = solve_scf(sys);
  const int n = sys.n_sites();
  SUBCASE("zero maps to zero") {
    CHECK(apply_response(sys, gs, Vector::Zero(n)).norm() == 0.0);
  }
  SUBCASE("symmetry") {
    for (unsigned seed = 1; seed <= 6; ++seed) {
      const Vector r1 = tt::random_vector(n, seed);
      const Vector r2 = tt::random_vector(n, 30 + seed);
      const double lhs = sys.coulomb_dot(apply_response(sys, gs, r1), r2);
      const double rhs = sys.coulomb_dot(apply_response(sys, gs, r2), r1);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
  SUBCASE("positivity") {
    for (unsigned seed = 1; seed <= 20; ++seed) {
      const Vector r = tt::random_vector(n, 50 + seed);
      CHECK(sys.coulomb_dot(apply_response(sys, gs, r), r) >= -1e-12);
    }
  }
}

TEST_CASE("screened solve") {
  const auto sys = make_ring(tt::nondeg_ring_params());
  const GroundState gs = solve_scf(sys);
  const int n = sys.n_sites();
  SUBCASE("zero right-hand side") {
    CHECK(solve_screened(sys, gs, Vector::Zero(n)).norm() == 0.0);
  }
  SUBCASE("weak interaction limit is the identity") {
    RingParams p = tt::nondeg_ring_params();
    p.kernel_scale = 1e-9;
    const auto weak = make_ring(p);
    const GroundState wgs = solve_scf(weak);
    const Vector rhs = tt::random_vector(n, 9);
    const Vector rho = solve_screened(weak, wgs, rhs);
    CHECK((rho - rhs).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("residual after applying the operator back") {
    ScreenedSolveStats stats;
    const Vector rhs = tt::random_vector(n, 77);
    const Vector rho = solve_screened(sys, gs, rhs, 1e-11, &stats);
    const Vector back = rho + apply_response(sys, gs, rho);
    CHECK(sys.coulomb_norm(back - rhs) < 1e-9);
    CHECK(stats.iterations <= n);
  }
}

TEST_CASE("expansion basics") {
  const auto sys = make_ring(tt::nondeg_ring_params());
  const GroundState gs = solve_scf(sys);
  const int n = sys.n_sites();
  const Vector w = random_potential(sys, 5, 0.5);

  SUBCASE("zero perturbation gives a zero series") {
    const NondegSeries s = expand(sys, gs, Vector::Zero(n), 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(s.rho[k].norm() < 1e-12);
      CHECK(s.gamma[k].norm() < 1e-11);
      CHECK(std::abs(s.energy[k]) < 1e-12);
    }
  }
  const NondegSeries s = expand(sys, gs, w, 3);
  SUBCASE("first-order energy is the density pairing") {
    CHECK(std::abs(s.energy[0] - gs.density().dot(w)) <
          1e-10 * std::abs(s.energy[0]));
  }
  SUBCASE("all corrections are traceless") {
    for (int k = 0; k < 3; ++k) CHECK(std::abs(s.gamma[k].trace()) < 1e-10);
  }
  SUBCASE("energy coefficients integrate the density response") {
    // Feynman-type identity: k E^{(k)} = w' rho^{(k-1)}
    CHECK(std::abs(2.0 * s.energy[1] - w.dot(s.rho[0])) < 1e-10);
    CHECK(std::abs(3.0 * s.energy[2] - w.dot(s.rho[1])) < 1e-9);
  }
  SUBCASE("series converges to the perturbed minimizer") {
    for (const double beta : {0.1, 0.05}) {
      ScfOptions opts;
      opts.tol_residual = 1e-13;
      const GroundState ref = solve_scf(sys, (beta * w).eval(), opts);
      const Matrix err3 = ref.gamma0 - s.truncated_gamma(gs.gamma0, beta, 3);
      const Matrix err1 = ref.gamma0 - s.truncated_gamma(gs.gamma0, beta, 1);
      CHECK(err3.norm() < 10.0 * std::pow(beta, 4));
      CHECK(err1.norm() < 10.0 * std::pow(beta, 2));
      CHECK(err3.norm() < err1.norm());
    }
  }
  SUBCASE("truncation is almost idempotent") {
    // the exact minimizer is a projector, so the squared truncation misses
    // itself by the same order as the truncation error
    for (int n = 1; n <= 2; ++n) {
      std::vector<double> defects;
      const std::vector<double> betas = {0.1, 0.05, 0.025};
      for (const double beta : betas) {
        const Matrix g = s.truncated_gamma(gs.gamma0, beta, n);
        defects.push_back((g * g - g).norm());
      }
      for (size_t i = 0; i + 1 < betas.size(); ++i) {
        const double expected = std::pow(betas[i + 1] / betas[i], n + 1);
        CHECK(defects[i + 1] / defects[i] < 1.6 * expected);
      }
    }
  }
  SUBCASE("order cap refusal") {
    CHECK_THROWS_AS(expand(sys, gs, w, 7), DomainError);
  }
  SUBCASE("a circle touching the spectrum is rejected") {
    ContourSpec c;
    c.center = 0.5 * (gs.eigvals(0) - 1.0 + gs.eigvals(0));
    c.radius = 0.5;
    CHECK_THROWS_AS(contour_q(gs, {w}, c), InputError);
  }
  SUBCASE("degenerate states are rejected") {
    const auto dsys = make_ring(tt::deg_ring_params());
    const GroundState dgs = solve_scf(dsys, tt::deg_ring_scf_options(8));
    CHECK_THROWS_AS(expand(dsys, dgs, w, 1), DomainError);
  }
}
