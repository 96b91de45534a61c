#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "rhfpt/config.hpp"
#include "rhfpt/deg_pt.hpp"
#include "test_helpers.hpp"

using namespace rhfpt;
namespace tt = rhfpt::testing;

namespace {

struct DegFixture {
  LatticeSystem sys;
  GroundState gs;
  BlockFrame frame;

  DegFixture()
      : sys(make_ring(tt::deg_ring_params())),
        gs(solve_scf(sys, tt::deg_ring_scf_options(8))),
        frame(frame_of(gs)) {}
};

/// Synthetic frame with one level per block and a tiny kernel, so the
/// quadratic part of Theta acts like the bare scalar gap formula.
struct ScalarFixture {
  LatticeSystem sys;
  GroundState gs;
  BlockFrame frame;

  static LatticeSystem make() {
    Matrix kinetic(3, 3);
    kinetic.setZero();
    kinetic.diagonal() << -1.0, 0.0, 2.0;  // g- = 1, g+ = 2
    return LatticeSystem(kinetic, Vector::Zero(3),
                         1e-8 * Matrix::Identity(3, 3), 1);
  }

  ScalarFixture() : sys(make()), gs([&] {
    Matrix lam(1, 1);
    lam << 0.5;
    return synthetic_ground_state(sys, 1, lam);
  }()), frame(frame_of(gs)) {}
};

}  // namespace

TEST_CASE("chart reproduces the base point and its spectrum") {
  DegFixture fx;
  SUBCASE("zero coefficient gives the ground state") {
    CHECK((gamma_of(fx.frame, BlockCoefficient::zero(fx.frame)) - fx.gs.gamma0)
              .cwiseAbs()
              .maxCoeff() < 1e-13);
  }
  SUBCASE("spectrum is the occupation block plus fixed levels") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      BlockCoefficient a = random_coefficient(fx.frame, seed);
      a *= 0.05;
      const Matrix g = gamma_of(fx.frame, a);
      Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Matrix> occ(fx.frame.lambda + a.a_pp,
                                                Eigen::EigenvaluesOnly);
      Vector expected(fx.sys.n_sites());
      expected.setZero();
      const int nu = fx.frame.n_unocc();
      expected.segment(nu, fx.frame.n_partial) = occ.eigenvalues();
      expected.tail(fx.frame.n_full).setOnes();
      CHECK((es.eigenvalues() - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("trace is conserved exactly") {
    for (unsigned seed = 1; seed <= 20; ++seed) {
      BlockCoefficient a = random_coefficient(fx.frame, seed);
      a *= 0.1;
      CHECK(std::abs(gamma_of(fx.frame, a).trace() - fx.gs.n_electrons) <
            1e-12);
    }
  }
  SUBCASE("occupancy box is enforced") {
    BlockCoefficient a = BlockCoefficient::zero(fx.frame);
    a.a_pp(0, 0) = 0.7;  // lambda + a_pp exceeds 1
    a.a_pp(1, 1) = -0.7;
    CHECK_THROWS_AS(gamma_of(fx.frame, a), DomainError);
  }
  SUBCASE("chart is injective near the origin") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      BlockCoefficient a = random_coefficient(fx.frame, seed);
      BlockCoefficient b = random_coefficient(fx.frame, 50 + seed);
      a *= 0.1;
      b *= 0.1;
      const double dist =
          (gamma_of(fx.frame, a) - gamma_of(fx.frame, b)).norm();
      CHECK(dist > 1e-6 * (a - b).norm());
    }
  }
}

TEST_CASE("multilinear chart terms") {
  DegFixture fx;
  SUBCASE("first term embeds the occupation direction") {
    BlockCoefficient a = BlockCoefficient::zero(fx.frame);
    a.a_pp(0, 0) = 0.3;
    a.a_pp(1, 1) = -0.3;
    a.a_pp(0, 1) = a.a_pp(1, 0) = 0.1;
    const Matrix g1 = gamma_l_frame(fx.frame, {a});
    Matrix expected = Matrix::Zero(8, 8);
    expected.block(fx.frame.n_full, fx.frame.n_full, 2, 2) = a.a_pp;
    CHECK((g1 - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("first term is energy-neutral at the base point") {
    for (unsigned seed = 1; seed <= 10; ++seed) {
      const BlockCoefficient a = random_coefficient(fx.frame, seed);
      const Matrix g1 = gamma_l_frame(fx.frame, {a});
      const double tr =
          (fx.frame.eigvals.array() * g1.diagonal().array()).sum();
      CHECK(std::abs(tr) < 1e-12);
    }
  }
  SUBCASE("terms sum to the chart") {
    for (unsigned seed = 1; seed <= 3; ++seed) {
      BlockCoefficient a = random_coefficient(fx.frame, seed);
      // remainder after l terms scales like |A|^{l+1}
      for (const double scale : {0.1, 0.05}) {
        BlockCoefficient as = a;
        as *= scale;
        Matrix sum = Matrix::Zero(8, 8);
        for (int l = 1; l <= 6; ++l)
          sum += gamma_l(fx.frame, std::vector<BlockCoefficient>(l, as));
        const Matrix exact = gamma_of(fx.frame, as);
        const double rem = (exact - fx.gs.gamma0 - sum).cwiseAbs().maxCoeff();
        CHECK(rem < 5.0 * std::pow(scale, 7));
      }
    }
  }
}

TEST_CASE("coercive map structure") {
  DegFixture fx;
  SUBCASE("linearity at zero") {
    const BlockCoefficient z = BlockCoefficient::zero(fx.frame);
    CHECK(theta_apply(fx.sys, fx.frame, z).norm() == 0.0);
  }
  SUBCASE("scalar blocks reduce to the gap sum") {
    ScalarFixture sf;
    BlockCoefficient a = BlockCoefficient::zero(sf.frame);
    a.a_up(0, 0) = 1.0;
    const BlockCoefficient t = theta_apply(sf.sys, sf.frame, a);
    // up block: (H++ - eF) A_up Lambda = 2 * 1 * 0.5
    CHECK(t.a_up(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("scalar uf gap formula") {
    Matrix kinetic(3, 3);
    kinetic.setZero();
    kinetic.diagonal() << -1.0, 0.5, 2.0;
    const LatticeSystem sys(kinetic, Vector::Zero(3),
                            1e-8 * Matrix::Identity(3, 3), 2);
    Matrix lam(1, 1);
    lam << 0.5;
    const GroundState gs = synthetic_ground_state(sys, 1, lam);
    const BlockFrame frame = frame_of(gs);
    // g- = eF - e1 = 1.5, g+ = e3 - eF = 1.5
    BlockCoefficient a = BlockCoefficient::zero(frame);
    a.a_uf(0, 0) = 1.0;
    const BlockCoefficient t = theta_apply(sys, frame, a);
    CHECK(t.a_uf(0, 0) == doctest::Approx(3.0).epsilon(1e-6));
    // and the solve inverts it
    BlockCoefficient rhs = BlockCoefficient::zero(frame);
    rhs.a_uf(0, 0) = 0.6;
    const BlockCoefficient sol = theta_solve(sys, frame, rhs);
    CHECK(sol.a_uf(0, 0) == doctest::Approx(0.2).epsilon(1e-6));
  }
  SUBCASE("symmetry of the induced form") {
    for (unsigned seed = 1; seed <= 10; ++seed) {
      const BlockCoefficient a = random_coefficient(fx.frame, seed);
      const BlockCoefficient b = random_coefficient(fx.frame, 100 + seed);
      const double lhs = theta_apply(fx.sys, fx.frame, a).dot(b);
      const double rhs = theta_apply(fx.sys, fx.frame, b).dot(a);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
  SUBCASE("explicit coercivity lower bound") {
    Eigen::SelfAdjointEigenSolver<Matrix> les(fx.frame.lambda,
                                              Eigen::EigenvaluesOnly);
    const double lam_min = les.eigenvalues().minCoeff();
    const double lam_max = les.eigenvalues().maxCoeff();
    const double g_minus = fx.gs.gap_below;
    const Vector wu = fx.frame.eps_unocc().array() - fx.frame.fermi_level;
    for (unsigned seed = 1; seed <= 50; ++seed) {
      const BlockCoefficient a = random_coefficient(fx.frame, seed);
      const double quad = theta_quadratic(fx.sys, fx.frame, a);
      const Vector rho1 =
          frame_density(fx.frame, gamma_l_frame(fx.frame, {a}));
      double uf_metric = 0.0, up_metric = 0.0;
      for (int i = 0; i < wu.size(); ++i) {
        uf_metric += wu(i) * a.a_uf.row(i).squaredNorm();
        up_metric += wu(i) * a.a_up.row(i).squaredNorm();
      }
      const double lower = uf_metric + lam_min * up_metric +
                           (1.0 - lam_max) * g_minus *
                               a.a_pf.squaredNorm() +
                           0.5 * fx.sys.coulomb_dot(rho1, rho1);
      CHECK(quad >= lower - 1e-10);
      CHECK(quad > 0.0);
    }
  }
  SUBCASE("solver round trip") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      BlockCoefficient rhs = random_coefficient(fx.frame, 200 + seed);
      const BlockCoefficient sol = theta_solve(fx.sys, fx.frame, rhs);
      const BlockCoefficient back = theta_apply(fx.sys, fx.frame, sol);
      CHECK((back - rhs).norm() < 1e-9);
    }
  }
  SUBCASE("zero right-hand side") {
    const BlockCoefficient z = BlockCoefficient::zero(fx.frame);
    CHECK(theta_solve(fx.sys, fx.frame, z).norm() == 0.0);
  }
}

TEST_CASE("stationarity right-hand sides") {
  DegFixture fx;
  const Vector w = random_potential(fx.sys, 3, 0.1);
  SUBCASE("first order vanishes without a perturbation") {
    const BlockCoefficient b =
        assemble_b(fx.sys, fx.frame, Vector::Zero(8), 1, {});
    CHECK(b.norm() == 0.0);
  }
  SUBCASE("first order pairs the perturbation with the chart derivative") {
    const BlockCoefficient b = assemble_b(fx.sys, fx.frame, w, 1, {});
    for (unsigned seed = 1; seed <= 10; ++seed) {
      const BlockCoefficient a = random_coefficient(fx.frame, seed);
      const Vector rho1 =
          frame_density(fx.frame, gamma_l_frame(fx.frame, {a}));
      CHECK(std::abs(b.dot(a) - w.dot(rho1)) < 1e-11);
    }
  }
  SUBCASE("second order needs a first-order seed") {
    const std::vector<BlockCoefficient> zero_prior = {
        BlockCoefficient::zero(fx.frame)};
    const BlockCoefficient b2 =
        assemble_b(fx.sys, fx.frame, Vector::Zero(8), 2, zero_prior);
    CHECK(b2.norm() < 1e-14);
  }
}

TEST_CASE("degenerate expansion first order matches the block formulas") {
  DegFixture fx;
  const Vector w = random_potential(fx.sys, 7, 0.2);
  const DegSeries s = expand_degenerate(fx.sys, fx.gs, w, 2);
  const Matrix m = to_frame(fx.frame, Matrix(w.asDiagonal()));
  const int nf = fx.frame.n_full;
  const int np = fx.frame.n_partial;
  const int nu = fx.frame.n_unocc();
  const int no = nf + np;
  const Matrix lam = fx.frame.lambda;
  const Matrix one_minus = Matrix::Identity(np, np) - lam;

  SUBCASE("first-order stationarity in the explicit block form") {
    const BlockCoefficient t = theta_apply(fx.sys, fx.frame, s.a[0]);
    CHECK((t.a_uf + m.block(no, 0, nu, nf)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((t.a_up + m.block(no, nf, nu, np) * lam).cwiseAbs().maxCoeff() <
          1e-9);
    CHECK((t.a_pf + one_minus * m.block(nf, 0, np, nf)).cwiseAbs().maxCoeff() <
          1e-9);
    CHECK((t.a_pp +
           0.5 * project_traceless_symmetric(m.block(nf, nf, np, np)))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
  SUBCASE("first-order density matrix block pattern") {
    const Matrix g1 = to_frame(fx.frame, s.gamma[0]);
    CHECK((g1.block(no, 0, nu, nf) - s.a[0].a_uf).cwiseAbs().maxCoeff() <
          1e-9);
    CHECK((g1.block(no, nf, nu, np) - s.a[0].a_up * lam)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK((g1.block(nf, 0, np, nf) - one_minus * s.a[0].a_pf)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK((g1.block(nf, nf, np, np) - s.a[0].a_pp).cwiseAbs().maxCoeff() <
          1e-9);
    CHECK(g1.topLeftCorner(nf, nf).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(g1.bottomRightCorner(nu, nu).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("second-order energy in closed form") {
    const Vector rho1 =
        frame_density(fx.frame, gamma_l_frame(fx.frame, {s.a[0]}));
    const Matrix g11 =
        gamma_l_frame(fx.frame, {s.a[0], s.a[0]});
    const double tr =
        (fx.frame.eigvals.array() * g11.diagonal().array()).sum();
    const double expected =
        tr + 0.5 * fx.sys.coulomb_dot(rho1, rho1) + w.dot(rho1);
    CHECK(s.energy[1] == doctest::Approx(expected).epsilon(1e-10));
  }
  SUBCASE("corrections are traceless") {
    CHECK(std::abs(s.gamma[0].trace()) < 1e-10);
    CHECK(std::abs(s.gamma[1].trace()) < 1e-10);
  }
  SUBCASE("the two energy routes agree") {
    for (int k = 1; k <= 2; ++k)
      CHECK(deg_energy_direct(fx.sys, fx.gs, s, w, k) ==
            doctest::Approx(s.energy[k - 1]).epsilon(1e-9));
  }
}

TEST_CASE("truncated expansions are stationary to matching order") {
  DegFixture fx;
  const Vector w = random_potential(fx.sys, 11, 0.2);
  const DegSeries s = expand_degenerate(fx.sys, fx.gs, w, 2);
  for (const int n : {1, 2}) {
    std::vector<double> residuals;
    const std::vector<double> betas = {0.2, 0.1, 0.05};
    for (const double beta : betas) {
      BlockCoefficient a = BlockCoefficient::zero(fx.frame);
      double bk = 1.0;
      for (int k = 1; k <= n; ++k) {
        bk *= beta;
        a += bk * s.a[k - 1];
      }
      residuals.push_back(
          chart_gradient_fd(fx.sys, fx.frame, (beta * w).eval(), a).norm());
    }
    // gradient norm must fall like beta^{n+1}
    for (size_t i = 0; i + 1 < betas.size(); ++i) {
      const double expected_ratio =
          std::pow(betas[i + 1] / betas[i], n + 1);
      const double measured = residuals[i + 1] / residuals[i];
      CHECK(measured < 2.5 * expected_ratio);
    }
  }
}

TEST_CASE("no-splitting of the perturbed Fermi cluster") {
  DegFixture fx;
  const double scale = 1e-2 * fx.gs.gap_below;
  bool center_moved = false;
  for (unsigned seed = 1; seed <= 3; ++seed) {
    const Vector w = random_potential(fx.sys, seed, scale);
    ScfOptions opts;
    opts.tol_residual = 1e-13;
    const GroundState pgs = solve_scf(fx.sys, w, opts);
    REQUIRE(pgs.n_partial == fx.gs.n_partial);
    const double spread =
        pgs.eigvals(pgs.n_full + pgs.n_partial - 1) - pgs.eigvals(pgs.n_full);
    CHECK(spread <= 1e-8 * std::abs(fx.gs.fermi_level));
    if (std::abs(pgs.fermi_level - fx.gs.fermi_level) >=
        1e-4 * std::abs(fx.gs.fermi_level))
      center_moved = true;
  }
  CHECK(center_moved);
}

TEST_CASE("second-order coefficient matches a finite-difference oracle") {
  DegFixture fx;
  const Vector w = random_potential(fx.sys, 13, 0.2);
  const DegSeries s = expand_degenerate(fx.sys, fx.gs, w, 2);
  auto gamma_at = [&](double beta) {
    ScfOptions o;
    o.tol_residual = 1e-13;
    o.newton_tol = 1e-14;
    o.initial_gamma = fx.gs.gamma0;
    return solve_scf(fx.sys, (beta * w).eval(), o).gamma0;
  };
  const double h = 0.005;
  const Matrix g2_fd =
      (gamma_at(h) + gamma_at(-h) - 2 * fx.gs.gamma0) / (2 * h * h);
  // discriminates the boundary composition of the order-2 right-hand side,
  // whose contribution is three orders of magnitude above this tolerance
  CHECK((s.gamma[1] - g2_fd).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("series tracks the perturbed minimizer") {
  DegFixture fx;
  const Vector w = random_potential(fx.sys, 13, 0.2);
  const DegSeries s = expand_degenerate(fx.sys, fx.gs, w, 2);
  for (const double beta : {0.1, 0.05}) {
    ScfOptions opts;
    opts.tol_residual = 1e-13;
    const GroundState ref = solve_scf(fx.sys, (beta * w).eval(), opts);
    Matrix truncated = fx.gs.gamma0;
    double bk = 1.0;
    for (int k = 1; k <= 2; ++k) {
      bk *= beta;
      truncated += bk * s.gamma[k - 1];
    }
    const double err = (ref.gamma0 - truncated).norm();
    CHECK(err < 20.0 * std::pow(beta, 3));
  }
}

TEST_CASE("degenerate expansion guards") {
  DegFixture fx;
  const Vector w = random_potential(fx.sys, 5, 0.1);
  SUBCASE("order cap") {
    CHECK_THROWS_AS(expand_degenerate(fx.sys, fx.gs, w, 5), DomainError);
  }
  SUBCASE("needs a partial cluster") {
    const auto sys = make_ring(tt::nondeg_ring_params());
    const GroundState gs = solve_scf(sys);
    CHECK_THROWS_AS(expand_degenerate(sys, gs, w, 1), DomainError);
  }
  SUBCASE("boundary frames are rejected") {
    SyntheticDegenerateParams p;
    p.n_sites = 8;
    p.n_electrons = 3;
    p.n_partial = 2;
    const auto sys = make_synthetic_degenerate(p);
    Matrix lam(2, 2);
    lam << 1.0, 0.0, 0.0, 0.0;
    const GroundState forced = synthetic_ground_state(sys, 2, lam);
    CHECK_THROWS_AS(
        expand_degenerate(sys, forced, Vector::Zero(8), 1),
        DomainError);
  }
}
