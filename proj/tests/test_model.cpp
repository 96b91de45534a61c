#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "rhfpt/model.hpp"
#include "test_helpers.hpp"

using namespace rhfpt;
namespace tt = rhfpt::testing;

TEST_CASE("density_of extracts the diagonal") {
  CHECK(density_of(Matrix::Zero(4, 4)).isZero(0));
  CHECK(density_of(Matrix::Identity(3, 3)).isApprox(Vector::Ones(3)));

  Vector dir(2);
  dir << 1.0, 1.0;
  dir.normalize();
  const Matrix proj = dir * dir.transpose();
  Vector expected(2);
  expected << 0.5, 0.5;
  CHECK(density_of(proj).isApprox(expected, 1e-15));

  CHECK_THROWS_AS(density_of(Matrix::Zero(2, 3)), InputError);
}

TEST_CASE("energy evaluates the quadratic functional") {
  const int n = 2;
  const LatticeSystem sys(Matrix::Zero(n, n), Vector::Zero(n),
                          Matrix::Identity(n, n), 1);
  SUBCASE("empty state") {
    CHECK(energy(sys, Matrix::Zero(n, n)) == doctest::Approx(0.0));
  }
  SUBCASE("pure interaction") {
    Matrix gamma = Matrix::Zero(n, n);
    gamma(0, 0) = 1.0;
    CHECK(energy(sys, gamma) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("linearity in the perturbation") {
    for (unsigned seed = 1; seed <= 8; ++seed) {
      const Matrix gamma = tt::random_symmetric(n, seed);
      const Vector w = tt::random_vector(n, seed + 100);
      const double lhs = energy(sys, gamma, w) - energy(sys, gamma);
      CHECK(lhs == doctest::Approx(w.dot(gamma.diagonal())).epsilon(1e-12));
    }
  }
}

TEST_CASE("mean_field assembles kinetic plus screened diagonal") {
  SUBCASE("no screening") {
    const auto p = tt::nondeg_ring_params();
    const LatticeSystem sys = make_ring(p);
    const int n = sys.n_sites();
    const Matrix h = mean_field(sys, Vector::Zero(n));
    CHECK((h - sys.kinetic()).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));  // ring has zero external potential
  }
  SUBCASE("identity kernel charges the diagonal") {
    const int n = 2;
    const LatticeSystem sys(Matrix::Zero(n, n), Vector::Zero(n),
                            Matrix::Identity(n, n), 1);
    Vector rho(n);
    rho << 1.0, 0.0;
    const Matrix h = mean_field(sys, rho);
    CHECK(h(0, 0) == doctest::Approx(1.0));
    CHECK(h(1, 1) == doctest::Approx(0.0));
    CHECK(h(0, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("density pairing duality") {
  const int n = 6;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const Matrix gamma = tt::random_symmetric(n, seed);
    const Vector w = tt::random_vector(n, 40 + seed);
    const double lhs = (Matrix(w.asDiagonal()).array() * gamma.array()).sum();
    CHECK(std::abs(lhs - w.dot(density_of(gamma))) < 1e-12);
  }
}

TEST_CASE("energy is convex along admissible segments") {
  const auto sys = make_ring(tt::nondeg_ring_params());
  const int n = sys.n_sites();
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Matrix g1 = tt::random_admissible(n, sys.n_electrons(), seed);
    const Matrix g2 = tt::random_admissible(n, sys.n_electrons(), 100 + seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double t = unif(rng);
    const double mixed = energy(sys, (t * g1 + (1 - t) * g2).eval());
    const double bound = t * energy(sys, g1) + (1 - t) * energy(sys, g2);
    CHECK(mixed <= bound + 1e-12);
  }
}

TEST_CASE("interaction norms are dual under the site pairing") {
  const auto sys = make_ring(tt::deg_ring_params());
  const int n = sys.n_sites();
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const Vector w = tt::random_vector(n, seed);
    const Vector rho = tt::random_vector(n, 50 + seed);
    CHECK(std::abs(w.dot(rho)) <=
          sys.dual_norm(w) * sys.coulomb_norm(rho) + 1e-12);
  }
  const Vector w = tt::random_vector(n, 7);
  const Vector aligned = sys.solve_kernel(w);
  CHECK(std::abs(w.dot(aligned)) ==
        doctest::Approx(sys.dual_norm(w) * sys.coulomb_norm(aligned))
            .epsilon(1e-12));
}

TEST_CASE("demo system construction and guards") {
  SUBCASE("ring kernel is positive definite") {
    const auto sys = make_ring(tt::deg_ring_params());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sys.kernel(),
                                             Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  SUBCASE("infeasible electron count") {
    RingParams p;
    p.n_sites = 4;
    p.n_electrons = 4;
    CHECK_THROWS_AS(make_ring(p), InputError);
  }
  SUBCASE("synthetic cluster width") {
    SyntheticDegenerateParams p;
    p.n_partial = 3;
    p.n_sites = 10;
    p.n_electrons = 4;
    const auto sys = make_synthetic_degenerate(p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sys.kinetic(),
                                             Eigen::EigenvaluesOnly);
    const Vector ev = es.eigenvalues();
    // cluster occupies levels n_electrons-1 .. n_electrons+1
    const double width = ev(p.n_electrons + 1) - ev(p.n_electrons - 1);
    CHECK(width < 1e-12);
  }
  SUBCASE("kind dispatch") {
    DemoParams params;
    params.ring = tt::deg_ring_params();
    const auto ring = build_demo_system(DemoKind::ring, params);
    CHECK(ring.n_sites() == params.ring.n_sites);
    params.double_well = tt::simple_spectrum_params();
    const auto well = build_demo_system(DemoKind::double_well, params);
    CHECK(well.v_ext().minCoeff() < 0.0);
    const auto synth =
        build_demo_system(DemoKind::synthetic_degenerate, params);
    CHECK(synth.n_sites() == params.synthetic.n_sites);
  }
  SUBCASE("density matrix validation") {
    CHECK_NOTHROW(check_density_matrix(Matrix::Identity(3, 3), 3.0));
    CHECK_THROWS_AS(check_density_matrix(2.0 * Matrix::Identity(3, 3), 6.0),
                    InputError);
    CHECK_THROWS_AS(check_density_matrix(Matrix::Identity(3, 3), 2.0),
                    InputError);
  }
}
