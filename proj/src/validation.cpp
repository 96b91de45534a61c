#include "rhfpt/validation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <random>
#include <sstream>

#include "rhfpt/config.hpp"
#include "rhfpt/deg_pt.hpp"
#include "rhfpt/mo_pt.hpp"
#include "rhfpt/nondeg_pt.hpp"
#include "rhfpt/runner.hpp"
#include "rhfpt/wigner.hpp"

namespace rhfpt {

std::string format_check_line(const CheckResult& r) {
  std::ostringstream os;
  os.precision(6);
  os << "CHECK " << r.name << (r.pass ? " PASS " : " FAIL ") << std::scientific
     << r.value << " " << r.tolerance;
  if (!r.detail.empty()) os << "  # " << r.detail;
  return os.str();
}

namespace {

constexpr double kRefTol = 1e-14;      // reference-solve certificate
constexpr double kNoiseFloor = 1e-12;  // 100 x reference tolerance

struct Reporter {
  const CheckSink& sink;
  bool all_passed = true;

  void add(const std::string& name, bool pass, double value, double tol,
           const std::string& detail = "") {
    CheckResult r{name, pass, value, tol, detail};
    all_passed = all_passed && pass;
    if (sink) sink(r);
  }

  template <typename F>
  void guarded(const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, std::nan(""), 0.0,
          std::string("exception: ") + e.what());
    }
  }
};

// ---- bundled desk-scale instances ------------------------------------------

std::vector<Matrix> cyclic_group(int n) {
  Matrix s = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) s((i + 1) % n, i) = 1.0;
  std::vector<Matrix> g;
  Matrix acc = Matrix::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    g.push_back(acc);
    acc = s * acc;
  }
  return g;
}

struct Instances {
  LatticeSystem nondeg_sys;
  GroundState nondeg_gs;
  Vector nondeg_w;
  LatticeSystem deg_sys;
  GroundState deg_gs;
  Vector deg_w;
  LatticeSystem mo_sys;
  GroundState mo_gs;
  Vector mo_w;

  static RingParams nondeg_params() {
    RingParams p;
    p.n_sites = 8;
    p.n_electrons = 3;  // filled shells, gapped Fermi level
    p.hopping = 0.6;
    p.yukawa_mass = 1.0;
    p.kernel_scale = 1.0;
    return p;
  }

  static RingParams deg_params() {
    RingParams p;
    p.n_sites = 8;
    p.n_electrons = 2;  // half-filled +-k shell
    p.hopping = 0.5;
    p.yukawa_mass = 1.0;
    p.kernel_scale = 3.0;
    return p;
  }

  static DoubleWellParams mo_params() {
    DoubleWellParams p;
    p.n_sites = 12;
    p.n_electrons = 3;
    p.hopping = 1.0;
    p.depth1 = 1.2;
    p.depth2 = 0.7;
    p.pos1 = 3.0;
    p.pos2 = 8.0;
    p.width = 1.5;
    return p;
  }

  static ScfOptions deg_opts() {
    ScfOptions o;
    o.symmetrizer = cyclic_group(8);
    o.tol_residual = 1e-12;
    return o;
  }

  Instances()
      : nondeg_sys(make_ring(nondeg_params())),
        nondeg_gs(solve_scf(nondeg_sys)),
        nondeg_w(random_potential(nondeg_sys, 5, 1.2)),
        deg_sys(make_ring(deg_params())),
        deg_gs(solve_scf(deg_sys, deg_opts())),
        deg_w(random_potential(deg_sys, 29, 0.35)),
        mo_sys(make_double_well(mo_params())),
        mo_gs(solve_scf(mo_sys)),
        mo_w(random_potential(mo_sys, 17, 0.3)) {}
};

std::pair<LatticeSystem, GroundState> random_gapped_instance(int n, int ne,
                                                             unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix kinetic(n, n), b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      kinetic(i, j) = gauss(rng);
      b(i, j) = gauss(rng);
    }
  kinetic = 0.5 * (kinetic + kinetic.transpose()).eval();
  const Matrix kernel =
      0.5 * (b * b.transpose() / n + Matrix::Identity(n, n));
  LatticeSystem sys(kinetic, Vector::Zero(n), kernel, ne);
  GroundState gs = synthetic_ground_state(sys, ne, Matrix::Zero(0, 0));
  return {std::move(sys), std::move(gs)};
}

GroundState tight_reference(const LatticeSystem& sys, const Vector& w,
                            const Matrix& warm) {
  ScfOptions o;
  o.tol_residual = kRefTol;
  o.newton_tol = 1e-15;
  o.initial_gamma = warm;
  return solve_scf(sys, w, o);
}

// ---- the criteria ----------------------------------------------------------

void check_first_order_energy(Reporter& rep, const Instances& in) {
  const NondegSeries ns = expand(in.nondeg_sys, in.nondeg_gs, in.nondeg_w, 1);
  const DegSeries ds = expand_degenerate(in.deg_sys, in.deg_gs, in.deg_w, 1);

  const double pair_nondeg = in.nondeg_gs.density().dot(in.nondeg_w);
  const double pair_deg = in.deg_gs.density().dot(in.deg_w);
  const double defect =
      std::max(std::abs(ns.energy[0] - pair_nondeg) / std::abs(pair_nondeg),
               std::abs(ds.energy[0] - pair_deg) / std::abs(pair_deg));

  const FdReport fd_n =
      fd_oracle(in.nondeg_sys, in.nondeg_gs, in.nondeg_w, 5e-3);
  const FdReport fd_d = fd_oracle(in.deg_sys, in.deg_gs, in.deg_w, 5e-3);
  const double fd_defect =
      std::max(std::abs(ns.energy[0] - fd_n.first) / std::abs(ns.energy[0]),
               std::abs(ds.energy[0] - fd_d.first) / std::abs(ds.energy[0]));

  std::ostringstream det;
  det << "series defect " << defect << " (<= 1e-8), fd defect " << fd_defect
      << " (<= 1e-6)";
  rep.add("01-first-order-energy", defect <= 1e-8 && fd_defect <= 1e-6,
          defect, 1e-8, det.str());
}

void check_series_consistency(Reporter& rep, const Instances& in) {
  const NondegSeries s = expand(in.nondeg_sys, in.nondeg_gs, in.nondeg_w, 3);
  const std::vector<double> grid = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  std::vector<Matrix> refs;
  for (const double b : grid)
    refs.push_back(tight_reference(in.nondeg_sys, (b * in.nondeg_w).eval(),
                                   in.nondeg_gs.gamma0)
                       .gamma0);
  double worst = 0.0;
  std::ostringstream det;
  bool pass = true;
  for (int n = 1; n <= 3; ++n) {
    std::vector<double> errs;
    for (size_t i = 0; i < grid.size(); ++i)
      errs.push_back(
          (refs[i] - s.truncated_gamma(in.nondeg_gs.gamma0, grid[i], n))
              .norm());
    SlopeFitOptions fo;
    fo.check_sign = false;
    fo.noise_floor = kNoiseFloor;
    fo.slope_tol = 0.3;
    const SlopeReport r = fit_slope(grid, errs, n + 1.0, fo);
    pass = pass && r.pass;
    worst = std::max(worst, std::abs(r.fitted_slope - (n + 1.0)));
    det << "n=" << n << " slope " << r.fitted_slope << " ";
  }
  rep.add("02-series-consistency", pass, worst, 0.3, det.str());
}

void check_wigner_nondeg(Reporter& rep, const Instances& in, int workers) {
  const NondegSeries s = expand(in.nondeg_sys, in.nondeg_gs, in.nondeg_w, 2);
  const std::vector<std::vector<double>> grids = {
      {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3},
      {2e-1, 1e-1, 5e-2, 2.5e-2, 1.25e-2},
      {3.5e-1, 2.5e-1, 1.8e-1, 1.3e-1, 9e-2}};
  double worst = 0.0;
  double most_negative = 0.0;
  bool pass = true;
  std::ostringstream det;
  for (int n = 0; n <= 2; ++n) {
    SlopeFitOptions fo;
    fo.noise_floor = kNoiseFloor;
    const SlopeReport r = wigner_check_nondeg(
        in.nondeg_sys, in.nondeg_gs, s, in.nondeg_w, n, grids[n], fo, workers);
    pass = pass && r.pass;
    worst = std::max(worst, std::abs(r.fitted_slope - (2.0 * n + 2.0)));
    most_negative = std::min(most_negative, r.min_error);
    det << "n=" << n << " slope " << r.fitted_slope << " ";
  }
  pass = pass && most_negative >= -1e-12;
  det << "min err " << most_negative;
  rep.add("03-wigner-nondeg", pass, worst, 0.35, det.str());
}

void check_wigner_deg(Reporter& rep, const Instances& in, int workers) {
  const std::vector<std::vector<double>> grids = {
      {2e-1, 1e-1, 5e-2, 2.5e-2, 1.25e-2},
      {3.5e-1, 2.5e-1, 1.8e-1, 1.3e-1, 9e-2}};
  double worst = 0.0;
  bool pass = true;
  std::ostringstream det;
  for (int n = 1; n <= 2; ++n) {
    const DegSeries s = expand_degenerate(in.deg_sys, in.deg_gs, in.deg_w, n);
    SlopeFitOptions fo;
    fo.noise_floor = kNoiseFloor;
    const DegWignerReport r = wigner_check_deg(
        in.deg_sys, in.deg_gs, s, in.deg_w, n, grids[n - 1], fo, workers);
    pass = pass && r.variational.pass && r.energy_series.pass &&
           r.variational.min_error >= -1e-12;
    worst = std::max(
        {worst, std::abs(r.variational.fitted_slope - (2.0 * n + 2.0)),
         std::abs(r.energy_series.fitted_slope - (2.0 * n + 2.0))});
    det << "n=" << n << " var " << r.variational.fitted_slope << " series "
        << r.energy_series.fitted_slope << " ";
  }
  rep.add("04-wigner-deg", pass, worst, 0.35, det.str());
}

void check_no_splitting(Reporter& rep, const Instances& in) {
  const double ef = std::abs(in.deg_gs.fermi_level);
  double worst_spread = 0.0;
  double best_shift = 0.0;
  bool structure = true;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Vector v =
        random_potential(in.deg_sys, 1000 + seed, 1e-2 * in.deg_gs.gap_below);
    ScfOptions o;
    o.tol_residual = 1e-13;
    o.newton_tol = 1e-15;
    o.initial_gamma = in.deg_gs.gamma0;
    const GroundState pgs = solve_scf(in.deg_sys, v, o);
    if (pgs.n_partial != in.deg_gs.n_partial) {
      structure = false;
      continue;
    }
    const double spread = pgs.eigvals(pgs.n_full + pgs.n_partial - 1) -
                          pgs.eigvals(pgs.n_full);
    worst_spread = std::max(worst_spread, spread / ef);
    best_shift = std::max(
        best_shift, std::abs(pgs.fermi_level - in.deg_gs.fermi_level) / ef);
  }
  std::ostringstream det;
  det << "worst rel spread " << worst_spread << ", best rel shift "
      << best_shift << " (needs >= 1e-4)";
  rep.add("05-no-splitting",
          structure && worst_spread <= 1e-8 && best_shift >= 1e-4,
          worst_spread, 1e-8, det.str());
}

void check_trace_structure(Reporter& rep, const Instances& in) {
  const NondegSeries s = expand(in.nondeg_sys, in.nondeg_gs, in.nondeg_w, 4);
  double worst = 0.0;
  for (int k = 1; k <= 4; ++k)
    worst = std::max(worst, std::abs(s.gamma[k - 1].trace()));

  // 50 random tuples: plain for k <= 2 (trace-free pointwise), replicated
  // and cyclic-sum forms for k = 3, 4 (the forms the recursion assembles)
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss;
  const int n = in.nondeg_sys.n_sites();
  auto rand_vec = [&] {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 4;
    if (k <= 2) {
      std::vector<Vector> vs;
      for (int j = 0; j < k; ++j) vs.push_back(rand_vec());
      worst =
          std::max(worst, std::abs(contour_q(in.nondeg_gs, vs).trace()));
    } else if (trial % 2 == 0) {
      const Vector v = rand_vec();
      worst = std::max(
          worst,
          std::abs(
              contour_q(in.nondeg_gs, std::vector<Vector>(k, v)).trace()));
    } else {
      std::vector<Vector> vs;
      for (int j = 0; j < k; ++j) vs.push_back(rand_vec());
      double cyc = 0.0;
      for (int shift = 0; shift < k; ++shift) {
        std::vector<Vector> rot;
        for (int j = 0; j < k; ++j) rot.push_back(vs[(j + shift) % k]);
        cyc += contour_q(in.nondeg_gs, rot).trace();
      }
      worst = std::max(worst, std::abs(cyc));
    }
  }
  rep.add("06-trace-structure", worst <= 1e-10, worst, 1e-10);
}

void check_response_structure(Reporter& rep, const Instances& in) {
  const int n = in.nondeg_sys.n_sites();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  double min_rayleigh = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    Vector r(n);
    for (int i = 0; i < n; ++i) r(i) = gauss(rng);
    const double num = in.nondeg_sys.coulomb_dot(
        apply_response(in.nondeg_sys, in.nondeg_gs, r), r);
    min_rayleigh =
        std::min(min_rayleigh, num / in.nondeg_sys.coulomb_dot(r, r));
  }
  int worst_iters = 0;
  double worst_res = 0.0;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    Vector rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = gauss(rng);
    ScreenedSolveStats stats;
    solve_screened(in.nondeg_sys, in.nondeg_gs, rhs, 1e-11, &stats);
    worst_iters = std::max(worst_iters, stats.iterations);
    worst_res = std::max(worst_res, stats.residual);
  }
  std::ostringstream det;
  det << "min Rayleigh " << min_rayleigh << ", CG iters " << worst_iters
      << "/" << n << ", residual " << worst_res;
  rep.add("07-response-structure",
          min_rayleigh >= -1e-10 && worst_iters <= n && worst_res <= 1e-11,
          min_rayleigh, -1e-10, det.str());
}

void check_evaluator_crosscheck(Reporter& rep, const Instances&) {
  double worst = 0.0;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    auto [sys, gs] = random_gapped_instance(8, 3, seed);
    std::mt19937_64 rng(500 + seed);
    std::normal_distribution<double> gauss;
    Vector v1(8), v2(8);
    for (int i = 0; i < 8; ++i) {
      v1(i) = gauss(rng);
      v2(i) = gauss(rng);
    }
    worst = std::max(
        worst, (contour_q(gs, {v1}) - divided_difference_q(gs, {v1}))
                   .cwiseAbs()
                   .maxCoeff());
    worst = std::max(
        worst,
        (contour_q(gs, {v1, v2}) - divided_difference_q(gs, {v1, v2}))
            .cwiseAbs()
            .maxCoeff());
  }
  rep.add("08-evaluator-crosscheck", worst <= 1e-8, worst, 1e-8);
}

void check_mo_dm_equivalence(Reporter& rep, const Instances& in) {
  const MOSeries ms = mo_expand(in.mo_sys, in.mo_gs, in.mo_w, 4);
  const NondegSeries dm = expand(in.mo_sys, in.mo_gs, in.mo_w, 3);
  double worst_gamma = 0.0;
  for (int k = 1; k <= 3; ++k)
    worst_gamma = std::max(worst_gamma,
                           (ms.gamma_coefficient(k) - dm.gamma[k - 1]).norm());
  const auto defects = orthogonality_defects(ms);
  double worst_defect = 0.0;
  for (const double d : defects) worst_defect = std::max(worst_defect, d);
  std::ostringstream det;
  det << "gamma defect " << worst_gamma << ", orthogonality defect "
      << worst_defect << " (<= 1e-9)";
  rep.add("09-mo-dm-equivalence", worst_gamma <= 1e-8 && worst_defect <= 1e-9,
          worst_gamma, 1e-8, det.str());
}

void check_theta_structure(Reporter& rep, const Instances& in) {
  const BlockFrame frame = frame_of(in.deg_gs);
  double sym_defect = 0.0;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const BlockCoefficient a = random_coefficient(frame, seed);
    const BlockCoefficient b = random_coefficient(frame, 300 + seed);
    sym_defect = std::max(
        sym_defect, std::abs(theta_apply(in.deg_sys, frame, a).dot(b) -
                             theta_apply(in.deg_sys, frame, b).dot(a)));
  }
  double empirical = std::numeric_limits<double>::infinity();
  for (unsigned seed = 1; seed <= 200; ++seed) {
    const BlockCoefficient a = random_coefficient(frame, seed);
    empirical = std::min(empirical, theta_quadratic(in.deg_sys, frame, a) /
                                        tangent_metric_dot(frame, a, a));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> les(frame.lambda,
                                            Eigen::EigenvaluesOnly);
  const double required =
      0.5 * std::min({1.0, les.eigenvalues().minCoeff(),
                      (1.0 - les.eigenvalues().maxCoeff()) *
                          in.deg_gs.gap_below});
  double roundtrip = 0.0;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const BlockCoefficient rhs = random_coefficient(frame, 700 + seed);
    const BlockCoefficient sol = theta_solve(in.deg_sys, frame, rhs);
    roundtrip = std::max(roundtrip,
                         (theta_apply(in.deg_sys, frame, sol) - rhs).norm());
  }
  std::ostringstream det;
  det << "symmetry " << sym_defect << ", coercivity " << empirical
      << " (needs " << required << "), round trip " << roundtrip;
  rep.add("10-theta-structure",
          sym_defect <= 1e-10 && empirical >= required && roundtrip <= 1e-9,
          empirical, required, det.str());
}

void check_first_order_deg_blocks(Reporter& rep, const Instances& in) {
  const DegSeries s = expand_degenerate(in.deg_sys, in.deg_gs, in.deg_w, 1);
  const BlockFrame& frame = s.frame;
  const int nf = frame.n_full;
  const int np = frame.n_partial;
  const int nu = frame.n_unocc();
  const int no = nf + np;
  const Matrix m = to_frame(frame, Matrix(in.deg_w.asDiagonal()));
  const Matrix lam = frame.lambda;
  const Matrix one_minus = Matrix::Identity(np, np) - lam;

  const BlockCoefficient t = theta_apply(in.deg_sys, frame, s.a[0]);
  double residual = 0.0;
  residual = std::max(
      residual, (t.a_uf + m.block(no, 0, nu, nf)).cwiseAbs().maxCoeff());
  residual = std::max(
      residual, (t.a_up + m.block(no, nf, nu, np) * lam).cwiseAbs().maxCoeff());
  residual = std::max(
      residual,
      (t.a_pf + one_minus * m.block(nf, 0, np, nf)).cwiseAbs().maxCoeff());
  residual = std::max(residual, (t.a_pp + 0.5 * project_traceless_symmetric(
                                              m.block(nf, nf, np, np)))
                                    .cwiseAbs()
                                    .maxCoeff());

  const Matrix g1 = to_frame(frame, s.gamma[0]);
  double pattern = 0.0;
  pattern = std::max(pattern, g1.topLeftCorner(nf, nf).cwiseAbs().maxCoeff());
  pattern =
      std::max(pattern, g1.bottomRightCorner(nu, nu).cwiseAbs().maxCoeff());
  pattern = std::max(
      pattern, (g1.block(no, 0, nu, nf) - s.a[0].a_uf).cwiseAbs().maxCoeff());
  pattern = std::max(pattern, (g1.block(no, nf, nu, np) - s.a[0].a_up * lam)
                                  .cwiseAbs()
                                  .maxCoeff());
  pattern = std::max(pattern,
                     (g1.block(nf, 0, np, nf) - one_minus * s.a[0].a_pf)
                         .cwiseAbs()
                         .maxCoeff());
  pattern = std::max(
      pattern, (g1.block(nf, nf, np, np) - s.a[0].a_pp).cwiseAbs().maxCoeff());

  std::ostringstream det;
  det << "stationarity residual " << residual << ", block pattern defect "
      << pattern;
  rep.add("11-first-order-deg-blocks", residual <= 1e-9 && pattern <= 1e-9,
          std::max(residual, pattern), 1e-9, det.str());
}

void check_uniqueness_condition(Reporter& rep, const Instances& in) {
  const UniquenessReport good = uniqueness_kernel_test(in.deg_gs);
  const double scaled = good.sigma_min / good.sigma_max;

  GroundState duplicated = in.deg_gs;
  duplicated.eigvecs.col(duplicated.n_full + 1) =
      duplicated.eigvecs.col(duplicated.n_full);
  const UniquenessReport bad = uniqueness_kernel_test(duplicated);
  const double bad_scaled = bad.sigma_min / bad.sigma_max;

  std::ostringstream det;
  det << "ring scaled sigma " << scaled << ", duplicated-orbital sigma "
      << bad_scaled;
  rep.add("12-uniqueness-condition",
          good.holds && scaled > 1e-6 && !bad.holds && bad_scaled < 1e-8,
          scaled, 1e-6, det.str());
}

void check_projector_and_trace_identity(Reporter& rep, const Instances&) {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> gauss;
  auto random_matrix = [&](int n) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
    return g;
  };
  auto random_proj = [&](int n, int rank) {
    const Matrix q =
        Eigen::HouseholderQR<Matrix>(random_matrix(n)).householderQ();
    const Matrix cols = q.leftCols(rank);
    return Matrix(cols * cols.transpose());
  };

  double worst_gap = 0.0;  // how far any candidate got below the projection
  for (int inst = 0; inst < 20; ++inst) {
    const Matrix base = random_proj(6, 2);
    Matrix noise = random_matrix(6);
    noise = 0.5 * (noise + noise.transpose()).eval();
    noise *= 0.3 / noise.norm();
    const Matrix t = base + noise;
    const Matrix p = pi_project(t, 2);
    const double mine = (t - p).norm();
    for (int trial = 0; trial < 200; ++trial) {
      const double cand = (t - random_proj(6, 2)).norm();
      worst_gap = std::max(worst_gap, mine - cand);
    }
  }

  double worst_residual = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    Matrix h = random_matrix(8);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    const double ef = 0.5 * (es.eigenvalues()(2) + es.eigenvalues()(3));
    worst_residual = std::max(worst_residual,
                              trace_identity_check(h, ef, random_proj(8, 3)));
  }
  std::ostringstream det;
  det << "sweep margin " << worst_gap << " (<= 1e-12), trace-identity residual "
      << worst_residual;
  rep.add("13-projector-trace-identity",
          worst_gap <= 1e-12 && worst_residual <= 1e-10, worst_residual,
          1e-10, det.str());
}

void check_gradient_consistency(Reporter& rep, const Instances& in) {
  const DegSeries s = expand_degenerate(in.deg_sys, in.deg_gs, in.deg_w, 2);
  const BlockFrame& frame = s.frame;
  const std::vector<double> grid = {2e-1, 1e-1, 5e-2, 2.5e-2};
  double worst = 0.0;
  bool pass = true;
  std::ostringstream det;
  for (int n = 1; n <= 2; ++n) {
    std::vector<double> res;
    for (const double beta : grid) {
      BlockCoefficient a = BlockCoefficient::zero(frame);
      double bk = 1.0;
      for (int k = 1; k <= n; ++k) {
        bk *= beta;
        a += bk * s.a[k - 1];
      }
      res.push_back(
          chart_gradient_fd(in.deg_sys, frame, (beta * in.deg_w).eval(), a)
              .norm());
    }
    SlopeFitOptions fo;
    fo.check_sign = false;
    fo.noise_floor = 1e-9;  // central-difference noise
    fo.slope_tol = 0.3;
    const SlopeReport r = fit_slope(grid, res, n + 1.0, fo);
    pass = pass && r.pass;
    worst = std::max(worst, std::abs(r.fitted_slope - (n + 1.0)));
    det << "n=" << n << " slope " << r.fitted_slope << " ";
  }
  rep.add("14-gradient-consistency", pass, worst, 0.3, det.str());
}

}  // namespace

bool run_validation(const CheckSink& sink, int workers) {
  Reporter rep{sink};
  const Instances in;
  rep.guarded("01-first-order-energy",
              [&] { check_first_order_energy(rep, in); });
  rep.guarded("02-series-consistency",
              [&] { check_series_consistency(rep, in); });
  rep.guarded("03-wigner-nondeg",
              [&] { check_wigner_nondeg(rep, in, workers); });
  rep.guarded("04-wigner-deg", [&] { check_wigner_deg(rep, in, workers); });
  rep.guarded("05-no-splitting", [&] { check_no_splitting(rep, in); });
  rep.guarded("06-trace-structure", [&] { check_trace_structure(rep, in); });
  rep.guarded("07-response-structure",
              [&] { check_response_structure(rep, in); });
  rep.guarded("08-evaluator-crosscheck",
              [&] { check_evaluator_crosscheck(rep, in); });
  rep.guarded("09-mo-dm-equivalence",
              [&] { check_mo_dm_equivalence(rep, in); });
  rep.guarded("10-theta-structure", [&] { check_theta_structure(rep, in); });
  rep.guarded("11-first-order-deg-blocks",
              [&] { check_first_order_deg_blocks(rep, in); });
  rep.guarded("12-uniqueness-condition",
              [&] { check_uniqueness_condition(rep, in); });
  rep.guarded("13-projector-trace-identity",
              [&] { check_projector_and_trace_identity(rep, in); });
  rep.guarded("14-gradient-consistency",
              [&] { check_gradient_consistency(rep, in); });
  return rep.all_passed;
}

}  // namespace rhfpt
