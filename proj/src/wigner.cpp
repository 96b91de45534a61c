#include "rhfpt/wigner.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <atomic>
#include <future>

namespace rhfpt {

namespace {

/// Deterministic parallel map over indices [0, count): results land in
/// their slots regardless of scheduling.
template <typename F>
void parallel_for(int workers, int count, F&& body) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::future<void>> futures;
  std::atomic<int> next{0};
  const int n_threads = std::min(workers, count);
  for (int t = 0; t < n_threads; ++t)
    futures.push_back(std::async(std::launch::async, [&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        body(i);
    }));
  for (auto& f : futures) f.get();  // rethrows worker exceptions
}

}  // namespace

Matrix pi_project(const Matrix& t, int n_electrons, double tol_half) {
  if (t.rows() != t.cols()) throw InputError("pi_project: t must be square");
  if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw InputError("pi_project: t must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (t + t.transpose()));
  const Vector& ev = es.eigenvalues();
  int above = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i) - 0.5) < tol_half)
      throw DomainError(
          "pi_project: eigenvalue at the 1/2 threshold; t is not within "
          "the projector manifold's half-distance neighborhood");
    if (ev(i) >= 0.5) ++above;
  }
  if (above != n_electrons)
    throw DomainError(
        "pi_project: eigenvalue count above 1/2 does not match the "
        "electron count");
  const Matrix& u = es.eigenvectors();
  const Matrix top = u.rightCols(above);  // ascending order
  return top * top.transpose();
}

SlopeReport fit_slope(const std::vector<double>& beta_grid,
                      const std::vector<double>& errors, double expected,
                      const SlopeFitOptions& opts) {
  if (beta_grid.size() != errors.size())
    throw InputError("fit_slope: grid/error length mismatch");
  SlopeReport rep;
  rep.beta_grid = beta_grid;
  rep.errors = errors;
  rep.expected_slope = expected;
  rep.slope_tol = opts.slope_tol;
  rep.min_error = errors.empty()
                      ? 0.0
                      : *std::min_element(errors.begin(), errors.end());

  std::vector<double> lx, ly;
  for (size_t i = 0; i < beta_grid.size(); ++i) {
    if (opts.drop_largest && i == 0) continue;
    if (!(errors[i] > opts.noise_floor)) continue;  // noise floor / negatives
    lx.push_back(std::log(beta_grid[i]));
    ly.push_back(std::log(errors[i]));
  }
  rep.points_used = static_cast<int>(lx.size());
  if (rep.points_used < opts.min_points) {
    rep.pass = false;
    rep.fitted_slope = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double m = lx.size();
  rep.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.pass = std::abs(rep.fitted_slope - expected) <= opts.slope_tol;
  if (opts.check_sign && rep.min_error < -opts.sign_tol) rep.pass = false;
  return rep;
}

namespace {

/// Tightly converged reference minimum at beta*w, warm-started.
double reference_energy(const LatticeSystem& sys, const Vector& w,
                        double beta, const Matrix& warm_start) {
  ScfOptions opts;
  opts.tol_residual = 1e-13;
  opts.newton_tol = 1e-14;
  opts.initial_gamma = warm_start;
  const GroundState ref = solve_scf(sys, (beta * w).eval(), opts);
  return ref.energy;
}

}  // namespace

SlopeReport wigner_check_nondeg(const LatticeSystem& sys,
                                const GroundState& gs,
                                const NondegSeries& series, const Vector& w,
                                int n, const std::vector<double>& beta_grid,
                                const SlopeFitOptions& opts, int workers) {
  if (n > series.order)
    throw InputError("wigner_check_nondeg: series order too low");
  std::vector<double> errors(beta_grid.size());
  parallel_for(workers, static_cast<int>(beta_grid.size()), [&](int i) {
    const double beta = beta_grid[i];
    const Matrix truncated = series.truncated_gamma(gs.gamma0, beta, n);
    const Matrix projected = pi_project(truncated, sys.n_electrons());
    const double e_trial = energy(sys, projected, (beta * w).eval());
    const double e_min = reference_energy(sys, w, beta, projected);
    errors[i] = e_trial - e_min;
  });
  return fit_slope(beta_grid, errors, 2.0 * n + 2.0, opts);
}

DegWignerReport wigner_check_deg(const LatticeSystem& sys,
                                 const GroundState& gs,
                                 const DegSeries& series, const Vector& w,
                                 int n, const std::vector<double>& beta_grid,
                                 const SlopeFitOptions& opts, int workers) {
  if (n > series.order)
    throw InputError("wigner_check_deg: series order too low");
  const int count = static_cast<int>(beta_grid.size());
  std::vector<bool> usable(count, false);
  std::vector<double> var_raw(count), ser_raw(count);
  parallel_for(workers, count, [&](int i) {
    const double beta = beta_grid[i];
    BlockCoefficient a = BlockCoefficient::zero(series.frame);
    double b = 1.0;
    for (int k = 1; k <= n; ++k) {
      b *= beta;
      a += b * series.a[k - 1];
    }
    Matrix chart_point;
    try {
      chart_point = gamma_of(series.frame, a);
    } catch (const DomainError&) {
      return;  // outside the occupancy box at this beta; drop the point
    }
    const double e_trial = energy(sys, chart_point, (beta * w).eval());
    const double e_min = reference_energy(sys, w, beta, chart_point);
    var_raw[i] = e_trial - e_min;

    double e_series = gs.energy;
    double bk = 1.0;
    for (int k = 1; k <= 2 * n + 1; ++k) {
      bk *= beta;
      e_series += bk * series.energy[k - 1];
    }
    ser_raw[i] = std::abs(e_series - e_min);
    usable[i] = true;
  });
  std::vector<double> grid_used, var_errors, ser_errors;
  for (int i = 0; i < count; ++i) {
    if (!usable[i]) continue;
    grid_used.push_back(beta_grid[i]);
    var_errors.push_back(var_raw[i]);
    ser_errors.push_back(ser_raw[i]);
  }
  DegWignerReport rep;
  rep.variational = fit_slope(grid_used, var_errors, 2.0 * n + 2.0, opts);
  SlopeFitOptions series_opts = opts;
  series_opts.check_sign = false;  // the series error has no fixed sign
  rep.energy_series =
      fit_slope(grid_used, ser_errors, 2.0 * n + 2.0, series_opts);
  return rep;
}

double trace_identity_check(const Matrix& h, double eps_f,
                            const Matrix& gamma_prime) {
  const int n = static_cast<int>(h.rows());
  const Matrix hs = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hs);
  const Vector& ev = es.eigenvalues();
  for (int i = 0; i < n; ++i)
    if (std::abs(ev(i) - eps_f) < 1e-12)
      throw DomainError("trace_identity_check: eps_f lies on the spectrum");
  int below = 0;
  for (int i = 0; i < n; ++i)
    if (ev(i) < eps_f) ++below;
  const Matrix occ = es.eigenvectors().leftCols(below);
  const Matrix gamma = occ * occ.transpose();
  if (std::abs(gamma_prime.trace() - gamma.trace()) > 1e-8)
    throw InputError(
        "trace_identity_check: gamma' trace does not match the spectral "
        "projector's rank");
  const Matrix q = gamma_prime - gamma;
  const double lhs = (hs.array() * q.array()).sum();
  if (lhs < -1e-12)
    throw StructuralError(
        "trace_identity_check: Tr(HQ) came out negative");
  // |h - eps_f| in the eigenbasis
  const Matrix habs = es.eigenvectors() *
                      (ev.array() - eps_f).abs().matrix().asDiagonal() *
                      es.eigenvectors().transpose();
  const double rhs = (habs.array() * (q * q).array()).sum();
  return std::abs(lhs - rhs);
}

}  // namespace rhfpt
