#include "rhfpt/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace rhfpt {

LatticeSystem::LatticeSystem(Matrix kinetic, Vector v_ext, Matrix kernel,
                             int n_electrons, Tolerances tol)
    : kinetic_(std::move(kinetic)),
      v_ext_(std::move(v_ext)),
      kernel_(std::move(kernel)),
      n_electrons_(n_electrons),
      tol_(tol) {
  const auto n = v_ext_.size();
  if (n < 1) throw InputError("lattice system needs at least one site");
  if (kinetic_.rows() != n || kinetic_.cols() != n)
    throw InputError("kinetic matrix shape does not match v_ext length");
  if (kernel_.rows() != n || kernel_.cols() != n)
    throw InputError("kernel shape does not match v_ext length");
  if (n_electrons_ < 1) throw InputError("n_electrons must be positive");
  if (n_electrons_ > n)
    throw InputError("n_electrons exceeds the number of sites");
  if (!kinetic_.isApprox(kinetic_.transpose(), 1e-12))
    throw InputError("kinetic matrix must be symmetric");
  if (!kernel_.isApprox(kernel_.transpose(), 1e-12))
    throw InputError("kernel must be symmetric");
  kinetic_ = ((kinetic_ + kinetic_.transpose()) / 2).eval();
  kernel_ = ((kernel_ + kernel_.transpose()) / 2).eval();
  if (!v_ext_.allFinite() || !kinetic_.allFinite() || !kernel_.allFinite())
    throw InputError("system data must be finite");

  Eigen::SelfAdjointEigenSolver<Matrix> es(kernel_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= tol_.spd)
    throw InputError("kernel is not positive definite within tolerance");
  kernel_llt_.compute(kernel_);
}

double LatticeSystem::coulomb_norm(const Vector& rho) const {
  return std::sqrt(std::max(0.0, rho.dot(kernel_ * rho)));
}

double LatticeSystem::dual_norm(const Vector& w) const {
  return std::sqrt(std::max(0.0, w.dot(kernel_llt_.solve(w))));
}

double LatticeSystem::coulomb_dot(const Vector& a, const Vector& b) const {
  return a.dot(kernel_ * b);
}

Vector density_of(const Matrix& gamma) {
  if (gamma.rows() != gamma.cols())
    throw InputError("density_of: gamma must be square");
  return gamma.diagonal();
}

double energy(const LatticeSystem& sys, const Matrix& gamma, const Vector& w) {
  const int n = sys.n_sites();
  if (gamma.rows() != n || gamma.cols() != n)
    throw InputError("energy: gamma shape does not match system");
  if (w.size() != n) throw InputError("energy: potential length mismatch");
  const Vector rho = gamma.diagonal();
  const double kin = (sys.kinetic().array() * gamma.array()).sum();
  const double ext = sys.v_ext().dot(rho);
  const double hartree = 0.5 * rho.dot(sys.kernel() * rho);
  const double pert = w.dot(rho);
  if (!std::isfinite(kin)) throw AccuracyError("energy: kinetic term overflow");
  if (!std::isfinite(ext))
    throw AccuracyError("energy: external-potential term overflow");
  if (!std::isfinite(hartree))
    throw AccuracyError("energy: interaction term overflow");
  if (!std::isfinite(pert))
    throw AccuracyError("energy: perturbation term overflow");
  return kin + ext + hartree + pert;
}

double energy(const LatticeSystem& sys, const Matrix& gamma) {
  return energy(sys, gamma, Vector::Zero(sys.n_sites()));
}

Matrix mean_field(const LatticeSystem& sys, const Vector& rho,
                  const Vector& w) {
  const int n = sys.n_sites();
  if (rho.size() != n) throw InputError("mean_field: density length mismatch");
  if (w.size() != n) throw InputError("mean_field: potential length mismatch");
  Matrix h = sys.kinetic();
  h.diagonal() += sys.v_ext() + sys.kernel() * rho + w;
  return h;
}

Matrix mean_field(const LatticeSystem& sys, const Vector& rho) {
  return mean_field(sys, rho, Vector::Zero(sys.n_sites()));
}

void check_density_matrix(const Matrix& gamma, double n_electrons,
                          const Tolerances& tol) {
  if (gamma.rows() != gamma.cols())
    throw InputError("density matrix must be square");
  if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw InputError("density matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol.psd ||
      es.eigenvalues().maxCoeff() > 1.0 + tol.psd)
    throw InputError("density matrix spectrum leaves [0,1]");
  if (n_electrons >= 0 &&
      std::abs(gamma.trace() - n_electrons) > tol.trace)
    throw InputError("density matrix trace does not match electron count");
}

namespace {

Matrix cyclic_shift(int n) {
  Matrix s = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) s((i + 1) % n, i) = 1.0;
  return s;
}

}  // namespace

LatticeSystem make_ring(const RingParams& p) {
  if (p.n_sites < 3) throw InputError("ring needs at least 3 sites");
  if (p.n_electrons >= p.n_sites)
    throw InputError("ring: n_electrons must be below n_sites");
  if (p.yukawa_mass <= 0) throw InputError("ring: yukawa_mass must be > 0");
  if (p.kernel_scale <= 0) throw InputError("ring: kernel_scale must be > 0");
  const int n = p.n_sites;
  const Matrix s = cyclic_shift(n);
  const Matrix lap = 2.0 * Matrix::Identity(n, n) - s - s.transpose();
  const Matrix kinetic = 0.5 * p.hopping * lap;
  const Matrix kernel =
      p.kernel_scale *
      (lap + p.yukawa_mass * p.yukawa_mass * Matrix::Identity(n, n))
          .inverse();
  return LatticeSystem(kinetic, Vector::Zero(n), kernel, p.n_electrons);
}

LatticeSystem make_double_well(const DoubleWellParams& p) {
  if (p.n_sites < 4) throw InputError("double_well needs at least 4 sites");
  if (p.n_electrons >= p.n_sites)
    throw InputError("double_well: n_electrons must be below n_sites");
  if (p.width <= 0) throw InputError("double_well: width must be > 0");
  const int n = p.n_sites;
  Matrix lap = 2.0 * Matrix::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    lap(i, i + 1) = -1.0;
    lap(i + 1, i) = -1.0;
  }
  const Matrix kinetic = 0.5 * p.hopping * lap;
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    const double d1 = (i - p.pos1) / p.width;
    const double d2 = (i - p.pos2) / p.width;
    v(i) = -p.depth1 * std::exp(-0.5 * d1 * d1) -
           p.depth2 * std::exp(-0.5 * d2 * d2);
  }
  const Matrix kernel =
      p.kernel_scale *
      (lap + p.yukawa_mass * p.yukawa_mass * Matrix::Identity(n, n))
          .inverse();
  return LatticeSystem(kinetic, v, kernel, p.n_electrons);
}

LatticeSystem make_synthetic_degenerate(const SyntheticDegenerateParams& p) {
  const int n = p.n_sites;
  if (p.n_partial < 1) throw InputError("synthetic: n_partial must be >= 1");
  if (p.n_electrons >= n)
    throw InputError("synthetic: n_electrons must be below n_sites");
  if (p.n_electrons + p.n_partial > n)
    throw InputError("synthetic: cluster does not fit below n_sites");
  if (p.gap_below <= 0 || p.gap_above <= 0)
    throw InputError("synthetic: gaps must be positive");

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss;

  // Levels: a simple ladder, then the n_partial-fold cluster, then the rest.
  // The cluster is positioned so that equal filling puts the Fermi level on
  // it for the requested electron count.
  const int n_below = p.n_electrons - 1;  // at least one electron on the shell
  if (n_below < 0 || n_below + p.n_partial > n)
    throw InputError("synthetic: infeasible electron count");
  Vector levels(n);
  double e = 0.0;
  for (int i = 0; i < n_below; ++i, e += p.level_spacing) levels(i) = e;
  const double cluster = e - p.level_spacing + p.gap_below;
  for (int i = 0; i < p.n_partial; ++i) levels(n_below + i) = cluster;
  e = cluster + p.gap_above;
  for (int i = n_below + p.n_partial; i < n; ++i, e += p.level_spacing)
    levels(i) = e;

  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  const Matrix core = q * levels.asDiagonal() * q.transpose();

  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = gauss(rng);
  const Matrix kernel =
      p.kernel_scale *
      (b * b.transpose() / n + Matrix::Identity(n, n));

  return LatticeSystem(core, Vector::Zero(n), kernel, p.n_electrons);
}

LatticeSystem build_demo_system(DemoKind kind, const DemoParams& params) {
  switch (kind) {
    case DemoKind::ring:
      return make_ring(params.ring);
    case DemoKind::double_well:
      return make_double_well(params.double_well);
    case DemoKind::synthetic_degenerate:
      return make_synthetic_degenerate(params.synthetic);
  }
  throw InputError("unknown demo system kind");
}

}  // namespace rhfpt
