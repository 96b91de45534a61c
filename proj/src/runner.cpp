#include "rhfpt/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>

#include "rhfpt/deg_pt.hpp"
#include "rhfpt/io.hpp"
#include "rhfpt/mo_pt.hpp"
#include "rhfpt/nondeg_pt.hpp"
#include "rhfpt/validation.hpp"
#include "rhfpt/version.hpp"
#include "rhfpt/wigner.hpp"

namespace rhfpt {

namespace fs = std::filesystem;
using nlohmann::json;

FdReport fd_oracle(const LatticeSystem& sys, const GroundState& gs,
                   const Vector& w, double step) {
  if (step < 1e-6 || step > 1e-2)
    throw InputError("fd_oracle: step outside the trusted window");
  auto minimum = [&](double beta) {
    ScfOptions o;
    o.tol_residual = 1e-14;
    o.newton_tol = 1e-15;
    o.initial_gamma = gs.gamma0;
    return solve_scf(sys, (beta * w).eval(), o).energy;
  };
  const double e0 = gs.energy;
  auto first = [&](double h) {
    return (minimum(h) - minimum(-h)) / (2.0 * h);
  };
  auto second = [&](double h) {
    return (minimum(h) - 2.0 * e0 + minimum(-h)) / (h * h);
  };
  const double d1_h = first(step);
  const double d1_h2 = first(step / 2);
  const double d2_h = second(step);
  const double d2_h2 = second(step / 2);
  FdReport rep;
  rep.first = (4.0 * d1_h2 - d1_h) / 3.0;
  rep.second_half = 0.5 * (4.0 * d2_h2 - d2_h) / 3.0;
  rep.first_error = std::abs(rep.first - d1_h2);
  rep.second_error = std::abs(rep.second_half - 0.5 * d2_h2);
  return rep;
}

namespace {

struct RunContext {
  const ExperimentConfig& cfg;
  fs::path out;
  std::vector<CheckResult> checks;
  json manifest;

  void check(const std::string& name, bool pass, double value, double tol,
             const std::string& detail = "") {
    checks.push_back({name, pass, value, tol, detail});
  }

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

std::vector<double> default_beta_grid() {
  return {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
}

void write_summary(RunContext& ctx) {
  std::ofstream f(ctx.out / "summary.txt");
  for (const auto& c : ctx.checks) f << format_check_line(c) << "\n";
  f << (ctx.all_passed() ? "RESULT PASS\n" : "RESULT FAIL\n");

  json jchecks = json::array();
  for (const auto& c : ctx.checks)
    jchecks.push_back({{"name", c.name},
                       {"pass", c.pass},
                       {"value", c.value},
                       {"tolerance", c.tolerance},
                       {"detail", c.detail}});
  ctx.manifest["checks"] = jchecks;
  ctx.manifest["result"] = ctx.all_passed() ? "pass" : "fail";
  std::ofstream m(ctx.out / "manifest.json");
  m << ctx.manifest.dump(2) << "\n";
}

void echo_config(RunContext& ctx) {
  json sys = json::object();
  for (const auto& [k, v] : ctx.cfg.system_keys) sys[k] = v;
  ctx.manifest["version"] = kVersion;
  ctx.manifest["schema_version"] = 1;
  ctx.manifest["system"] = sys;
  ctx.manifest["mode"] = to_string(ctx.cfg.mode);
  ctx.manifest["order"] = ctx.cfg.order;
  ctx.manifest["seed"] = ctx.cfg.seed;
  ctx.manifest["w_norm"] = ctx.cfg.w_norm;
  ctx.manifest["beta_grid"] = ctx.cfg.beta_grid;
  ctx.manifest["tolerances"] = {{"tol_residual", ctx.cfg.tol_residual},
                                {"tol_cluster", ctx.cfg.tol_cluster},
                                {"slope_tol", ctx.cfg.slope_tol},
                                {"noise_floor", ctx.cfg.noise_floor}};
  ctx.manifest["workers"] = ctx.cfg.workers;
  if (ctx.cfg.w_path) ctx.manifest["w_path"] = *ctx.cfg.w_path;
}

ScfOptions scf_options(const ExperimentConfig& cfg) {
  ScfOptions o;
  o.tol_residual = cfg.tol_residual;
  return o;
}

GroundState solve_and_archive(RunContext& ctx, const LatticeSystem& sys) {
  const GroundState gs = solve_scf(sys, scf_options(ctx.cfg));
  io::save_ground_state((ctx.out / "ground_state.txt").string(), gs);
  const FermiCase fc = classify(gs, ctx.cfg.tol_cluster);
  ctx.manifest["fermi_case"] = to_string(fc);
  ctx.manifest["fermi_level"] = gs.fermi_level;
  ctx.manifest["energy"] = gs.energy;
  ctx.manifest["n_full"] = gs.n_full;
  ctx.manifest["n_partial"] = gs.n_partial;
  ctx.check("trace", std::abs(gs.gamma0.trace() - sys.n_electrons()) <= 1e-9,
            std::abs(gs.gamma0.trace() - sys.n_electrons()), 1e-9);
  ctx.check("mean-field-commutator",
            (gs.h0 * gs.gamma0 - gs.gamma0 * gs.h0).norm() <= 1e-8,
            (gs.h0 * gs.gamma0 - gs.gamma0 * gs.h0).norm(), 1e-8);
  return gs;
}

void run_ground_state(RunContext& ctx) {
  const LatticeSystem sys = ctx.cfg.build_system();
  solve_and_archive(ctx, sys);
}

void run_nondeg(RunContext& ctx) {
  const LatticeSystem sys = ctx.cfg.build_system();
  const GroundState gs = solve_and_archive(ctx, sys);
  if (classify(gs, ctx.cfg.tol_cluster) != FermiCase::NonDegenerate)
    throw DomainError(
        std::string("mode nondeg requires a NonDegenerate ground state; "
                    "classify says ") +
        to_string(classify(gs, ctx.cfg.tol_cluster)));
  const Vector w = ctx.cfg.build_perturbation(sys);
  const NondegSeries s = expand(sys, gs, w, ctx.cfg.order);

  std::ofstream rho(ctx.out / "series_rho.csv");
  rho << std::setprecision(17);
  std::ofstream table(ctx.out / "series_energy.csv");
  table << "order,energy,gamma_frobenius,rho_coulomb_norm,trace_gamma\n"
        << std::setprecision(17);
  for (int k = 1; k <= s.order; ++k) {
    io::write_vector_csv(rho, s.rho[k - 1]);
    table << k << "," << s.energy[k - 1] << "," << s.gamma[k - 1].norm()
          << "," << sys.coulomb_norm(s.rho[k - 1]) << ","
          << s.gamma[k - 1].trace() << "\n";
  }
  const double pair = gs.density().dot(w);
  ctx.check("first-order-energy",
            std::abs(s.energy[0] - pair) <= 1e-8 * std::abs(pair),
            std::abs(s.energy[0] - pair), 1e-8 * std::abs(pair));
  double worst_trace = 0.0;
  for (const Matrix& g : s.gamma)
    worst_trace = std::max(worst_trace, std::abs(g.trace()));
  ctx.check("correction-traces", worst_trace <= 1e-10, worst_trace, 1e-10);
}

void run_deg(RunContext& ctx) {
  const LatticeSystem sys = ctx.cfg.build_system();
  const GroundState gs = solve_and_archive(ctx, sys);
  if (classify(gs, ctx.cfg.tol_cluster) != FermiCase::Degenerate)
    throw DomainError(
        std::string("mode deg requires a Degenerate ground state; classify "
                    "says ") +
        to_string(classify(gs, ctx.cfg.tol_cluster)));
  const Vector w = ctx.cfg.build_perturbation(sys);
  const DegSeries s = expand_degenerate(sys, gs, w, ctx.cfg.order);

  std::ofstream table(ctx.out / "series_blocks.csv");
  table << "order,uf,up,pf,pp,gamma_frobenius\n" << std::setprecision(17);
  for (int k = 1; k <= s.order; ++k)
    table << k << "," << s.a[k - 1].a_uf.norm() << ","
          << s.a[k - 1].a_up.norm() << "," << s.a[k - 1].a_pf.norm() << ","
          << s.a[k - 1].a_pp.norm() << "," << s.gamma[k - 1].norm() << "\n";
  std::ofstream etable(ctx.out / "series_energy.csv");
  etable << "order,energy\n" << std::setprecision(17);
  for (size_t m = 1; m <= s.energy.size(); ++m)
    etable << m << "," << s.energy[m - 1] << "\n";

  const double spread =
      gs.eigvals(gs.n_full + gs.n_partial - 1) - gs.eigvals(gs.n_full);
  ctx.manifest["fermi_cluster_spread"] = spread;
  const double pair = gs.density().dot(w);
  ctx.check("first-order-energy",
            std::abs(s.energy[0] - pair) <= 1e-8 * std::abs(pair),
            std::abs(s.energy[0] - pair), 1e-8 * std::abs(pair));
  double worst_trace = 0.0;
  for (const Matrix& g : s.gamma)
    worst_trace = std::max(worst_trace, std::abs(g.trace()));
  ctx.check("correction-traces", worst_trace <= 1e-10, worst_trace, 1e-10);
}

void run_mo(RunContext& ctx) {
  const LatticeSystem sys = ctx.cfg.build_system();
  const GroundState gs = solve_and_archive(ctx, sys);
  const Vector w = ctx.cfg.build_perturbation(sys);
  const MOSeries s = mo_expand(sys, gs, w, ctx.cfg.order);

  std::ofstream table(ctx.out / "series_eps.csv");
  table << std::setprecision(17);
  table << "order";
  for (int i = 0; i < sys.n_electrons(); ++i) table << ",eps_" << i + 1;
  table << "\n";
  for (int k = 0; k <= s.order; ++k) {
    table << k;
    for (int i = 0; i < sys.n_electrons(); ++i) table << "," << s.eps[k](i);
    table << "\n";
  }
  const auto defects = orthogonality_defects(s);
  double worst = 0.0;
  for (const double d : defects) worst = std::max(worst, d);
  ctx.check("orthogonality-defects", worst <= 1e-9, worst, 1e-9);
}

void run_wigner(RunContext& ctx) {
  const LatticeSystem sys = ctx.cfg.build_system();
  const GroundState gs = solve_and_archive(ctx, sys);
  const Vector w = ctx.cfg.build_perturbation(sys);
  const std::vector<double> grid =
      ctx.cfg.beta_grid.empty() ? default_beta_grid() : ctx.cfg.beta_grid;
  SlopeFitOptions fo;
  fo.slope_tol = ctx.cfg.slope_tol;
  fo.noise_floor = ctx.cfg.noise_floor;
  const FermiCase fc = classify(gs, ctx.cfg.tol_cluster);

  auto dump = [&](const std::string& stem, const SlopeReport& r) {
    std::ofstream f(ctx.out / (stem + ".csv"));
    f << "beta,error\n" << std::setprecision(17);
    for (size_t i = 0; i < r.beta_grid.size(); ++i)
      f << r.beta_grid[i] << "," << r.errors[i] << "\n";
    f << "# fitted_slope " << r.fitted_slope << " expected "
      << r.expected_slope << "\n";
  };

  if (fc == FermiCase::NonDegenerate) {
    const NondegSeries s = expand(sys, gs, w, ctx.cfg.order);
    const SlopeReport r = wigner_check_nondeg(sys, gs, s, w, ctx.cfg.order,
                                              grid, fo, ctx.cfg.workers);
    dump("wigner", r);
    ctx.check("wigner-slope", r.pass,
              std::abs(r.fitted_slope - r.expected_slope), fo.slope_tol);
    ctx.check("wigner-sign", r.min_error >= -1e-12, r.min_error, -1e-12);
  } else if (fc == FermiCase::Degenerate) {
    const DegSeries s = expand_degenerate(sys, gs, w, ctx.cfg.order);
    const DegWignerReport r = wigner_check_deg(sys, gs, s, w, ctx.cfg.order,
                                               grid, fo, ctx.cfg.workers);
    dump("wigner", r.variational);
    dump("wigner_energy_series", r.energy_series);
    ctx.check("wigner-slope", r.variational.pass,
              std::abs(r.variational.fitted_slope -
                       r.variational.expected_slope),
              fo.slope_tol);
    ctx.check("wigner-series-slope", r.energy_series.pass,
              std::abs(r.energy_series.fitted_slope -
                       r.energy_series.expected_slope),
              fo.slope_tol);
    ctx.check("wigner-sign", r.variational.min_error >= -1e-12,
              r.variational.min_error, -1e-12);
  } else {
    throw DomainError(
        "mode wigner: boundary-case ground state, no expansion applies");
  }
}

void run_fd(RunContext& ctx) {
  const LatticeSystem sys = ctx.cfg.build_system();
  const GroundState gs = solve_and_archive(ctx, sys);
  const Vector w = ctx.cfg.build_perturbation(sys);
  const FdReport fd = fd_oracle(sys, gs, w, 5e-3);
  const FermiCase fc = classify(gs, ctx.cfg.tol_cluster);

  double e1 = 0.0, e2 = 0.0;
  if (fc == FermiCase::Degenerate) {
    const DegSeries s = expand_degenerate(sys, gs, w, 1);
    e1 = s.energy[0];
    e2 = s.energy[1];
  } else {
    const NondegSeries s = expand(sys, gs, w, 2);
    e1 = s.energy[0];
    e2 = s.energy[1];
  }
  ctx.manifest["fd_first"] = fd.first;
  ctx.manifest["fd_second_half"] = fd.second_half;
  ctx.manifest["fd_first_error"] = fd.first_error;
  ctx.manifest["fd_second_error"] = fd.second_error;
  ctx.check("fd-first-order",
            std::abs(e1 - fd.first) <= 1e-6 * std::abs(e1),
            std::abs(e1 - fd.first) / std::abs(e1), 1e-6);
  ctx.check("fd-second-order",
            std::abs(e2 - fd.second_half) <= 1e-5 * std::abs(e2),
            std::abs(e2 - fd.second_half) / std::abs(e2), 1e-5);
}

void run_validate(RunContext& ctx) {
  run_validation(
      [&](const CheckResult& r) {
        ctx.checks.push_back(r);
        std::cout << format_check_line(r) << std::endl;
      },
      ctx.cfg.workers);
}

}  // namespace

int run(const ExperimentConfig& config) {
  RunContext ctx{config, fs::path(config.out_dir), {}, json::object()};
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec && !fs::exists(ctx.out))
    throw InputError("cannot create output directory: " + config.out_dir);
  echo_config(ctx);
  try {
    switch (config.mode) {
      case RunMode::ground_state:
        run_ground_state(ctx);
        break;
      case RunMode::nondeg:
        run_nondeg(ctx);
        break;
      case RunMode::deg:
        run_deg(ctx);
        break;
      case RunMode::mo:
        run_mo(ctx);
        break;
      case RunMode::wigner:
        run_wigner(ctx);
        break;
      case RunMode::fd:
        run_fd(ctx);
        break;
      case RunMode::validate:
        run_validate(ctx);
        break;
    }
  } catch (const std::exception& e) {
    ctx.manifest["error"] = e.what();
    ctx.check("run-completed", false, std::nan(""), 0.0, e.what());
    write_summary(ctx);
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  write_summary(ctx);
  return ctx.all_passed() ? 0 : 1;
}

}  // namespace rhfpt
