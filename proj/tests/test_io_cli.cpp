#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rhfpt/config.hpp"
#include "rhfpt/io.hpp"
#include "rhfpt/runner.hpp"
#include <Eigen/Eigenvalues>
#include "test_helpers.hpp"

using namespace rhfpt;
namespace tt = rhfpt::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("rhfpt_test_" + tag);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("numeric blocks round-trip at full precision") {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const Matrix m = tt::random_symmetric(7, seed);
    std::stringstream ss;
    io::write_matrix_csv(ss, m);
    CHECK((io::read_matrix_csv(ss) - m).cwiseAbs().maxCoeff() == 0.0);

    const Vector v = tt::random_vector(9, seed);
    std::stringstream sv;
    io::write_vector_csv(sv, v);
    CHECK((io::read_vector_csv(sv) - v).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("key-value parsing guards") {
  SUBCASE("duplicate keys") {
    std::stringstream ss("a = 1\na = 2\n");
    CHECK_THROWS_AS(io::read_key_values(ss), InputError);
  }
  SUBCASE("malformed line") {
    std::stringstream ss("just words\n");
    CHECK_THROWS_AS(io::read_key_values(ss), InputError);
  }
  SUBCASE("comments and blanks are skipped") {
    std::stringstream ss("# comment\n\nkind = ring\n");
    const auto kv = io::read_key_values(ss);
    CHECK(kv.at("kind") == "ring");
  }
}

TEST_CASE("system files") {
  const fs::path dir = temp_dir("sys");
  SUBCASE("ring from keys") {
    std::ofstream f(dir / "ring.sys");
    f << "kind = ring\nn_sites = 8\nn_electrons = 2\nhopping = 0.5\n"
      << "kernel_scale = 3.0\n";
    f.close();
    const LatticeSystem sys = io::load_system((dir / "ring.sys").string());
    CHECK(sys.n_sites() == 8);
    CHECK(sys.n_electrons() == 2);
  }
  SUBCASE("unknown key is rejected") {
    std::ofstream f(dir / "bad.sys");
    f << "kind = ring\nn_sites = 8\nn_electrons = 2\nhoping = 0.5\n";
    f.close();
    CHECK_THROWS_AS(io::load_system((dir / "bad.sys").string()), InputError);
  }
  SUBCASE("explicit matrices") {
    const auto ring = make_ring(tt::deg_ring_params());
    io::save_matrix((dir / "k.csv").string(), ring.kinetic());
    io::save_vector((dir / "v.csv").string(), ring.v_ext());
    io::save_matrix((dir / "kernel.csv").string(), ring.kernel());
    std::ofstream f(dir / "explicit.sys");
    f << "kind = explicit\nn_electrons = 2\nkinetic_path = k.csv\n"
      << "v_ext_path = v.csv\nkernel_path = kernel.csv\n";
    f.close();
    const LatticeSystem sys =
        io::load_system((dir / "explicit.sys").string());
    CHECK((sys.kinetic() - ring.kinetic()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sys.kernel() - ring.kernel()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("ground-state archive round trip") {
  const auto sys = make_ring(tt::deg_ring_params());
  const GroundState gs = solve_scf(sys, tt::deg_ring_scf_options(8));
  const fs::path dir = temp_dir("gs");
  io::save_ground_state((dir / "state.txt").string(), gs);
  const GroundState back = io::load_ground_state((dir / "state.txt").string());
  CHECK((back.gamma0 - gs.gamma0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.h0 - gs.h0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.lambda - gs.lambda).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.fermi_level == gs.fermi_level);
  CHECK(back.n_full == gs.n_full);
  CHECK(back.n_partial == gs.n_partial);
  CHECK(back.energy == gs.energy);
}

TEST_CASE("experiment config parsing") {
  const fs::path dir = temp_dir("cfg");
  SUBCASE("full round") {
    std::ofstream f(dir / "a.cfg");
    f << "schema_version = 1\nkind = ring\nn_sites = 8\nn_electrons = 2\n"
      << "hopping = 0.5\nkernel_scale = 3.0\nmode = deg\norder = 2\n"
      << "beta_grid = 0.1, 0.03, 0.01\nseed = 7\nw_norm = 0.2\n";
    f.close();
    const ExperimentConfig cfg = parse_config((dir / "a.cfg").string());
    CHECK(cfg.mode == RunMode::deg);
    CHECK(cfg.order == 2);
    CHECK(cfg.beta_grid.size() == 3);
    CHECK(cfg.seed == 7);
    const LatticeSystem sys = cfg.build_system();
    const Vector w = cfg.build_perturbation(sys);
    CHECK(sys.dual_norm(w) == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("schema version is mandatory") {
    std::ofstream f(dir / "b.cfg");
    f << "kind = ring\nn_sites = 8\nn_electrons = 2\n";
    f.close();
    CHECK_THROWS_AS(parse_config((dir / "b.cfg").string()), InputError);
  }
  SUBCASE("unknown keys are rejected") {
    std::ofstream f(dir / "c.cfg");
    f << "schema_version = 1\nkind = ring\nn_sites = 8\nn_electrons = 2\n"
      << "tol_residul = 1e-9\n";
    f.close();
    CHECK_THROWS_AS(parse_config((dir / "c.cfg").string()), InputError);
  }
  SUBCASE("beta grid must decrease") {
    std::ofstream f(dir / "d.cfg");
    f << "schema_version = 1\nkind = ring\nn_sites = 8\nn_electrons = 2\n"
      << "beta_grid = 0.01, 0.1\n";
    f.close();
    CHECK_THROWS_AS(parse_config((dir / "d.cfg").string()), InputError);
  }
}

TEST_CASE("pipeline runs") {
  const fs::path dir = temp_dir("run");
  SUBCASE("degenerate expansion pipeline") {
    std::ofstream f(dir / "deg.cfg");
    f << "schema_version = 1\nkind = ring\nn_sites = 8\nn_electrons = 2\n"
      << "hopping = 0.5\nkernel_scale = 3.0\nmode = deg\norder = 2\n"
      << "seed = 29\nw_norm = 0.35\nout = " << (dir / "deg_out").string()
      << "\n";
    f.close();
    const ExperimentConfig cfg = parse_config((dir / "deg.cfg").string());
    CHECK(run(cfg) == 0);
    CHECK(fs::exists(dir / "deg_out" / "manifest.json"));
    CHECK(fs::exists(dir / "deg_out" / "summary.txt"));
    CHECK(fs::exists(dir / "deg_out" / "series_energy.csv"));
    CHECK(fs::exists(dir / "deg_out" / "ground_state.txt"));
    CHECK(slurp(dir / "deg_out" / "summary.txt").find("RESULT PASS") !=
          std::string::npos);
  }
  SUBCASE("wrong-case guard produces a structured error") {
    std::ofstream f(dir / "wrong.cfg");
    f << "schema_version = 1\nkind = ring\nn_sites = 8\nn_electrons = 2\n"
      << "hopping = 0.5\nkernel_scale = 3.0\nmode = nondeg\norder = 1\n"
      << "out = " << (dir / "wrong_out").string() << "\n";
    f.close();
    const ExperimentConfig cfg = parse_config((dir / "wrong.cfg").string());
    CHECK(run(cfg) == 2);
    const std::string manifest = slurp(dir / "wrong_out" / "manifest.json");
    CHECK(manifest.find("Degenerate") != std::string::npos);
  }
  SUBCASE("wigner pipeline is deterministic") {
    for (const char* tag : {"w1", "w2"}) {
      std::ofstream f(dir / (std::string(tag) + ".cfg"));
      f << "schema_version = 1\nkind = ring\nn_sites = 8\nn_electrons = 3\n"
        << "hopping = 0.6\nmode = wigner\norder = 1\nseed = 5\nw_norm = 1.2\n"
        << "beta_grid = 0.2, 0.1, 0.05, 0.025\nworkers = 2\n"
        << "out = " << (dir / (std::string("wout_") + tag)).string() << "\n";
      f.close();
      const ExperimentConfig cfg =
          parse_config((dir / (std::string(tag) + ".cfg")).string());
      CHECK(run(cfg) == 0);
    }
    CHECK(slurp(dir / "wout_w1" / "summary.txt") ==
          slurp(dir / "wout_w2" / "summary.txt"));
    CHECK(slurp(dir / "wout_w1" / "wigner.csv") ==
          slurp(dir / "wout_w2" / "wigner.csv"));
  }
  SUBCASE("fd pipeline") {
    std::ofstream f(dir / "fd.cfg");
    f << "schema_version = 1\nkind = ring\nn_sites = 8\nn_electrons = 3\n"
      << "hopping = 0.6\nmode = fd\nseed = 5\nw_norm = 1.2\n"
      << "out = " << (dir / "fd_out").string() << "\n";
    f.close();
    CHECK(run(parse_config((dir / "fd.cfg").string())) == 0);
  }
}

TEST_CASE("finite-difference oracle") {
  const auto sys = make_ring(tt::nondeg_ring_params());
  const GroundState gs = solve_scf(sys);
  SUBCASE("zero perturbation has zero derivatives") {
    const FdReport rep =
        fd_oracle(sys, gs, Vector::Zero(sys.n_sites()), 5e-3);
    CHECK(std::abs(rep.first) < 1e-10);
    CHECK(std::abs(rep.second_half) < 1e-7);
  }
  SUBCASE("step window is enforced") {
    const Vector w = tt::random_vector(sys.n_sites(), 4);
    CHECK_THROWS_AS(fd_oracle(sys, gs, w, 1e-7), InputError);
    CHECK_THROWS_AS(fd_oracle(sys, gs, w, 0.5), InputError);
  }
}
