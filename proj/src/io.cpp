#include "rhfpt/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace rhfpt::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> split_doubles(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

std::string next_content_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[')
      throw InputError("numeric block interrupted by section header " + line);
    return line;
  }
  throw InputError("unexpected end of numeric block");
}

void write_row(std::ostream& os, const double* data, Eigen::Index count) {
  os << std::setprecision(17);
  for (Eigen::Index j = 0; j < count; ++j) {
    if (j) os << ",";
    os << data[j];
  }
  os << "\n";
}

}  // namespace

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  os << m.rows() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Vector row = m.row(i);
    write_row(os, row.data(), row.size());
  }
}

Matrix read_matrix_csv(std::istream& is) {
  const int n = std::stoi(next_content_line(is));
  if (n < 0) throw InputError("matrix block: negative dimension");
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const auto row = split_doubles(next_content_line(is));
    if (static_cast<int>(row.size()) != n)
      throw InputError("matrix block: row length mismatch");
    for (int j = 0; j < n; ++j) m(i, j) = row[j];
  }
  return m;
}

void write_vector_csv(std::ostream& os, const Vector& v) {
  os << v.size() << "\n";
  write_row(os, v.data(), v.size());
}

Vector read_vector_csv(std::istream& is) {
  const int n = std::stoi(next_content_line(is));
  if (n < 0) throw InputError("vector block: negative dimension");
  const auto vals = split_doubles(next_content_line(is));
  if (static_cast<int>(vals.size()) != n)
    throw InputError("vector block: length mismatch");
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = vals[i];
  return v;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open: " + path);
  return f;
}

}  // namespace

void save_matrix(const std::string& path, const Matrix& m) {
  auto f = open_out(path);
  write_matrix_csv(f, m);
}

Matrix load_matrix(const std::string& path) {
  auto f = open_in(path);
  return read_matrix_csv(f);
}

void save_vector(const std::string& path, const Vector& v) {
  auto f = open_out(path);
  write_vector_csv(f, v);
}

Vector load_vector(const std::string& path) {
  auto f = open_in(path);
  return read_vector_csv(f);
}

std::map<std::string, std::string> read_key_values(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("malformed line (expected key = value): " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("empty key in line: " + line);
    if (!kv.emplace(key, value).second)
      throw InputError("duplicate key: " + key);
  }
  return kv;
}

namespace {

const std::set<std::string> kSystemKeys = {
    "kind",          "n_sites",      "n_electrons", "hopping",
    "yukawa_mass",   "kernel_scale", "depth1",      "depth2",
    "pos1",          "pos2",         "width",       "n_partial",
    "gap_below",     "gap_above",    "level_spacing",
    "system_seed",   "kinetic_path", "v_ext_path",  "kernel_path",
};

double get_num(const std::map<std::string, std::string>& kv,
               const std::string& key, double fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stod(it->second);
}

int get_int(const std::map<std::string, std::string>& kv,
            const std::string& key, int fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stoi(it->second);
}

std::string require(const std::map<std::string, std::string>& kv,
                    const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw InputError("missing required key: " + key);
  return it->second;
}

}  // namespace

bool is_system_key(const std::string& key) { return kSystemKeys.count(key); }

LatticeSystem system_from_keys(
    const std::map<std::string, std::string>& keys,
    const std::string& base_dir) {
  for (const auto& [k, v] : keys)
    if (!is_system_key(k))
      throw InputError("unknown system key: " + k);
  const std::string kind = require(keys, "kind");
  const int n_sites = get_int(keys, "n_sites", 0);
  const int n_electrons = get_int(keys, "n_electrons", 0);
  if (kind == "ring") {
    RingParams p;
    p.n_sites = n_sites;
    p.n_electrons = n_electrons;
    p.hopping = get_num(keys, "hopping", p.hopping);
    p.yukawa_mass = get_num(keys, "yukawa_mass", p.yukawa_mass);
    p.kernel_scale = get_num(keys, "kernel_scale", p.kernel_scale);
    return make_ring(p);
  }
  if (kind == "double_well") {
    DoubleWellParams p;
    p.n_sites = n_sites;
    p.n_electrons = n_electrons;
    p.hopping = get_num(keys, "hopping", p.hopping);
    p.depth1 = get_num(keys, "depth1", p.depth1);
    p.depth2 = get_num(keys, "depth2", p.depth2);
    p.pos1 = get_num(keys, "pos1", p.pos1);
    p.pos2 = get_num(keys, "pos2", p.pos2);
    p.width = get_num(keys, "width", p.width);
    p.yukawa_mass = get_num(keys, "yukawa_mass", p.yukawa_mass);
    p.kernel_scale = get_num(keys, "kernel_scale", p.kernel_scale);
    return make_double_well(p);
  }
  if (kind == "synthetic_degenerate") {
    SyntheticDegenerateParams p;
    p.n_sites = n_sites;
    p.n_electrons = n_electrons;
    p.n_partial = get_int(keys, "n_partial", p.n_partial);
    p.gap_below = get_num(keys, "gap_below", p.gap_below);
    p.gap_above = get_num(keys, "gap_above", p.gap_above);
    p.level_spacing = get_num(keys, "level_spacing", p.level_spacing);
    p.kernel_scale = get_num(keys, "kernel_scale", p.kernel_scale);
    p.seed = static_cast<unsigned>(get_int(keys, "system_seed", 0));
    return make_synthetic_degenerate(p);
  }
  if (kind == "explicit") {
    namespace fs = std::filesystem;
    auto resolve = [&](const std::string& rel) {
      const fs::path p(rel);
      return p.is_absolute() ? p.string() : (fs::path(base_dir) / p).string();
    };
    const Matrix kinetic = load_matrix(resolve(require(keys, "kinetic_path")));
    const Vector v_ext = load_vector(resolve(require(keys, "v_ext_path")));
    const Matrix kernel = load_matrix(resolve(require(keys, "kernel_path")));
    return LatticeSystem(kinetic, v_ext, kernel, n_electrons);
  }
  throw InputError("unknown system kind: " + kind);
}

LatticeSystem load_system(const std::string& path) {
  auto f = open_in(path);
  const auto kv = read_key_values(f);
  return system_from_keys(
      kv, std::filesystem::path(path).parent_path().string());
}

void save_ground_state(const std::string& path, const GroundState& gs) {
  auto f = open_out(path);
  f << std::setprecision(17);
  f << "[manifest]\n";
  f << "format_version = 1\n";
  f << "n_sites = " << gs.n_sites() << "\n";
  f << "n_electrons = " << gs.n_electrons << "\n";
  f << "n_full = " << gs.n_full << "\n";
  f << "n_partial = " << gs.n_partial << "\n";
  f << "fermi_level = " << gs.fermi_level << "\n";
  f << "gap_below = " << gs.gap_below << "\n";
  f << "gap_above = " << gs.gap_above << "\n";
  f << "energy = " << gs.energy << "\n";
  f << "[gamma0]\n";
  write_matrix_csv(f, gs.gamma0);
  f << "[h0]\n";
  write_matrix_csv(f, gs.h0);
  f << "[eigvals]\n";
  write_vector_csv(f, gs.eigvals);
  f << "[eigvecs]\n";
  write_matrix_csv(f, gs.eigvecs);
  f << "[lambda]\n";
  write_matrix_csv(f, gs.lambda);
  f << "[w]\n";
  write_vector_csv(f, gs.w);
}

GroundState load_ground_state(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  GroundState gs;
  std::map<std::string, std::string> manifest;
  while (std::getline(f, line)) {
    line = line.substr(0, line.find('#'));
    const auto opening = line.find('[');
    if (opening == std::string::npos) continue;
    const auto closing = line.find(']');
    const std::string section = line.substr(opening + 1, closing - opening - 1);
    if (section == "manifest") {
      // consume key = value lines until the next section header
      std::streampos pos = f.tellg();
      std::string kvline;
      std::stringstream block;
      while (std::getline(f, kvline)) {
        if (!kvline.empty() && kvline[0] == '[') {
          f.seekg(pos);
          break;
        }
        block << kvline << "\n";
        pos = f.tellg();
      }
      manifest = read_key_values(block);
    } else if (section == "gamma0") {
      gs.gamma0 = read_matrix_csv(f);
    } else if (section == "h0") {
      gs.h0 = read_matrix_csv(f);
    } else if (section == "eigvals") {
      gs.eigvals = read_vector_csv(f);
    } else if (section == "eigvecs") {
      gs.eigvecs = read_matrix_csv(f);
    } else if (section == "lambda") {
      gs.lambda = read_matrix_csv(f);
    } else if (section == "w") {
      gs.w = read_vector_csv(f);
    } else {
      throw InputError("unknown archive section: " + section);
    }
  }
  if (manifest.empty()) throw InputError("archive has no manifest");
  gs.n_electrons = get_int(manifest, "n_electrons", 0);
  gs.n_full = get_int(manifest, "n_full", 0);
  gs.n_partial = get_int(manifest, "n_partial", 0);
  gs.fermi_level = get_num(manifest, "fermi_level", 0.0);
  gs.gap_below = get_num(manifest, "gap_below", 0.0);
  gs.gap_above = get_num(manifest, "gap_above", 0.0);
  gs.energy = get_num(manifest, "energy", 0.0);
  if (gs.gamma0.rows() != gs.eigvals.size() ||
      gs.eigvecs.rows() != gs.eigvals.size())
    throw InputError("archive blocks have inconsistent dimensions");
  return gs;
}

}  // namespace rhfpt::io
