#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "rhfpt/ground_state.hpp"
#include "rhfpt/model.hpp"

namespace rhfpt::io {

// Dense numeric blocks: a one-line header with the dimension, then
// comma-separated rows (one row for vectors). Full double precision.
void write_matrix_csv(std::ostream& os, const Matrix& m);
Matrix read_matrix_csv(std::istream& is);
void write_vector_csv(std::ostream& os, const Vector& v);
Vector read_vector_csv(std::istream& is);

void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);
void save_vector(const std::string& path, const Vector& v);
Vector load_vector(const std::string& path);

/// `key = value` lines; blank lines and #-comments ignored. Duplicate keys
/// are an error.
std::map<std::string, std::string> read_key_values(std::istream& is);

/// Build a lattice system from key-value data (keys: kind, n_sites,
/// n_electrons, then kind-specific parameters, or explicit matrix paths
/// resolved against base_dir). Unknown keys are errors.
LatticeSystem system_from_keys(
    const std::map<std::string, std::string>& keys,
    const std::string& base_dir);

LatticeSystem load_system(const std::string& path);

/// The set of keys system_from_keys understands; used by config parsing to
/// split one file into system and experiment sections.
bool is_system_key(const std::string& key);

/// Single-file archive: a [manifest] section with the scalar data and CSV
/// blocks for the matrices, so converged states can be reused across runs.
void save_ground_state(const std::string& path, const GroundState& gs);
GroundState load_ground_state(const std::string& path);

}  // namespace rhfpt::io
