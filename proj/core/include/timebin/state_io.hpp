#pragma once

// JSON form of density matrices:
//   {"dim_per_mode": d, "mode_count": m, "entries": [[re, im], ...]}
// with entries listed row-major over the full d^m x d^m matrix. Doubles are
// written in shortest round-trip form, so write -> read is bit-exact.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "timebin/fock.hpp"

namespace timebin::io {

nlohmann::json matrix_to_json(const fock::Matrix& m, int dim_per_mode, int mode_count);

template <int Modes>
nlohmann::json state_to_json(const fock::DensityMatrix<Modes>& rho) {
  return matrix_to_json(rho.matrix(), rho.dim_per_mode(), Modes);
}

struct RawState {
  fock::Matrix entries;
  int dim_per_mode = 0;
  int mode_count = 0;
};

/// Parses the schema without checking density-matrix invariants.
RawState raw_state_from_json(const nlohmann::json& j);

/// Parses and validates; throws DataError on schema or invariant failures.
template <int Modes>
fock::DensityMatrix<Modes> state_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace timebin::io
