#include "timebin/state_io.hpp"

#include <fstream>

#include "timebin/error.hpp"

namespace timebin::io {

using nlohmann::json;

json matrix_to_json(const fock::Matrix& m, int dim_per_mode, int mode_count) {
  json entries = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      entries.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    }
  }
  return json{{"dim_per_mode", dim_per_mode}, {"mode_count", mode_count}, {"entries", std::move(entries)}};
}

RawState raw_state_from_json(const json& j) {
  if (!j.is_object()) throw DataError("state JSON must be an object");
  for (const char* key : {"dim_per_mode", "mode_count", "entries"}) {
    if (!j.contains(key)) throw DataError(std::string("state JSON is missing key '") + key + "'");
  }
  RawState s;
  try {
    s.dim_per_mode = j.at("dim_per_mode").get<int>();
    s.mode_count = j.at("mode_count").get<int>();
  } catch (const json::exception& e) {
    throw DataError(std::string("state JSON header: ") + e.what());
  }
  if (s.dim_per_mode < 1) throw DataError("state JSON: dim_per_mode must be positive");
  if (s.mode_count != 1 && s.mode_count != 2) throw DataError("state JSON: mode_count must be 1 or 2");
  const int n = s.mode_count == 1 ? s.dim_per_mode : s.dim_per_mode * s.dim_per_mode;
  const json& e = j.at("entries");
  if (!e.is_array() || e.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw DataError("state JSON: expected " + std::to_string(n * n) + " entries");
  }
  s.entries.resize(n, n);
  std::size_t k = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c, ++k) {
      const json& v = e[k];
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw DataError("state JSON: entry " + std::to_string(k) + " is not a [re, im] pair");
      }
      s.entries(r, c) = fock::Complex(v[0].get<double>(), v[1].get<double>());
    }
  }
  return s;
}

template <int Modes>
fock::DensityMatrix<Modes> state_from_json(const json& j) {
  RawState s = raw_state_from_json(j);
  if (s.mode_count != Modes) {
    throw DataError("state JSON has mode_count " + std::to_string(s.mode_count) + ", expected " +
                    std::to_string(Modes));
  }
  try {
    return fock::DensityMatrix<Modes>::from_matrix(std::move(s.entries), s.dim_per_mode);
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
}

template fock::DensityMatrix<1> state_from_json<1>(const json&);
template fock::DensityMatrix<2> state_from_json<2>(const json&);

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace timebin::io
