#include "timebin/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "timebin/error.hpp"

namespace timebin::csv {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += header[i];
  }
  out << line << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw InvalidArgument("row width does not match the header");
    line.clear();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += format_double(row[i]);
    }
    out << line << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::vector<double>> read_table(const std::filesystem::path& path,
                                            const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string expected;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) expected += ',';
    expected += header[i];
  }

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, expected header '" + expected + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) {
    throw DataError(path.string() + ": header '" + line + "' does not match '" + expected + "'");
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      std::ostringstream os;
      os << path.string() << ": row " << lineno << ": " << why;
      throw DataError(os.str());
    };
    std::vector<double> row;
    row.reserve(header.size());
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t col = 0; col < header.size(); ++col) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) fail("column '" + header[col] + "' is not a number");
      row.push_back(v);
      p = res.ptr;
      if (col + 1 < header.size()) {
        if (p == end || *p != ',') fail("expected " + std::to_string(header.size()) + " columns");
        ++p;
      }
    }
    if (p != end) fail("trailing characters after " + std::to_string(header.size()) + " columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_samples(const std::filesystem::path& path, const std::vector<eightport::QuadratureSample>& s) {
  std::vector<std::vector<double>> rows;
  rows.reserve(s.size());
  for (const auto& q : s) rows.push_back({q.x1, q.p1, q.x2, q.p2});
  write_table(path, {"x1", "p1", "x2", "p2"}, rows);
}

std::vector<eightport::QuadratureSample> read_samples(const std::filesystem::path& path) {
  std::vector<eightport::QuadratureSample> out;
  for (const auto& r : read_table(path, {"x1", "p1", "x2", "p2"})) out.push_back({r[0], r[1], r[2], r[3]});
  return out;
}

void write_tomography(const std::filesystem::path& path, const std::vector<eightport::TomographyDatum>& d) {
  std::vector<std::vector<double>> rows;
  rows.reserve(d.size());
  for (const auto& t : d) rows.push_back({t.theta1, t.x1, t.theta2, t.x2});
  write_table(path, {"theta1", "x1", "theta2", "x2"}, rows);
}

std::vector<eightport::TomographyDatum> read_tomography(const std::filesystem::path& path) {
  std::vector<eightport::TomographyDatum> out;
  for (const auto& r : read_table(path, {"theta1", "x1", "theta2", "x2"})) out.push_back({r[0], r[1], r[2], r[3]});
  return out;
}

void write_trace(const std::filesystem::path& path, const eightport::TimeTrace& trace) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.values.size());
  for (std::size_t k = 0; k < trace.values.size(); ++k) rows.push_back({trace.grid.at(k), trace.values[k]});
  write_table(path, {"t_s", "variance"}, rows);
}

}  // namespace timebin::csv
