#pragma once

// Plain CSV records. Doubles are written in shortest round-trip form so that
// reruns are byte-identical and reads recover the exact values.

#include <filesystem>
#include <string>
#include <vector>

#include "timebin/eightport.hpp"

namespace timebin::csv {

/// Shortest decimal string that parses back to `v`.
std::string format_double(double v);

/// Writes a header line and numeric rows. Creates parent directories.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

/// Reads a numeric table and checks the header. Errors name the offending line.
std::vector<std::vector<double>> read_table(const std::filesystem::path& path,
                                            const std::vector<std::string>& header);

void write_samples(const std::filesystem::path& path, const std::vector<eightport::QuadratureSample>& s);
std::vector<eightport::QuadratureSample> read_samples(const std::filesystem::path& path);

void write_tomography(const std::filesystem::path& path, const std::vector<eightport::TomographyDatum>& d);
std::vector<eightport::TomographyDatum> read_tomography(const std::filesystem::path& path);

void write_trace(const std::filesystem::path& path, const eightport::TimeTrace& trace);

}  // namespace timebin::csv
