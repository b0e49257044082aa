#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "tempdir.hpp"
#include "timebin/csv.hpp"
#include "timebin/error.hpp"
#include "timebin/generation.hpp"
#include "timebin/rng.hpp"
#include "timebin/state_io.hpp"

using namespace timebin;

TEST(Rng, PinnedConstants) {
  EXPECT_EQ(rng::splitmix64(0), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(rng::fnv1a64(""), 0xCBF29CE484222325ull);
  EXPECT_EQ(rng::fnv1a64("a"), 0xAF63DC4C8601EC8Cull);
  EXPECT_EQ(rng::derive_seed(12345, "sample"), rng::splitmix64(12345 ^ rng::fnv1a64("sample")));
  EXPECT_NE(rng::derive_seed(12345, "sample"), rng::derive_seed(12345, "tomography"));
}

TEST(Rng, ChunksCoverRangeOnceForAnyWorkerCount) {
  for (unsigned workers : {1u, 2u, 5u}) {
    const std::size_t n = 3 * rng::kChunkSize + 17;
    std::vector<int> hits(n, 0);
    rng::for_each_chunk(n, workers, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    for (int h : hits) ASSERT_EQ(h, 1);
  }
}

TEST(Rng, WorkerExceptionsPropagate) {
  EXPECT_THROW(rng::for_each_chunk(3 * rng::kChunkSize, 2,
                                   [](std::size_t c, std::size_t, std::size_t) {
                                     if (c == 1) throw DataError("boom");
                                   }),
               DataError);
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(csv::format_double(0.1), "0.1");
  EXPECT_EQ(csv::format_double(-2.0), "-2");
  EXPECT_EQ(csv::format_double(1e-300), "1e-300");
  std::mt19937_64 eng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    const double v = g(eng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(std::stod(csv::format_double(v)), v);
  }
}

TEST(Csv, SamplesRoundTripBitExact) {
  testkit::TempDir dir;
  std::mt19937_64 eng(2);
  std::normal_distribution<double> g;
  std::vector<eightport::QuadratureSample> s(500);
  for (auto& q : s) q = {g(eng), g(eng), g(eng), g(eng)};
  csv::write_samples(dir / "nested/s.csv", s);
  EXPECT_EQ(csv::read_samples(dir / "nested/s.csv"), s);

  std::vector<eightport::TomographyDatum> t(300);
  for (auto& d : t) d = {std::abs(g(eng)), g(eng), std::abs(g(eng)), g(eng)};
  csv::write_tomography(dir / "t.csv", t);
  EXPECT_EQ(csv::read_tomography(dir / "t.csv"), t);
}

TEST(Csv, ErrorsNameTheRow) {
  testkit::TempDir dir;
  {
    std::ofstream out(dir / "bad.csv");
    out << "x1,p1,x2,p2\n1,2,3,4\n1,2,3\n";
  }
  try {
    csv::read_samples(dir / "bad.csv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
  {
    std::ofstream out(dir / "nan.csv");
    out << "x1,p1,x2,p2\n1,2,abc,4\n";
  }
  EXPECT_THROW(csv::read_samples(dir / "nan.csv"), DataError);
  {
    std::ofstream out(dir / "header.csv");
    out << "theta1,x1,theta2,x2\n0,0,0,0\n";
  }
  EXPECT_THROW(csv::read_samples(dir / "header.csv"), DataError);
  EXPECT_THROW(csv::read_samples(dir / "missing.csv"), DataError);
}

TEST(Csv, EmptyTableReadsAsEmpty) {
  testkit::TempDir dir;
  csv::write_samples(dir / "e.csv", {});
  EXPECT_TRUE(csv::read_samples(dir / "e.csv").empty());
}

TEST(StateIo, RoundTripBitExact) {
  const auto rho = generation::build_physical_state({0.6, 0.8, 0.77}, generation::ImperfectionBudget::measured(), 3);
  testkit::TempDir dir;
  io::write_json_file(dir / "s.json", io::state_to_json(rho));
  const auto back = io::state_from_json<2>(io::read_json_file(dir / "s.json"));
  EXPECT_EQ(back.matrix(), rho.matrix());
  EXPECT_EQ(back.dim_per_mode(), 3);
}

TEST(StateIo, RejectsBadDocuments) {
  using nlohmann::json;
  EXPECT_THROW(io::state_from_json<1>(json{{"dim_per_mode", 2}, {"mode_count", 1}}), DataError);
  EXPECT_THROW(io::state_from_json<1>(json{{"dim_per_mode", 2}, {"mode_count", 1}, {"entries", json::array()}}),
               DataError);
  const json not_psd{{"dim_per_mode", 2},
                     {"mode_count", 1},
                     {"entries", {{1.5, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {-0.5, 0.0}}}};
  EXPECT_THROW(io::state_from_json<1>(not_psd), DataError);
  const json two_mode = io::state_to_json(fock::TwoModeDensityMatrix::vacuum(2));
  EXPECT_THROW(io::state_from_json<1>(two_mode), DataError);
}
