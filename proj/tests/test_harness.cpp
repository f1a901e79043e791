#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "catcollapse/harness.hpp"

using namespace catcollapse::harness;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(RunEnsemble, ResultsAreOrderedByIndex) {
  for (unsigned workers : {1u, 3u, 8u}) {
    const auto r = run_ensemble<std::size_t>(1000, [](std::size_t i) { return i * i; }, workers);
    ASSERT_EQ(r.size(), 1000u);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i], i * i);
  }
}

TEST(RunEnsemble, SingleFailureIsRethrown) {
  auto fn = [](std::size_t i) -> int {
    if (i == 17) throw std::runtime_error("bad 17");
    return 0;
  };
  for (unsigned workers : {1u, 4u}) {
    try {
      run_ensemble<int>(100, fn, workers);
      FAIL() << "expected a throw";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "bad 17");
    }
  }
}

TEST(RunEnsemble, EmptyEnsemble) { EXPECT_TRUE(run_ensemble<int>(0, [](std::size_t) { return 1; }).empty()); }

TEST(WorkerCount, EnvironmentCap) {
  ::setenv("CATCOLLAPSE_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1u);
  ::setenv("CATCOLLAPSE_THREADS", "junk", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("CATCOLLAPSE_THREADS");
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(fmt(v)), v);
  EXPECT_EQ(fmt(0.1), "0.1");
  EXPECT_EQ(fmt(INFINITY), "inf");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(CsvWriter, ProvenanceLineThenHeader) {
  const auto path = std::filesystem::temp_directory_path() / "catcollapse_csv_test.csv";
  {
    CsvWriter w(path, {"deadbeef", 42}, "a,b,c");
    w.row(1, 0.5, std::string("x,y"));
  }
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "# config_sha256=deadbeef seed=42\na,b,c\n1,0.5,\"x,y\"\n");
  std::filesystem::remove(path);
}

TEST(ChiSquare, TwoDegreesOfFreedomClosedForm) {
  // With two degrees of freedom the survival function is exp(-x / 2).
  const auto r = chi_square({70, 20, 10}, {0.7, 0.25, 0.05});
  const double expected = 1.0 + 5.0;  // (20-25)^2/25 + (10-5)^2/5
  EXPECT_NEAR(r.statistic, expected, 1e-12);
  EXPECT_EQ(r.dof, 2);
  EXPECT_NEAR(r.p_value, std::exp(-expected / 2.0), 1e-12);
}

TEST(ChiSquare, ZeroProbabilityCategories) {
  const auto ok = chi_square({50, 50, 0}, {0.5, 0.5, 0.0});
  EXPECT_EQ(ok.dof, 1);
  EXPECT_DOUBLE_EQ(ok.p_value, 1.0);
  EXPECT_EQ(chi_square({50, 49, 1}, {0.5, 0.5, 0.0}).p_value, 0.0);
  EXPECT_THROW(chi_square({1, 2}, {1.0}), catcollapse::InvalidArgument);
}

TEST(BinomialSigma, Values) {
  EXPECT_DOUBLE_EQ(binomial_sigma(0.5, 100), 0.05);
  EXPECT_DOUBLE_EQ(binomial_sigma(0.3, 0), 0.0);
}
