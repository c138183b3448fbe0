/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "commands.hpp"

using namespace fpsketch;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("fpsketch_test_" + std::to_string(::getpid()) + "_" + name);
}

int run_generate(cli::generate_options o) {
  std::ostringstream out;
  std::ostringstream err;
  return cli::cmd_generate(o, out, err);
}

const fs::path data_dir = FPSKETCH_TEST_DATA;

cli::estimate_options fixture_options() {
  cli::estimate_options o;
  o.stream = (data_dir / "fixture_stream.txt").string();
  o.sketch.p = 3;
  o.sketch.epsilon = 0.25;
  o.sketch.seed = 20240601;
  o.sketch.scales = {0.001, 6.0 / 4608, 3.0 / 144, 0.1};
  o.with_oracle = true;
  return o;
}

} // namespace

TEST(Generate, SameSeedGivesIdenticalFiles) {
  cli::generate_options o{"zipf", 1.1, 1000, 5000, 3, 42, temp_path("a.txt").string()};
  ASSERT_EQ(run_generate(o), 0);
  o.out = temp_path("b.txt").string();
  ASSERT_EQ(run_generate(o), 0);
  EXPECT_EQ(slurp(temp_path("a.txt")), slurp(temp_path("b.txt")));
  o.seed = 43;
  o.out = temp_path("c.txt").string();
  ASSERT_EQ(run_generate(o), 0);
  EXPECT_NE(slurp(temp_path("a.txt")), slurp(temp_path("c.txt")));
}

TEST(Generate, EmptyStreamIsHeaderOnly) {
  const auto path = temp_path("empty.txt");
  ASSERT_EQ(run_generate({"uniform", 1.1, 50, 0, 1, 1, path.string()}), 0);
  const std::string text = slurp(path);
  EXPECT_EQ(text, "# fpsketch stream v1 n=50 M=1 m=0\n# items are 0-based\n");
}

TEST(Generate, ZipfTopItemMatchesAnalyticMass) {
  const auto stream = generate_stream({stream_dist::zipf, 1.1, 10000, 1000000, 1, 5});
  const frequency_vector fv(10000, stream);
  long double h = 0;
  for (int r = 1; r <= 10000; ++r) h += std::pow(static_cast<long double>(r), -1.1L);
  const double expected = static_cast<double>(1000000 / h);
  EXPECT_LT(std::fabs(fv[0] - expected), 0.1 * expected);
}

TEST(Generate, SingleHeavyPutsHalfTheUpdatesOnOneItem) {
  const auto stream = generate_stream({stream_dist::single_heavy, 1.1, 100, 1000, 1, 5});
  const frequency_vector fv(100, stream);
  EXPECT_EQ(fv[0], 500);
}

TEST(Generate, RejectsBadParameters) {
  EXPECT_EQ(run_generate({"pareto", 1.1, 10, 10, 1, 1, temp_path("x").string()}), 1);
  EXPECT_EQ(run_generate({"zipf", 1.1, 0, 10, 1, 1, temp_path("x").string()}), 1);
  EXPECT_EQ(run_generate({"zipf", 1.1, 10, 10, 1, 1, "/nonexistent-dir/x.txt"}), 2);
}

TEST(StreamFile, RoundTripMatchesGeneratorTally) {
  const auto path = temp_path("rt.txt");
  ASSERT_EQ(run_generate({"zipf", 0.9, 300, 20000, 7, 9, path.string()}), 0);
  const auto sf = read_stream_file(path.string());
  EXPECT_EQ(sf.n, 300u);
  EXPECT_EQ(sf.max_update, 7u);
  const auto regenerated = generate_stream({stream_dist::zipf, 0.9, 300, 20000, 7, 9});
  EXPECT_EQ(sf.updates, regenerated);
  EXPECT_EQ(frequency_vector(300, sf.updates).nonzero(), frequency_vector(300, regenerated).nonzero());
}

TEST(StreamFile, MalformedLinesReportLineNumbers) {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    std::istringstream in(text);
    try {
      read_stream(in);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const io_error& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("# fpsketch stream v1 n=10 M=5 m=2\n1 2\n3 x\n", "line 3");
  expect_error("# fpsketch stream v1 n=10 M=5 m=2\n1 2\n10 1\n", "line 3");
  expect_error("# fpsketch stream v1 n=10 M=5 m=2\n# note\n1 6\n", "line 3");
  expect_error("# fpsketch stream v1 n=10 M=5 m=2\n1 2 3\n", "line 2");
  expect_error("# fpsketch stream v1 n=10 M=5 m=2\n-1 2\n", "line 2");
  expect_error("1 2\n", "n unknown");
}

TEST(StreamFile, CommentsBlankLinesAndOverrides) {
  std::istringstream in("# fpsketch stream v1 n=10 M=5 m=2\n\n# comment\n1 -5\r\n 9\t3 \n");
  const auto sf = read_stream(in);
  const std::vector<stream_update> expected{{1, -5}, {9, 3}};
  EXPECT_EQ(sf.updates, expected);
  std::istringstream bare("4 1\n");
  EXPECT_EQ(read_stream(bare, 5).n, 5u);
}

TEST(Estimate, ExactModeReportsExactMoment) {
  const auto path = temp_path("exact.txt");
  write_stream_file(path.string(), {10, 5, {{1, 2}, {2, -3}, {1, 1}}});
  cli::estimate_options o;
  o.stream = path.string();
  o.exact = true;
  o.sketch.p = 3;
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(cli::cmd_estimate(o, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("theta: 54\n"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("mode: exact\n"), std::string::npos);
}

TEST(Estimate, EmptyStreamGivesZero) {
  const auto path = temp_path("empty_est.txt");
  write_stream_file(path.string(), {4096, 1, {}});
  cli::estimate_options o;
  o.stream = path.string();
  o.sketch.scales = {0.001, 2.0 / 4608, 1.0 / 144, 0.05};
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(cli::cmd_estimate(o, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("theta: 0\n"), std::string::npos) << out.str();
}

TEST(Estimate, ErrorsMapToExitCodes) {
  std::ostringstream out;
  std::ostringstream err;
  cli::estimate_options missing;
  missing.stream = temp_path("does_not_exist.txt").string();
  EXPECT_EQ(cli::cmd_estimate(missing, out, err), 2);

  const auto path = temp_path("cfg.txt");
  write_stream_file(path.string(), {64, 1, {{1, 1}}});
  cli::estimate_options bad;
  bad.stream = path.string();
  bad.sketch.p = 7;  // p >= log2(64)
  EXPECT_EQ(cli::cmd_estimate(bad, out, err), 1);
  EXPECT_NE(err.str().find("log2(n)"), std::string::npos);
  bad.sketch.p = 3;
  bad.sketch.copies = 4;
  EXPECT_EQ(cli::cmd_estimate(bad, out, err), 1);
}

TEST(Estimate, WritesJsonDump) {
  auto o = fixture_options();
  o.out = temp_path("dump.json").string();
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(cli::cmd_estimate(o, out, err), 0) << err.str();
  const auto j = nlohmann::json::parse(slurp(o.out));
  for (const char* key : {"f2_hat", "t_hat", "delta", "cutoff", "h_g", "h", "theta", "nc_failed"}) {
    EXPECT_TRUE(j["trace"].contains(key)) << key;
  }
  EXPECT_EQ(j["config"]["s"], 6);
  EXPECT_TRUE(j.contains("exact_fp"));
}

TEST(Estimate, FixtureMatchesGoldenReport) {
  std::ostringstream out;
  std::ostringstream err;
  auto o = fixture_options();
  ASSERT_EQ(cli::cmd_estimate(o, out, err), 0) << err.str();
  const std::string golden = slurp(data_dir / "fixture_report.txt");
  // the stream path differs between checkouts
  std::string got = out.str();
  got.replace(got.find(o.stream), o.stream.size(), "fixture_stream.txt");
  EXPECT_EQ(got, golden);
}

TEST(Estimate, MedianOfCopies) {
  auto o = fixture_options();
  o.sketch.copies = 3;
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(cli::cmd_estimate(o, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("copies: 3\n"), std::string::npos);
}

TEST(Benchmark, OneTrialReport) {
  cli::benchmark_options o;
  o.n = 1024;
  o.m = 20000;
  o.alpha = 1.2;
  o.sketch.p = 3;
  o.sketch.epsilon = 0.3;
  o.sketch.scales = {0.002, 6.0 / 4608, 3.0 / 144, 0.1};
  o.trials = 1;
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(cli::cmd_benchmark(o, out, err), 0) << err.str();
  const std::string text = out.str();
  for (const char* key : {"success_rate: ", "mean_relative_error: ", "theta_mean: ", "theta_variance: ",
                          "nc_failure_rate: ", "wall_time_s: ", "trials: 1\n"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  const auto pos = text.find("success_rate: ");
  const double rate = std::stod(text.substr(pos + 14));
  EXPECT_GE(rate, 0.0);
  EXPECT_LE(rate, 1.0);
}

TEST(Benchmark, RequiresDomainWithoutStream) {
  cli::benchmark_options o;
  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(cli::cmd_benchmark(o, out, err), 1);
  o.n = 1024;
  o.trials = 0;
  EXPECT_EQ(cli::cmd_benchmark(o, out, err), 1);
}
