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
#include <vector>

#include <gtest/gtest.h>

#include <fpsketch/fp_sketch.hpp>
#include <fpsketch/generator.hpp>
#include <fpsketch/oracle.hpp>
#include <fpsketch/report.hpp>

#include "test_support.hpp"

using namespace fpsketch;
using fpsketch::testing::running_stats;

namespace {

constexpr uint64_t desk_n = 4096;

// Five dominant items over a light background.
std::vector<stream_update> dominant_stream() {
  std::vector<stream_update> out;
  const int64_t heavy[] = {3000, 2800, 2600, 2400, 2200};
  const uint64_t where[] = {17, 400, 1234, 2048, 4000};
  for (int a = 0; a < 5; ++a) out.push_back({where[a], heavy[a]});
  rng gen(99);
  for (uint64_t i = 0; i < desk_n; ++i) {
    if (i % 7 == 3) out.push_back({i, 1 + static_cast<int64_t>(gen.uniform_below(10))});
  }
  return out;
}

// p = 3 with k = 3 (exact Taylor), pool 3, small tables.
fp_config desk_config(uint64_t seed) {
  fp_config cfg = derive_params(desk_n, 3.0, 0.2, {0.005, 6.0 / 4608, 3.0 / 144, 0.1}, seed);
  cfg.C = 1 << 16;
  return cfg;
}

} // namespace

TEST(DeriveParams, Examples) {
  const auto a = derive_params(uint64_t{1} << 20, 3, 0.1);
  EXPECT_EQ(a.k, 144u);
  EXPECT_EQ(a.s, 4608u);
  EXPECT_EQ(a.r, 55296u);
  EXPECT_EQ(a.q, 24u);
  const auto b = derive_params(std::numeric_limits<uint64_t>::max(), 3, 0.1);
  EXPECT_EQ(b.k, 260u);
  EXPECT_EQ(b.s, 8320u);
  EXPECT_THROW(derive_params(4096, 2, 0.5), config_error);
}

TEST(DeriveParams, SizesFollowTheFormulas) {
  const uint64_t n = 4096;
  const double p = 3.0;
  const double eps = 0.2;
  const auto cfg = derive_params(n, p, eps);
  const y_distribution d(p, n);
  EXPECT_NEAR(cfg.ey2, d.second_moment(), 1e-12 * d.second_moment());
  EXPECT_NEAR(cfg.R, d.R(), 1e-9 * d.R());
  const long double b = 1000.0L * std::pow(4096.0L, 1.0L / 3) * d.second_moment() /
                        (0.04L * std::min(12.0L, std::pow(0.2L, 4.0L / 3 - 2)));
  EXPECT_EQ(cfg.B, static_cast<uint64_t>(std::ceil(b)));
  EXPECT_EQ(cfg.C, static_cast<uint64_t>(std::ceil(121.0L * 9 * cfg.B)));
  EXPECT_EQ(cfg.q, 16u);
  EXPECT_TRUE(cfg.averaging_bounds_apply());
}

TEST(DeriveParams, ScalesMultiplyBaseSizes) {
  const auto cfg = derive_params(4096, 3, 0.2, {0.001, 2.0 / 4608, 1.0 / 144, 1.0 / 24});
  EXPECT_EQ(cfg.s, 2u);
  EXPECT_EQ(cfg.k, 1u);
  EXPECT_EQ(cfg.r, 1u);
  EXPECT_FALSE(cfg.averaging_bounds_apply());
}

TEST(DeriveParams, RejectsOutOfRangeInputs) {
  EXPECT_THROW(derive_params(1, 3, 0.5), config_error);
  EXPECT_THROW(derive_params(4096, 12, 0.5), config_error);   // p >= log2 n
  EXPECT_THROW(derive_params(4096, 3, 0.01), config_error);   // eps < n^(-1/p) = 1/16
  EXPECT_THROW(derive_params(4096, 3, 1.5), config_error);
  EXPECT_THROW(derive_params(4096, 3, 0.5, {0, 1, 1, 1}), config_error);
  EXPECT_THROW(derive_params(4096, 3, 0.5, {1, 1e-4, 1, 1}), config_error);  // pool below k
  EXPECT_NO_THROW(derive_params(4096, 3, 1.0 / 16));
  try {
    derive_params(4096, 12, 0.5);
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("log2(n)"), std::string::npos);
  }
}

TEST(LevelIndex, Examples) {
  EXPECT_EQ(level_index(3.0, 6.0), 0);
  EXPECT_EQ(level_threshold(0), 1.0);
  EXPECT_EQ(level_index(3.0, 3.0), 2);
  EXPECT_EQ(level_threshold(2), 2.0);
  EXPECT_EQ(level_index(8.0, 5.0), 4);
  EXPECT_EQ(level_threshold(4), 4.0);
  EXPECT_EQ(level_index(1.0, 100.0), 0);
  EXPECT_DOUBLE_EQ(level_threshold(3), 2 * std::sqrt(2.0));
  EXPECT_THROW(level_index(0.0, 1.0), usage_error);
  EXPECT_THROW(level_index(1.0, -1.0), usage_error);
}

TEST(FpSketch, NegatedIngestRestoresCounters) {
  fp_sketch sk(desk_config(1));
  const fp_sketch empty(desk_config(1));
  sk.ingest(5, 17);
  sk.ingest(900, -3);
  EXPECT_FALSE(sk == empty);
  sk.ingest(5, -17);
  sk.ingest(900, 3);
  EXPECT_TRUE(sk == empty);
}

TEST(FpSketch, ScaledSingleItem) {
  fp_sketch sk(desk_config(2));
  for (int t = 0; t < 4; ++t) sk.ingest(77, 3);
  EXPECT_EQ(sk.hh().point_estimate_raw(77), 12 * static_cast<int64_t>(sk.scaler_fixed(77)));
  EXPECT_EQ(sk.estimate_f2(), 144.0);
}

TEST(FpSketch, ShardedIngestMergesBitExactly) {
  const auto stream = dominant_stream();
  fp_sketch whole(desk_config(3));
  fp_sketch left(desk_config(3));
  fp_sketch right(desk_config(3));
  for (size_t j = 0; j < stream.size(); ++j) {
    whole.ingest(stream[j].item, stream[j].delta);
    (j % 2 ? left : right).ingest(stream[j].item, stream[j].delta);
  }
  const fp_sketch merged = merge(left, right);
  EXPECT_TRUE(merged == whole);
  EXPECT_EQ(merged.query().theta, whole.query().theta);
  EXPECT_THROW(left += fp_sketch(desk_config(4)), usage_error);
}

TEST(FpSketch, SerializationRoundTrip) {
  fp_config cfg = derive_params(256, 3, 0.5, {0.01, 8.0 / 4608, 3.0 / 144, 0.1}, 5);
  cfg.f2_width = 64;
  cfg.f2_groups = 3;
  fp_sketch sk(cfg);
  sk.ingest(3, 40);
  sk.ingest(200, -7);
  const auto bytes = sk.serialize();
  const fp_sketch back = fp_sketch::deserialize(bytes);
  EXPECT_TRUE(back == sk);
  EXPECT_EQ(back.serialize(), bytes);
  EXPECT_EQ(back.query().theta, sk.query().theta);
  auto bad = bytes;
  bad[1] = '?';
  EXPECT_THROW(fp_sketch::deserialize(bad), io_error);
  bad = bytes;
  bad.resize(bytes.size() / 2);
  EXPECT_THROW(fp_sketch::deserialize(bad), io_error);
}

TEST(FpSketch, SecondMomentEdgeCases) {
  fp_sketch sk(desk_config(6));
  EXPECT_EQ(sk.estimate_f2(), 0.0);
  sk.ingest(12, -250);
  EXPECT_EQ(sk.estimate_f2(), 62500.0);
}

TEST(FpSketch, SecondMomentWithinTolerance) {
  const auto stream = aggregate(generate_stream({stream_dist::zipf, 1.1, 10000, 1000000, 1, 1}));
  const double f2 = static_cast<double>(exact_moment(frequency_vector(10000, stream), 2));
  for (uint64_t seed = 0; seed < 10; ++seed) {
    fp_sketch sk(derive_params(10000, 3, 0.5, {0.001, 2.0 / 4608, 1.0 / 144, 0.05}, seed));
    sk.ingest(stream);
    EXPECT_LE(std::fabs(sk.estimate_f2() - f2), f2 / 256) << seed;
  }
}

TEST(FpSketch, ThresholdEstimateBracketsTheTrueThreshold) {
  const auto stream = aggregate(dominant_stream());
  const double f2 = static_cast<double>(exact_moment(frequency_vector(desk_n, stream), 2));
  for (uint64_t seed = 0; seed < 10; ++seed) {
    fp_sketch sk(desk_config(seed));
    sk.ingest(stream);
    const double f2_hat = sk.estimate_f2();
    ASSERT_LE(std::fabs(f2_hat - f2), f2 / 256);
    const double t = std::sqrt(16 * sk.config().ey2 * f2 / sk.config().B);
    const double t_hat = sk.threshold_estimate(f2_hat);
    EXPECT_GE(t_hat, t);
    EXPECT_LE(t_hat, 257.0 / 255.0 * t);
  }
}

TEST(FpSketch, EmptyStreamGivesZero) {
  const fp_sketch sk(desk_config(7));
  const auto res = sk.query();
  EXPECT_EQ(res.theta, 0.0);
  EXPECT_TRUE(res.trace.items.empty());
  EXPECT_FALSE(res.trace.nc_failed);
}

TEST(FpSketch, SingleBucketForcesCollisionFailure) {
  fp_config cfg = desk_config(8);
  cfg.tpest_buckets = 1;
  fp_sketch sk(cfg);
  sk.ingest(10, 5000);
  sk.ingest(20, 4000);
  const auto res = sk.query();
  EXPECT_TRUE(res.trace.nc_failed);
  EXPECT_EQ(res.theta, 0.0);
  EXPECT_GE(res.trace.items.size(), 2u);
}

TEST(FpSketch, SingleHeavyItemIsExact) {
  fp_sketch sk(desk_config(9));
  sk.ingest(600, 1000);
  const auto res = sk.query();
  ASSERT_EQ(res.trace.h.size(), 1u);
  EXPECT_EQ(res.trace.items[0].rho, 1.0);
  EXPECT_NEAR(res.theta, 1e9, 1e9 * 1e-12);
}

TEST(FpSketch, TraceInvariantsAndReproducibility) {
  const auto stream = aggregate(dominant_stream());
  for (uint64_t seed = 0; seed < 20; ++seed) {
    fp_sketch sk(desk_config(seed));
    sk.ingest(stream);
    const auto res = sk.query();
    fp_sketch again(desk_config(seed));
    again.ingest(stream);
    EXPECT_EQ(to_json(again.query().trace).dump(), to_json(res.trace).dump());
    if (res.trace.nc_failed) EXPECT_EQ(res.theta, 0.0);
    long double sum = 0;
    for (const auto& it : res.trace.items) {
      if (it.included) {
        EXPECT_TRUE(it.in_h);
        EXPECT_GT(it.f_hat, res.trace.cutoff);
        sum += static_cast<long double>(it.theta_bar) / it.rho;
      }
      EXPECT_EQ(it.in_h, it.f_hat > 0 && it.y >= level_threshold(it.level) && it.rho > 0);
    }
    EXPECT_EQ(res.theta, static_cast<double>(sum));
  }
}

TEST(FpSketch, RetainedEstimatesAreAccurate) {
  const auto stream = aggregate(dominant_stream());
  const frequency_vector fv(desk_n, stream);
  uint64_t good = 0;
  uint64_t total = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    fp_sketch sk(desk_config(seed));
    sk.ingest(stream);
    for (const auto& it : sk.query().trace.items) {
      if (!it.in_h) continue;
      const double f = std::fabs(static_cast<double>(fv[it.item]));
      good += std::fabs(it.f_hat - f) <= f / 30.0;
      ++total;
    }
  }
  ASSERT_GT(total, 0u);
  EXPECT_GE(static_cast<double>(good) / total, 0.95);
}

TEST(FpSketch, ReadingsAreConditionallyUnbiased) {
  const auto stream = aggregate(dominant_stream());
  const std::vector<uint64_t> heavy{17, 400, 1234, 2048, 4000};
  const uint64_t target = 1234;
  const y_distribution ydist(3.0, desk_n);
  const auto scaler = make_family(11, 0, 2, desk_n, mersenne61);
  const double y = y_for_item(ydist, scaler, target);
  const count_sketch layout(sketch_role::tpest, 4, 64, desk_n, ydist.frac_bits(), 123, 0);
  const auto clear = layout.non_collision_tables(target, heavy);
  ASSERT_FALSE(clear.empty());
  const uint32_t table = clear.front();
  running_stats nu;
  for (uint64_t sign_seed = 0; sign_seed < 4000; ++sign_seed) {
    count_sketch sk(sketch_role::tpest, 4, 64, desk_n, ydist.frac_bits(), 123, sign_seed);
    for (const auto& u : stream) {
      sk.update(u.item, u.delta * static_cast<int64_t>(y_fixed_for_item(ydist, scaler, u.item)));
    }
    nu.add(nu_reading(sk, target, table, 1, y));
  }
  EXPECT_NEAR(nu.mean(), 2600.0, 4 * nu.std_error());
}

TEST(FpSketch, DeskScaleMeanMatchesExactMoment) {
  const auto stream = aggregate(dominant_stream());
  const double fp = static_cast<double>(exact_moment(frequency_vector(desk_n, stream), 3.0));
  const auto summary = run_trials(stream, desk_config(2025), 200,
                                  [](double, const query_trace&, const trial_context&) { return true; });
  EXPECT_EQ(summary.nc_failures, 0u);
  EXPECT_LT(std::fabs(summary.mean - fp), 0.05 * fp);
}

TEST(MedianEstimate, SingleCopyMatchesQuery) {
  const auto stream = aggregate(dominant_stream());
  fp_sketch sk(desk_config(31));
  sk.ingest(stream);
  const auto med = median_estimate(desk_config(31), stream, 1);
  EXPECT_EQ(med.theta, sk.query().theta);
  EXPECT_FALSE(med.all_failed);
  EXPECT_THROW(median_estimate(desk_config(31), stream, 2), usage_error);
  EXPECT_THROW(median_estimate(desk_config(31), stream, 0), usage_error);
}

TEST(MedianEstimate, IdenticalCopiesGiveThatValue) {
  const std::vector<stream_update> single{{42, 500}};
  const auto med = median_estimate(desk_config(32), single, 5);
  for (double c : med.copies) EXPECT_NEAR(c, 1.25e8, 1e-4);
  EXPECT_NEAR(med.theta, 1.25e8, 1e-4);
}

TEST(MedianEstimate, AllCopiesFailing) {
  fp_config cfg = desk_config(33);
  cfg.tpest_buckets = 1;
  std::vector<stream_update> many;
  for (uint64_t i = 0; i < 10; ++i) many.push_back({100 * i, 5000});
  const auto med = median_estimate(cfg, many, 3);
  EXPECT_TRUE(med.all_failed);
  EXPECT_EQ(med.nc_failures, 3u);
  EXPECT_EQ(med.theta, 0.0);
}
