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

#ifndef FPSKETCH_ORACLE_HPP_
#define FPSKETCH_ORACLE_HPP_

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fp_sketch.hpp"
#include "random.hpp"
#include "stream.hpp"

namespace fpsketch {

/// Exact per-item frequencies in dense storage, with ingest statistics.
class frequency_vector {
 public:
  explicit frequency_vector(uint64_t n) : f_(n, 0) {}

  frequency_vector(uint64_t n, std::span<const stream_update> updates) : frequency_vector(n) {
    for (const auto& u : updates) add(u.item, u.delta);
  }

  void add(uint64_t i, int64_t v) {
    if (i >= f_.size()) throw usage_error("item " + std::to_string(i) + " outside [0, n)");
    if (__builtin_add_overflow(f_[i], v, &f_[i])) throw counter_overflow("exact frequency overflow");
    ++updates_;
    const uint64_t mag = v < 0 ? uint64_t(0) - static_cast<uint64_t>(v) : static_cast<uint64_t>(v);
    if (mag > max_update_) max_update_ = mag;
  }

  uint64_t n() const { return f_.size(); }
  int64_t operator[](uint64_t i) const { return f_[i]; }
  std::span<const int64_t> values() const { return f_; }
  /// m: number of updates seen.
  uint64_t updates() const { return updates_; }
  /// largest |v| seen.
  uint64_t max_update() const { return max_update_; }

  /// One (i, f_i) record per nonzero item, ascending.
  std::vector<stream_update> nonzero() const {
    std::vector<stream_update> out;
    for (uint64_t i = 0; i < f_.size(); ++i) {
      if (f_[i] != 0) out.push_back({i, f_[i]});
    }
    return out;
  }

 private:
  std::vector<int64_t> f_;
  uint64_t updates_ = 0;
  uint64_t max_update_ = 0;
};

/// sum |f_i|^p accumulated in long double.
inline long double exact_moment(const frequency_vector& fv, double p) {
  if (!(p > 0)) throw usage_error("exact_moment needs p > 0");
  long double sum = 0.0L;
  for (int64_t f : fv.values()) {
    if (f != 0) sum += std::pow(std::fabs(static_cast<long double>(f)), static_cast<long double>(p));
  }
  return sum;
}

/// {i : |f_i y_i| >= T}, ascending; y(i) gives the scaler of item i.
inline std::vector<uint64_t> exact_heavy(const frequency_vector& fv, const std::function<double(uint64_t)>& y,
                                         double threshold) {
  std::vector<uint64_t> out;
  for (uint64_t i = 0; i < fv.n(); ++i) {
    if (fv[i] != 0 && std::fabs(static_cast<double>(fv[i]) * y(i)) >= threshold) out.push_back(i);
  }
  return out;
}

/// What a trial predicate sees besides Theta and the trace.
struct trial_context {
  uint32_t index = 0;
  uint64_t seed = 0;
  double exact_fp = 0;
  double exact_f2 = 0;
};

using trial_predicate = std::function<bool(double theta, const query_trace& trace, const trial_context& ctx)>;

struct trial_summary {
  uint32_t trials = 0;
  uint32_t successes = 0;
  double mean = 0;      ///< mean Theta over all trials
  double variance = 0;  ///< unbiased sample variance of Theta
  uint32_t nc_failures = 0;
  std::vector<double> thetas;

  double success_rate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / trials; }
};

namespace detail {
inline constexpr uint64_t trial_stream_base = uint64_t{7} << 32;
} // namespace detail

/// Master seed of trial t derived from the configured seed.
inline uint64_t trial_seed(uint64_t master_seed, uint32_t trial) {
  return derive_seed(master_seed, detail::trial_stream_base + trial);
}

inline void summarize(trial_summary& s) {
  s.trials = static_cast<uint32_t>(s.thetas.size());
  if (s.thetas.empty()) return;
  long double sum = 0.0L;
  for (double t : s.thetas) sum += t;
  const long double mean = sum / s.thetas.size();
  long double sq = 0.0L;
  for (double t : s.thetas) sq += (t - mean) * (t - mean);
  s.mean = static_cast<double>(mean);
  s.variance = s.thetas.size() > 1 ? static_cast<double>(sq / (s.thetas.size() - 1)) : 0.0;
}

/**
 * Runs `trials` sketches over the stream with master seeds trial_seed(seed, t)
 * and evaluates the predicate on each outcome. The stream is aggregated to
 * per-item totals first, which leaves every sketch bit-identical. With
 * copies > 1 each trial is a median_estimate and the trace passed to the
 * predicate is empty except for nc_failed (set when every copy failed).
 */
inline trial_summary run_trials(std::span<const stream_update> stream, const fp_config& cfg, uint32_t trials,
                                const trial_predicate& predicate, uint32_t copies = 1) {
  if (trials == 0) throw usage_error("run_trials needs trials >= 1");
  const std::vector<stream_update> totals = aggregate(stream);
  const frequency_vector fv(cfg.n, totals);
  trial_context ctx;
  ctx.exact_fp = static_cast<double>(exact_moment(fv, cfg.p));
  ctx.exact_f2 = static_cast<double>(exact_moment(fv, 2.0));

  trial_summary out;
  for (uint32_t t = 0; t < trials; ++t) {
    fp_config trial_cfg = cfg;
    trial_cfg.master_seed = trial_seed(cfg.master_seed, t);
    ctx.index = t;
    ctx.seed = trial_cfg.master_seed;
    double theta;
    query_trace trace;
    if (copies == 1) {
      fp_sketch sk(trial_cfg);
      sk.ingest(totals);
      fp_result res = sk.query();
      theta = res.theta;
      trace = std::move(res.trace);
    } else {
      const median_result med = median_estimate(trial_cfg, totals, copies);
      theta = med.theta;
      trace.nc_failed = med.all_failed;
      trace.theta = theta;
    }
    if (trace.nc_failed) ++out.nc_failures;
    if (predicate(theta, trace, ctx)) ++out.successes;
    out.thetas.push_back(theta);
  }
  summarize(out);
  return out;
}

/// Predicate |Theta - F_p| <= tolerance F_p.
inline trial_predicate relative_error_within(double tolerance) {
  return [tolerance](double theta, const query_trace&, const trial_context& ctx) {
    return std::fabs(theta - ctx.exact_fp) <= tolerance * ctx.exact_fp;
  };
}

} // namespace fpsketch

#endif
