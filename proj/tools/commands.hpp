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

#ifndef FPSKETCH_TOOLS_COMMANDS_HPP_
#define FPSKETCH_TOOLS_COMMANDS_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <fpsketch/errors.hpp>
#include <fpsketch/fp_sketch.hpp>
#include <fpsketch/generator.hpp>
#include <fpsketch/oracle.hpp>
#include <fpsketch/report.hpp>
#include <fpsketch/stream_io.hpp>

namespace fpsketch::cli {

enum exit_code : int { ok = 0, usage = 1, io = 2, internal = 3 };

struct generate_options {
  std::string dist = "zipf";
  double alpha = 1.1;
  uint64_t n = 0;
  uint64_t m = 0;
  uint64_t max_update = 1;
  uint64_t seed = 0;
  std::string out;
};

struct sketch_options {
  double p = 3.0;
  double epsilon = 0.2;
  uint64_t seed = 0;
  uint32_t copies = 1;
  fp_scales scales;
};

struct estimate_options {
  std::string stream;
  std::optional<uint64_t> n;
  sketch_options sketch;
  bool with_oracle = false;
  bool exact = false;
  std::string out;
};

struct benchmark_options {
  std::string stream;
  std::optional<uint64_t> n;
  std::string dist = "zipf";
  double alpha = 1.1;
  uint64_t m = 0;
  uint64_t max_update = 1;
  sketch_options sketch;
  uint32_t trials = 1;
  std::string out;
};

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
  if (!f) throw io_error("write to '" + path + "' failed");
}

/// Runs `body`, mapping exceptions to exit codes and a message on `err`.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const config_error& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const io_error& e) {
    err << "error: " << e.what() << '\n';
    return io;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return internal;
  }
}

inline int cmd_generate(const generate_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    generator_spec spec;
    spec.dist = parse_dist(o.dist);
    spec.alpha = o.alpha;
    spec.n = o.n;
    spec.m = o.m;
    spec.max_update = o.max_update;
    spec.seed = o.seed;
    stream_file sf;
    sf.n = o.n;
    sf.max_update = o.max_update;
    sf.updates = generate_stream(spec);
    write_stream_file(o.out, sf);
    kv_writer kv(out);
    kv.put("command", "generate").put("dist", dist_name(spec.dist)).put("n", o.n).put("m", o.m);
    kv.put("max_update", o.max_update).put("seed", o.seed).put("out", o.out);
    return static_cast<int>(ok);
  });
}

inline fp_config make_config(uint64_t n, const sketch_options& o) {
  return derive_params(n, o.p, o.epsilon, o.scales, o.seed);
}

inline void check_copies(uint32_t copies) {
  if (copies == 0 || copies % 2 == 0) throw config_error("--copies must be odd and >= 1");
}

inline int cmd_estimate(const estimate_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_copies(o.sketch.copies);
    const stream_file sf = read_stream_file(o.stream, o.n);
    const frequency_vector fv(sf.n, sf.updates);
    nlohmann::ordered_json dump;
    kv_writer kv(out);
    kv.put("command", "estimate").put("stream", o.stream).put("n", sf.n).put("m", sf.updates.size());
    kv.put("p", o.sketch.p);
    if (o.exact) {
      if (!(o.sketch.p > 0)) throw config_error("p must be > 0");
      const double fp = static_cast<double>(exact_moment(fv, o.sketch.p));
      kv.put("mode", "exact").put("theta", fp).put("exact_fp", fp).put("memory_bytes", sf.n * sizeof(int64_t));
      dump["mode"] = "exact";
      dump["theta"] = fp;
      dump["exact_fp"] = fp;
    } else {
      const fp_config cfg = make_config(sf.n, o.sketch);
      const std::vector<stream_update> totals = aggregate(sf.updates);
      double theta = 0;
      bool failed = false;
      uint32_t nc_failures = 0;
      dump["config"] = to_json(cfg);
      if (o.sketch.copies == 1) {
        fp_sketch sk(cfg);
        sk.ingest(totals);
        const fp_result res = sk.query();
        theta = res.theta;
        failed = res.trace.nc_failed;
        nc_failures = failed ? 1 : 0;
        dump["trace"] = to_json(res.trace);
      } else {
        const median_result med = median_estimate(cfg, totals, o.sketch.copies);
        theta = med.theta;
        failed = med.all_failed;
        nc_failures = med.nc_failures;
        dump["copies"] = med.copies;
      }
      kv.put("mode", "sketch").put("epsilon", o.sketch.epsilon).put("seed", o.sketch.seed);
      kv.put("copies", o.sketch.copies).put("theta", theta).put("nc_failed", failed);
      kv.put("nc_failures", nc_failures);
      kv.put("B", cfg.B).put("C", cfg.C).put("s", cfg.s).put("k", cfg.k).put("r", cfg.r);
      kv.put("counters", cfg.total_counters()).put("word_bytes", sizeof(int64_t));
      kv.put("memory_bytes", cfg.total_counters() * sizeof(int64_t) * o.sketch.copies);
      dump["mode"] = "sketch";
      dump["theta"] = theta;
      dump["nc_failed"] = failed;
      dump["nc_failures"] = nc_failures;
      if (o.with_oracle) {
        const double fp = static_cast<double>(exact_moment(fv, o.sketch.p));
        const double rel = fp == 0 ? (theta == 0 ? 0.0 : INFINITY) : std::fabs(theta - fp) / fp;
        kv.put("exact_fp", fp).put("relative_error", rel);
        dump["exact_fp"] = fp;
        dump["relative_error"] = rel;
      }
    }
    if (!o.out.empty()) write_json(o.out, dump);
    return static_cast<int>(ok);
  });
}

inline int cmd_benchmark(const benchmark_options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check_copies(o.sketch.copies);
    if (o.trials == 0) throw config_error("--trials must be >= 1");
    stream_file sf;
    if (!o.stream.empty()) {
      sf = read_stream_file(o.stream, o.n);
    } else {
      if (!o.n) throw config_error("--n is required without --stream");
      generator_spec spec;
      spec.dist = parse_dist(o.dist);
      spec.alpha = o.alpha;
      spec.n = *o.n;
      spec.m = o.m;
      spec.max_update = o.max_update;
      spec.seed = o.sketch.seed;
      sf.n = *o.n;
      sf.updates = generate_stream(spec);
    }
    const fp_config cfg = make_config(sf.n, o.sketch);
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> rel_errors;
    const trial_summary sum = run_trials(
        sf.updates, cfg, o.trials,
        [&](double theta, const query_trace&, const trial_context& ctx) {
          rel_errors.push_back(std::fabs(theta - ctx.exact_fp) / ctx.exact_fp);
          return std::fabs(theta - ctx.exact_fp) <= o.sketch.epsilon * ctx.exact_fp;
        },
        o.sketch.copies);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double exact_fp = static_cast<double>(exact_moment(frequency_vector(sf.n, sf.updates), o.sketch.p));
    double mean_rel = 0;
    for (double r : rel_errors) mean_rel += r;
    mean_rel /= static_cast<double>(rel_errors.size());

    kv_writer kv(out);
    kv.put("command", "benchmark").put("n", sf.n).put("m", sf.updates.size()).put("p", o.sketch.p);
    kv.put("epsilon", o.sketch.epsilon).put("seed", o.sketch.seed).put("copies", o.sketch.copies);
    kv.put("counters", cfg.total_counters()).put("trials", sum.trials).put("successes", sum.successes);
    kv.put("success_rate", sum.success_rate()).put("mean_relative_error", mean_rel);
    kv.put("exact_fp", exact_fp).put("theta_mean", sum.mean).put("theta_variance", sum.variance);
    kv.put("nc_failures", sum.nc_failures);
    kv.put("nc_failure_rate", static_cast<double>(sum.nc_failures) / sum.trials);
    kv.put("wall_time_s", wall);
    if (!o.out.empty()) {
      nlohmann::ordered_json dump = to_json(sum);
      dump["config"] = to_json(cfg);
      dump["success_rate"] = sum.success_rate();
      dump["mean_relative_error"] = mean_rel;
      dump["exact_fp"] = exact_fp;
      dump["thetas"] = sum.thetas;
      dump["wall_time_s"] = wall;
      write_json(o.out, dump);
    }
    return static_cast<int>(ok);
  });
}

} // namespace fpsketch::cli

#endif
