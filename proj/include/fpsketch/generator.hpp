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

#ifndef FPSKETCH_GENERATOR_HPP_
#define FPSKETCH_GENERATOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "random.hpp"
#include "stream.hpp"

namespace fpsketch {

enum class stream_dist { zipf, uniform, single_heavy };

inline stream_dist parse_dist(const std::string& name) {
  if (name == "zipf") return stream_dist::zipf;
  if (name == "uniform") return stream_dist::uniform;
  if (name == "single-heavy") return stream_dist::single_heavy;
  throw config_error("unknown distribution '" + name + "' (expected zipf, uniform or single-heavy)");
}

inline const char* dist_name(stream_dist d) {
  switch (d) {
    case stream_dist::zipf: return "zipf";
    case stream_dist::uniform: return "uniform";
    case stream_dist::single_heavy: return "single-heavy";
  }
  return "?";
}

struct generator_spec {
  stream_dist dist = stream_dist::zipf;
  double alpha = 1.1;
  uint64_t n = 0;
  uint64_t m = 0;
  /// increments are uniform on [1, max_update]
  uint64_t max_update = 1;
  uint64_t seed = 0;
};

/**
 * Synthetic stream of m positive updates over [0, n).
 *
 * zipf: item r - 1 has probability proportional to r^-alpha (inverse CDF over
 * a cumulative table). uniform: every item equally likely. single-heavy:
 * even-numbered updates hit item 0, odd ones a uniform item of [1, n), so
 * item 0 carries half the updates.
 */
inline std::vector<stream_update> generate_stream(const generator_spec& spec) {
  if (spec.n == 0) throw config_error("generator needs n >= 1");
  if (spec.max_update == 0 || spec.max_update > (uint64_t{1} << 62)) {
    throw config_error("max update must lie in [1, 2^62]");
  }
  if (spec.dist == stream_dist::zipf && !(spec.alpha > 0)) throw config_error("zipf alpha must be > 0");
  if (spec.dist == stream_dist::single_heavy && spec.n < 2) throw config_error("single-heavy needs n >= 2");
  rng gen(spec.seed);
  std::vector<double> cdf;
  if (spec.dist == stream_dist::zipf) {
    cdf.resize(spec.n);
    long double acc = 0.0L;
    for (uint64_t r = 0; r < spec.n; ++r) {
      acc += std::pow(static_cast<long double>(r + 1), -static_cast<long double>(spec.alpha));
      cdf[r] = static_cast<double>(acc);
    }
    for (double& c : cdf) c /= static_cast<double>(acc);
    cdf.back() = 1.0;
  }
  std::vector<stream_update> out;
  out.reserve(spec.m);
  for (uint64_t j = 0; j < spec.m; ++j) {
    uint64_t item = 0;
    switch (spec.dist) {
      case stream_dist::zipf: {
        const double u = gen.uniform01();
        item = static_cast<uint64_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        item = std::min(item, spec.n - 1);
        break;
      }
      case stream_dist::uniform:
        item = gen.uniform_below(spec.n);
        break;
      case stream_dist::single_heavy:
        item = j % 2 == 0 ? 0 : 1 + gen.uniform_below(spec.n - 1);
        break;
    }
    const auto v = static_cast<int64_t>(1 + gen.uniform_below(spec.max_update));
    out.push_back({item, v});
  }
  return out;
}

} // namespace fpsketch

#endif
