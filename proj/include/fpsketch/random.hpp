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

#ifndef FPSKETCH_RANDOM_HPP_
#define FPSKETCH_RANDOM_HPP_

#include <bit>
#include <cstdint>
#include <random>

namespace fpsketch {

/**
 * SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on 64-bit words,
 * used both as the stateless seed mixer and as the step of splitmix64_stream.
 */
constexpr uint64_t splitmix64_mix(uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class splitmix64_stream {
 public:
  explicit constexpr splitmix64_stream(uint64_t seed) noexcept : state_(seed) {}

  constexpr uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

 private:
  uint64_t state_;
};

/**
 * Derives the seed of sub-stream `stream_id` from a master seed.
 *
 * seed = mix(mix(master) ^ (golden * (stream_id + 1))). The outer mix makes
 * neighbouring stream ids (and neighbouring master seeds) land on unrelated
 * words, so one master seed reproduces every structure of an experiment.
 */
constexpr uint64_t derive_seed(uint64_t master_seed, uint64_t stream_id) noexcept {
  return splitmix64_mix(splitmix64_mix(master_seed) ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
}

/**
 * Seeded generator for everything that is not a hash family: subset choices
 * in the averaged estimator, the geometric index of the unbiased estimator,
 * synthetic streams. mt19937_64 is bit-specified by the standard; the
 * conversions below avoid the implementation-defined std:: distributions so
 * that outputs agree across standard libraries.
 */
class rng {
 public:
  explicit rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [0, bound), bound >= 1 (Lemire's multiply-shift with rejection).
  uint64_t uniform_below(uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<uint64_t>(m);
    if (low < bound) {
      const uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  /// N with Pr[N = j] = 2^-(j+1), capped at 64.
  unsigned geometric_half() { return static_cast<unsigned>(std::countr_one(engine_())); }

 private:
  std::mt19937_64 engine_;
};

} // namespace fpsketch

#endif
