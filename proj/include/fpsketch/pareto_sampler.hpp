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

#ifndef FPSKETCH_PARETO_SAMPLER_HPP_
#define FPSKETCH_PARETO_SAMPLER_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "errors.hpp"
#include "hashing.hpp"

namespace fpsketch {

/// ceil(log2(x)) for x >= 1.
inline uint32_t ceil_log2(uint64_t x) {
  if (x <= 1) return 0;
  return static_cast<uint32_t>(std::bit_width(x - 1));
}

/**
 * Truncated Pareto law on [1, R] with density A y^-(p+1), R = n^(4/p),
 * A = p / (1 - R^-p). These are the per-item scalers: an item's updates are
 * multiplied by its scaler before entering the heavy-hitter and estimation
 * sketches.
 *
 * Scalers are emitted in fixed point with q fractional bits (default
 * q = ceil(log2 n) + 4), always rounded down, so every scaler is an exact
 * multiple of 2^-q in [1, R]. Tail probabilities use the continuous law.
 */
class y_distribution {
 public:
  y_distribution(double p, uint64_t n) : y_distribution(p, n, ceil_log2(n) + 4) {}

  y_distribution(double p, uint64_t n, uint32_t frac_bits) : p_(p), n_(n), frac_bits_(frac_bits) {
    if (!(p > 0) || !std::isfinite(p)) throw config_error("scaler exponent p must be > 0");
    if (n < 2) throw config_error("domain size n must be >= 2");
    const double log_n = std::log(static_cast<double>(n));
    R_ = std::exp(4.0 * log_n / p);
    R_pow_neg_p_ = std::exp(-4.0 * log_n);  // R^-p = n^-4
    A_ = p / (1.0 - R_pow_neg_p_);
    const uint32_t int_bits = static_cast<uint32_t>(std::ceil(std::log2(R_))) + 1;
    if (int_bits + frac_bits > 62) {
      throw config_error("scaler needs " + std::to_string(int_bits + frac_bits) +
                         " fixed-point bits; at most 62 are supported");
    }
    one_fixed_ = uint64_t{1} << frac_bits;
    max_fixed_ = static_cast<uint64_t>(std::floor(std::ldexp(R_, static_cast<int>(frac_bits))));
  }

  double p() const { return p_; }
  uint64_t n() const { return n_; }
  double R() const { return R_; }
  double A() const { return A_; }
  uint32_t frac_bits() const { return frac_bits_; }

  /// F(y) = (A/p)(1 - y^-p) on [1, R].
  double cdf(double y) const {
    if (y <= 1.0) return 0.0;
    if (y >= R_) return 1.0;
    return (A_ / p_) * (1.0 - std::pow(y, -p_));
  }

  /// Inverse CDF before discretization: (1 - u p / A)^(-1/p).
  double quantile(double u) const {
    check_unit(u);
    return std::pow(1.0 - u * (1.0 - R_pow_neg_p_), -1.0 / p_);
  }

  /// Scaler for uniform u in raw fixed-point units (multiples of 2^-q).
  uint64_t sample_fixed(double u) const {
    const double y = quantile(u);
    const double scaled = std::floor(std::ldexp(y, static_cast<int>(frac_bits_)));
    if (!(scaled < static_cast<double>(max_fixed_))) return max_fixed_;
    const auto fixed = static_cast<uint64_t>(scaled);
    return fixed < one_fixed_ ? one_fixed_ : fixed;
  }

  double sample_at(double u) const { return from_fixed(sample_fixed(u)); }

  double from_fixed(uint64_t fixed) const {
    return std::ldexp(static_cast<double>(fixed), -static_cast<int>(frac_bits_));
  }

  /**
   * Pr[y >= t] = (A/p)(t^-p - R^-p) for 1 <= t <= R and 0 above R. Arguments
   * below 1 are clamped to 1, where the probability is exactly 1.
   */
  double tail_prob(double t) const {
    if (!(t > 1.0)) return 1.0;
    if (t >= R_) return 0.0;
    return (A_ / p_) * (std::pow(t, -p_) - R_pow_neg_p_);
  }

  /// E[y^2] = A (1 - R^-(p-2)) / (p - 2); diverges for p <= 2.
  double second_moment() const {
    if (!(p_ > 2)) {
      throw config_error("E[y^2] is infinite for p <= 2 (p = " + std::to_string(p_) + ")");
    }
    return A_ * (1.0 - std::pow(R_, -(p_ - 2.0))) / (p_ - 2.0);
  }

 private:
  static void check_unit(double u) {
    if (!(u >= 0.0 && u < 1.0)) throw usage_error("scaler quantile needs u in [0, 1)");
  }

  double p_;
  uint64_t n_;
  uint32_t frac_bits_;
  double R_;
  double R_pow_neg_p_;
  double A_;
  uint64_t one_fixed_;
  uint64_t max_fixed_;
};

/// Scaler of item i in fixed point: sample_fixed at the pairwise hash of i.
inline uint64_t y_fixed_for_item(const y_distribution& dist, const hash_family& scaler_hash,
                                 uint64_t i) {
  return dist.sample_fixed(scaler_hash.unit_value(i));
}

inline double y_for_item(const y_distribution& dist, const hash_family& scaler_hash, uint64_t i) {
  return dist.from_fixed(y_fixed_for_item(dist, scaler_hash, i));
}

} // namespace fpsketch

#endif
