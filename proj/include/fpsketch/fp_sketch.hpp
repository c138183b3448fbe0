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

#ifndef FPSKETCH_FP_SKETCH_HPP_
#define FPSKETCH_FP_SKETCH_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "count_sketch.hpp"
#include "errors.hpp"
#include "hashing.hpp"
#include "pareto_sampler.hpp"
#include "random.hpp"
#include "stream.hpp"
#include "taylor_estimator.hpp"

namespace fpsketch {

/// Multipliers applied to the default sizes; 1 everywhere reproduces the analysed sizes.
struct fp_scales {
  double b = 1.0;
  double s = 1.0;
  double k = 1.0;
  double r = 1.0;

  bool operator==(const fp_scales&) const = default;
};

namespace detail {

/// ceil(x), except that values within 1e-9 (relative) of an integer round to it.
inline uint64_t ceil_tolerant(double x) {
  const double nearest = std::round(x);
  if (std::fabs(x - nearest) <= 1e-9 * std::max(1.0, std::fabs(x))) return static_cast<uint64_t>(nearest);
  return static_cast<uint64_t>(std::ceil(x));
}

inline constexpr uint64_t scaler_stream = 0;
inline constexpr uint64_t averaging_stream_base = uint64_t{5} << 32;
inline constexpr uint64_t copy_stream_base = uint64_t{6} << 32;

} // namespace detail

/**
 * Parameters of the F_p sketch for domain [0, n), exponent p and accuracy
 * epsilon. With L = ceil(log2 n) and base = max(4L + 4, 144):
 *
 *   k = ceil(scale_k base)            s = ceil(scale_s 32 base)
 *   r = ceil(scale_r 12 s)            q = L + 4 fractional scaler bits
 *   B = ceil(scale_b 1000 n^(1-2/p) E[y^2] / (eps^2 min(log2 n, eps^(4/p-2))))
 *   C = ceil(121 p^2 B)
 *
 * The heavy-hitter and estimation sketches are s x C; the second-moment
 * sketch is f2_groups x f2_width.
 */
struct fp_config {
  uint64_t n = 0;
  double p = 0;
  double epsilon = 0;
  uint64_t master_seed = 0;
  fp_scales scales;

  uint64_t B = 0;
  uint64_t C = 0;
  uint32_t s = 0;
  uint32_t k = 0;
  uint32_t r = 0;
  double R = 0;
  double A = 0;
  double ey2 = 0;
  uint32_t q = 0;

  uint32_t f2_width = default_f2_width;
  uint32_t f2_groups = default_f2_groups;
  /// Upper bound on sum |v| over the stream (m M); 0 = unknown, overflow is then caught at update time.
  uint64_t mass_bound = 0;
  /// Width of the estimation sketch alone; 0 = C. Not serialized.
  uint64_t tpest_buckets = 0;

  static constexpr uint32_t default_f2_width = 8 * 256 * 256;
  static constexpr uint32_t default_f2_groups = 9;

  uint32_t pool_size() const { return s / 2; }
  uint64_t tpest_width() const { return tpest_buckets ? tpest_buckets : C; }
  uint64_t sketch_counters() const { return static_cast<uint64_t>(s) * (C + tpest_width()); }
  uint64_t total_counters() const { return sketch_counters() + static_cast<uint64_t>(f2_width) * f2_groups; }
  uint64_t memory_bytes() const { return total_counters() * sizeof(int64_t); }
  /// Averaging variance bound premise: pool s/2 >= 16k (and k >= 144).
  bool averaging_bounds_apply() const { return pool_size() >= 16ull * k && k >= 144; }
};

inline double log2_real(uint64_t n) { return std::log2(static_cast<double>(n)); }

inline fp_config derive_params(uint64_t n, double p, double epsilon, const fp_scales& scales = {},
                               uint64_t master_seed = 0) {
  if (n < 2) throw config_error("n must be >= 2");
  if (!(p > 2) || !std::isfinite(p)) throw config_error("p must be > 2 (got " + std::to_string(p) + ")");
  const double log_n = log2_real(n);
  if (!(p < log_n)) {
    throw config_error("p must be < log2(n) = " + std::to_string(log_n) + " (got " + std::to_string(p) + ")");
  }
  const double eps_min = std::pow(static_cast<double>(n), -1.0 / p);
  if (!(epsilon >= eps_min * (1 - 1e-12) && epsilon <= 1.0)) {
    throw config_error("epsilon must lie in [n^(-1/p), 1] = [" + std::to_string(eps_min) + ", 1] (got " +
                       std::to_string(epsilon) + ")");
  }
  for (double scale : {scales.b, scales.s, scales.k, scales.r}) {
    if (!(scale > 0) || !std::isfinite(scale)) throw config_error("scale overrides must be finite and > 0");
  }

  fp_config cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.epsilon = epsilon;
  cfg.master_seed = master_seed;
  cfg.scales = scales;

  const uint32_t log_ceil = n > (uint64_t{1} << 63) ? 64 : ceil_log2(n);
  const double base = std::max(4.0 * log_ceil + 4.0, 144.0);
  cfg.k = static_cast<uint32_t>(detail::ceil_tolerant(scales.k * base));
  cfg.s = static_cast<uint32_t>(detail::ceil_tolerant(scales.s * 32.0 * base));
  cfg.r = static_cast<uint32_t>(detail::ceil_tolerant(scales.r * 12.0 * cfg.s));
  cfg.q = log_ceil + 4;

  // E[y^2] in closed form; R^-p = n^-4 and R^-(p-2) = n^(-4(1-2/p)).
  const double ln_n = std::log(static_cast<double>(n));
  cfg.R = std::exp(4.0 * ln_n / p);
  cfg.A = p / (1.0 - std::exp(-4.0 * ln_n));
  cfg.ey2 = cfg.A * (1.0 - std::exp(-4.0 * (1.0 - 2.0 / p) * ln_n)) / (p - 2.0);

  const double denom = epsilon * epsilon * std::min(log_n, std::pow(epsilon, 4.0 / p - 2.0));
  const double b_real = scales.b * 1000.0 * std::pow(static_cast<double>(n), 1.0 - 2.0 / p) * cfg.ey2 / denom;
  cfg.B = detail::ceil_tolerant(b_real);
  cfg.C = detail::ceil_tolerant(121.0 * p * p * static_cast<double>(cfg.B));

  if (cfg.k == 0) throw config_error("derived degree k must be >= 1");
  if (cfg.pool_size() < cfg.k) {
    throw config_error("pool size s/2 = " + std::to_string(cfg.pool_size()) + " is below the degree k = " +
                       std::to_string(cfg.k));
  }
  return cfg;
}

/// l = max(0, ceil(2 log2(2 T / f))); items are retained when y >= 2^(l/2).
inline int level_index(double t_hat, double f_hat) {
  if (!(t_hat > 0) || !(f_hat > 0)) throw usage_error("level_index needs positive threshold and estimate");
  const double l = std::ceil(2.0 * std::log2(2.0 * t_hat / f_hat));
  return l > 0 ? static_cast<int>(l) : 0;
}

/// 2^(l/2): exact for even l, sqrt(2) 2^((l-1)/2) for odd l.
inline double level_threshold(int level) {
  const double base = std::ldexp(1.0, level / 2);
  return level % 2 == 0 ? base : base * std::sqrt(2.0);
}

/// Everything the query computed for one candidate heavy item.
struct item_trace {
  uint64_t item = 0;
  double g_hat = 0;        ///< estimate of |f_i y_i|
  int sign = 1;            ///< estimated sign of f_i
  double y = 0;            ///< scaler y_i
  double f_hat = 0;        ///< g_hat / y_i
  int level = 0;           ///< l(f_hat)
  double threshold = 0;    ///< 2^(l/2)
  double rho = 0;          ///< Pr[y >= threshold]
  uint32_t q_size = 0;     ///< |Q(i)|
  bool in_h = false;       ///< y_i >= threshold
  bool above_cutoff = false;
  double theta_bar = 0;    ///< averaged Taylor estimate of |f_i|^p
  bool included = false;   ///< contributes theta_bar / rho
  std::string note;
};

struct query_trace {
  double f2_hat = 0;
  double t_hat = 0;
  double delta = 0;
  double cutoff = 0;
  std::vector<item_trace> items;  ///< the candidate set H_g, ascending by item
  std::vector<uint64_t> h;        ///< retained set H
  double theta = 0;
  bool nc_failed = false;
};

struct fp_result {
  double theta = 0;
  query_trace trace;
};

/// nu = T_l[h_l(i)] xi_l(i) sign / y: one reading of |f_i| from table l.
inline double nu_reading(const count_sketch& tpest, uint64_t item, uint32_t table, int sign, double y) {
  return tpest.cell_value(table, tpest.bucket(table, item)) * tpest.sign(table, item) * sign / y;
}

/**
 * Streaming F_p sketch.
 *
 * Every update (i, v) enters the heavy-hitter and estimation CountSketches as
 * (i, v y_i), where y_i is the item's truncated-Pareto scaler derived from a
 * pairwise hash of i, and enters the second-moment sketch unscaled. All three
 * are linear, so same-seeded sketches over shards of a stream merge exactly.
 *
 * query() finds the candidate heavy set H_g from the heavy-hitter sketch,
 * keeps each candidate with probability-like weight Pr[y >= 2^(l/2)], checks
 * that every candidate owns at least s/2 collision-free tables in the
 * estimation sketch, and sums averaged Taylor estimates of |f_i|^p built from
 * those tables, each divided by its retention probability.
 */
class fp_sketch {
 public:
  explicit fp_sketch(const fp_config& cfg)
      : cfg_(cfg),
        ydist_(cfg.p, cfg.n, cfg.q),
        scaler_hash_(make_family(cfg.master_seed, detail::scaler_stream, 2, cfg.n, mersenne61)),
        hh_(sketch_role::heavy_hitters, cfg.s, cfg.C, cfg.n, cfg.q, cfg.master_seed),
        tpest_(sketch_role::tpest, cfg.s, cfg.tpest_width(), cfg.n, cfg.q, cfg.master_seed),
        f2_(sketch_role::f2, cfg.f2_groups, cfg.f2_width, cfg.n, 0, cfg.master_seed) {
    if (cfg.mass_bound > 0) {
      const double bits = std::ceil(std::log2(static_cast<double>(cfg.mass_bound) * cfg.R)) + 2 + cfg.q;
      if (bits > 63) {
        throw config_error("counters need " + std::to_string(static_cast<int>(bits)) +
                           " bits for this stream mass; at most 63 are available");
      }
    }
  }

  const fp_config& config() const { return cfg_; }
  const y_distribution& ydist() const { return ydist_; }
  const hash_family& scaler_hash() const { return scaler_hash_; }
  const count_sketch& hh() const { return hh_; }
  const count_sketch& tpest() const { return tpest_; }
  const count_sketch& f2() const { return f2_; }
  size_t num_counters() const { return hh_.num_counters() + tpest_.num_counters() + f2_.num_counters(); }

  uint64_t scaler_fixed(uint64_t i) const { return y_fixed_for_item(ydist_, scaler_hash_, i); }
  double scaler(uint64_t i) const { return ydist_.from_fixed(scaler_fixed(i)); }

  void ingest(uint64_t i, int64_t v) {
    const uint64_t y = scaler_fixed(i);
    int64_t scaled;
    if (__builtin_mul_overflow(v, static_cast<int64_t>(y), &scaled)) {
      throw counter_overflow("scaled update overflows 64 bits");
    }
    hh_.update(i, scaled);
    tpest_.update(i, scaled);
    f2_.update(i, v);
  }

  void ingest(std::span<const stream_update> updates) {
    for (const auto& u : updates) ingest(u.item, u.delta);
  }

  void reset() {
    hh_.reset();
    tpest_.reset();
    f2_.reset();
  }

  /**
   * Median over groups of sum_b cell_b^2. Each group spreads the items over
   * f2_width signed counters, so its sum of squares has mean F_2 and variance
   * at most 2 F_2^2 / f2_width.
   */
  double estimate_f2() const {
    std::vector<long double> groups(f2_.num_tables());
    for (uint32_t g = 0; g < f2_.num_tables(); ++g) {
      long double sum = 0.0L;
      for (int64_t c : f2_.row(g)) sum += static_cast<long double>(c) * c;
      groups[g] = sum;
    }
    const auto mid = groups.begin() + (groups.size() - 1) / 2;
    std::nth_element(groups.begin(), mid, groups.end());
    return static_cast<double>(*mid);
  }

  /// sqrt((1 + 1/256)/(1 - 1/256)) sqrt(16 E[y^2] F2 / B).
  double threshold_estimate(double f2_hat) const {
    const double inflate = std::sqrt((1.0 + 1.0 / 256.0) / (1.0 - 1.0 / 256.0));
    return inflate * std::sqrt(16.0 * cfg_.ey2 * f2_hat / static_cast<double>(cfg_.B));
  }

  fp_result query() const {
    fp_result out;
    query_trace& tr = out.trace;
    tr.f2_hat = estimate_f2();
    tr.t_hat = threshold_estimate(tr.f2_hat);
    tr.delta = tr.t_hat / (11.0 * cfg_.p);
    tr.cutoff = std::sqrt(std::pow(cfg_.epsilon, 2.0 / cfg_.p) * tr.f2_hat / (4.0 * static_cast<double>(cfg_.n)));
    if (!(tr.t_hat > 0)) return out;

    const heavy_report candidates = hh_.heavy_candidates(tr.t_hat, tr.delta);
    const std::vector<uint64_t> hg = candidates.items();
    tr.items.reserve(hg.size());
    for (const auto& e : candidates.entries) {
      item_trace it;
      it.item = e.item;
      it.g_hat = e.estimate;
      it.sign = e.sign;
      it.y = scaler(e.item);
      it.f_hat = e.estimate / it.y;
      if (it.f_hat > 0) {
        it.level = level_index(tr.t_hat, it.f_hat);
        it.threshold = level_threshold(it.level);
        it.rho = ydist_.tail_prob(it.threshold);
        it.in_h = it.y >= it.threshold;
        if (it.in_h && !(it.rho > 0)) {
          it.in_h = false;
          it.note = "zero_tail_probability";
        }
      } else {
        it.note = "nonpositive_f_hat";
      }
      it.above_cutoff = it.f_hat > tr.cutoff;
      if (it.in_h) tr.h.push_back(it.item);
      tr.items.push_back(std::move(it));
    }

    const auto q_sets = tpest_.non_collision_sets(hg);
    for (size_t a = 0; a < hg.size(); ++a) {
      tr.items[a].q_size = static_cast<uint32_t>(q_sets[a].size());
      if (2 * static_cast<uint64_t>(q_sets[a].size()) < cfg_.s) tr.nc_failed = true;
    }
    if (tr.nc_failed) return out;

    const uint32_t pool_size = cfg_.pool_size();
    std::vector<double> pool(pool_size);
    long double theta = 0.0L;
    for (size_t a = 0; a < hg.size(); ++a) {
      item_trace& it = tr.items[a];
      if (!it.in_h || !it.above_cutoff) continue;
      for (uint32_t j = 0; j < pool_size; ++j) {
        pool[j] = nu_reading(tpest_, it.item, q_sets[a][j], it.sign, it.y);
      }
      const taylor_config tc{cfg_.p, it.f_hat, cfg_.k, cfg_.r, subset_order::random};
      it.theta_bar = averaged_taylor(tc, pool, derive_seed(cfg_.master_seed, detail::averaging_stream_base + it.item));
      it.included = true;
      theta += static_cast<long double>(it.theta_bar) / it.rho;
    }
    tr.theta = static_cast<double>(theta);
    out.theta = tr.theta;
    return out;
  }

  bool compatible(const fp_sketch& other) const {
    return cfg_.n == other.cfg_.n && cfg_.p == other.cfg_.p && cfg_.epsilon == other.cfg_.epsilon &&
           cfg_.master_seed == other.cfg_.master_seed && cfg_.scales == other.cfg_.scales &&
           cfg_.f2_width == other.cfg_.f2_width && cfg_.f2_groups == other.cfg_.f2_groups &&
           cfg_.C == other.cfg_.C && cfg_.tpest_width() == other.cfg_.tpest_width();
  }

  fp_sketch& operator+=(const fp_sketch& other) {
    if (!compatible(other)) throw usage_error("cannot merge F_p sketches with different configurations");
    hh_ += other.hh_;
    tpest_ += other.tpest_;
    f2_ += other.f2_;
    return *this;
  }

  bool operator==(const fp_sketch& other) const {
    return compatible(other) && hh_ == other.hh_ && tpest_ == other.tpest_ && f2_ == other.f2_;
  }

  /**
   * "FPSK" | u16 version | u64 n | f64 p | f64 epsilon | u64 seed |
   * 4 x f64 scales | u32 f2_width | u32 f2_groups | hh | tpest | f2,
   * little-endian, doubles as IEEE-754 bit patterns.
   */
  std::vector<uint8_t> serialize() const {
    std::vector<uint8_t> out{'F', 'P', 'S', 'K'};
    auto put = [&](uint64_t v, int bytes) {
      for (int b = 0; b < bytes; ++b) out.push_back(static_cast<uint8_t>(v >> (8 * b)));
    };
    put(serial_version, 2);
    put(cfg_.n, 8);
    put(std::bit_cast<uint64_t>(cfg_.p), 8);
    put(std::bit_cast<uint64_t>(cfg_.epsilon), 8);
    put(cfg_.master_seed, 8);
    for (double sc : {cfg_.scales.b, cfg_.scales.s, cfg_.scales.k, cfg_.scales.r}) put(std::bit_cast<uint64_t>(sc), 8);
    put(cfg_.f2_width, 4);
    put(cfg_.f2_groups, 4);
    for (const count_sketch* sk : {&hh_, &tpest_, &f2_}) {
      const auto bytes = sk->serialize();
      out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
  }

  static fp_sketch deserialize(std::span<const uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "FPSK", 4) != 0) throw io_error("not a serialized F_p sketch");
    size_t pos = 4;
    auto get = [&](int n) {
      if (pos + n > bytes.size()) throw io_error("truncated F_p sketch header");
      uint64_t v = 0;
      for (int b = 0; b < n; ++b) v |= static_cast<uint64_t>(bytes[pos + b]) << (8 * b);
      pos += n;
      return v;
    };
    if (get(2) != serial_version) throw io_error("unsupported F_p sketch version");
    const uint64_t n = get(8);
    const double p = std::bit_cast<double>(get(8));
    const double eps = std::bit_cast<double>(get(8));
    const uint64_t seed = get(8);
    fp_scales sc;
    sc.b = std::bit_cast<double>(get(8));
    sc.s = std::bit_cast<double>(get(8));
    sc.k = std::bit_cast<double>(get(8));
    sc.r = std::bit_cast<double>(get(8));
    fp_config cfg = derive_params(n, p, eps, sc, seed);
    cfg.f2_width = static_cast<uint32_t>(get(4));
    cfg.f2_groups = static_cast<uint32_t>(get(4));
    fp_sketch out(cfg);
    for (count_sketch* sk : {&out.hh_, &out.tpest_, &out.f2_}) {
      size_t used = 0;
      count_sketch parsed = count_sketch::deserialize(bytes.subspan(pos), &used);
      if (!parsed.compatible(*sk)) throw io_error("embedded count sketch does not match the F_p header");
      *sk = std::move(parsed);
      pos += used;
    }
    return out;
  }

  static constexpr uint16_t serial_version = 1;

 private:
  fp_config cfg_;
  y_distribution ydist_;
  hash_family scaler_hash_;
  count_sketch hh_;
  count_sketch tpest_;
  count_sketch f2_;
};

inline fp_sketch merge(const fp_sketch& a, const fp_sketch& b) {
  fp_sketch out = a;
  out += b;
  return out;
}

/// Master seed of copy c in a median-of-copies run; copy 0 keeps the configured seed.
inline uint64_t copy_seed(uint64_t master_seed, uint32_t copy) {
  return copy == 0 ? master_seed : derive_seed(master_seed, detail::copy_stream_base + copy);
}

struct median_result {
  double theta = 0;
  bool all_failed = false;
  uint32_t nc_failures = 0;
  std::vector<double> copies;  ///< Theta of every copy, failed ones included as 0
};

/**
 * Runs `copies` independent sketches (seeds from copy_seed) over the stream
 * and returns the median Theta of the copies whose query did not fail the
 * collision check; lower median when that count is even. If every copy
 * fails the result is 0 with all_failed set.
 */
inline median_result median_estimate(const fp_config& cfg, std::span<const stream_update> stream,
                                     uint32_t copies) {
  if (copies == 0 || copies % 2 == 0) throw usage_error("copies must be odd and >= 1");
  median_result out;
  std::vector<double> ok;
  for (uint32_t c = 0; c < copies; ++c) {
    fp_config copy_cfg = cfg;
    copy_cfg.master_seed = copy_seed(cfg.master_seed, c);
    fp_sketch sk(copy_cfg);
    sk.ingest(stream);
    const fp_result res = sk.query();
    out.copies.push_back(res.theta);
    if (res.trace.nc_failed) {
      ++out.nc_failures;
    } else {
      ok.push_back(res.theta);
    }
  }
  if (ok.empty()) {
    out.all_failed = true;
    return out;
  }
  const auto mid = ok.begin() + (ok.size() - 1) / 2;
  std::nth_element(ok.begin(), mid, ok.end());
  out.theta = *mid;
  return out;
}

} // namespace fpsketch

#endif
