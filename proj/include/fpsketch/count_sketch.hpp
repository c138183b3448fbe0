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

#ifndef FPSKETCH_COUNT_SKETCH_HPP_
#define FPSKETCH_COUNT_SKETCH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "hashing.hpp"

namespace fpsketch {

/**
 * What a sketch is used for. The role fixes the independence of the bucket
 * and sign families and offsets the hash stream ids, so sketches with
 * different roles built from one master seed never share families.
 */
enum class sketch_role : uint8_t {
  heavy_hitters = 1,  ///< pairwise buckets, pairwise signs
  tpest = 2,          ///< 3-wise buckets, 4-wise signs
  f2 = 3              ///< pairwise buckets, 4-wise signs (second-moment groups)
};

struct role_independence {
  uint32_t bucket;
  uint32_t sign;
};

constexpr role_independence independence_of(sketch_role role) {
  switch (role) {
    case sketch_role::heavy_hitters: return {2, 2};
    case sketch_role::tpest: return {3, 4};
    case sketch_role::f2: return {2, 4};
  }
  return {2, 2};
}

inline const char* role_name(sketch_role role) {
  switch (role) {
    case sketch_role::heavy_hitters: return "heavy_hitters";
    case sketch_role::tpest: return "tpest";
    case sketch_role::f2: return "f2";
  }
  return "unknown";
}

struct heavy_entry {
  uint64_t item;
  double estimate;  ///< |median reading|
  int sign;         ///< sign of the median reading (+1 for zero)
};

/// Candidate heavy items, ascending by item index.
struct heavy_report {
  std::vector<heavy_entry> entries;

  std::vector<uint64_t> items() const {
    std::vector<uint64_t> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.item);
    return out;
  }
  bool empty() const { return entries.empty(); }
  size_t size() const { return entries.size(); }
};

/**
 * CountSketch over the domain [0, n): s tables of C signed fixed-point
 * counters. update(i, v) adds v * xi_l(i) to bucket h_l(i) of every table l.
 *
 * Counters hold raw fixed-point units with `frac_bits` fractional bits; the
 * sketch itself only adds integers, so it is exactly linear: updating with
 * two streams in any interleaving, or sketching them separately with the same
 * seeds and merging, gives bit-identical cells. Overflow throws.
 */
class count_sketch {
 public:
  /// Serialization format version written into every header.
  static constexpr uint16_t serial_version = 1;
  /// Hash stream ids of role r start at r * role_stream_stride.
  static constexpr uint64_t role_stream_stride = uint64_t{1} << 32;

  count_sketch(sketch_role role, uint32_t num_tables, uint64_t num_buckets, uint64_t domain_size,
               uint32_t frac_bits, uint64_t master_seed)
      : count_sketch(role, num_tables, num_buckets, domain_size, frac_bits, master_seed, master_seed) {}

  /// Bucket and sign families seeded separately (both equal in normal use).
  count_sketch(sketch_role role, uint32_t num_tables, uint64_t num_buckets, uint64_t domain_size,
               uint32_t frac_bits, uint64_t hash_seed, uint64_t sign_seed)
      : role_(role),
        num_tables_(num_tables),
        num_buckets_(num_buckets),
        domain_size_(domain_size),
        frac_bits_(frac_bits),
        hash_seed_(hash_seed),
        sign_seed_(sign_seed) {
    if (num_tables == 0) throw config_error("count sketch needs at least one table");
    if (num_buckets == 0) throw config_error("count sketch needs at least one bucket");
    if (frac_bits > 62) throw config_error("count sketch fractional bits must be <= 62");
    if (num_buckets > std::numeric_limits<size_t>::max() / num_tables) {
      throw config_error("count sketch dimensions overflow");
    }
    const auto ind = independence_of(role);
    const uint64_t base = static_cast<uint64_t>(role) * role_stream_stride;
    buckets_.reserve(num_tables);
    signs_.reserve(num_tables);
    for (uint32_t l = 0; l < num_tables; ++l) {
      buckets_.push_back(make_family(hash_seed, base + 2 * uint64_t{l}, ind.bucket, domain_size, num_buckets));
      signs_.push_back(make_sign_family(sign_seed, base + 2 * uint64_t{l} + 1, ind.sign, domain_size));
    }
    cells_.assign(static_cast<size_t>(num_tables) * num_buckets, 0);
  }

  sketch_role role() const { return role_; }
  uint32_t num_tables() const { return num_tables_; }
  uint64_t num_buckets() const { return num_buckets_; }
  uint64_t domain_size() const { return domain_size_; }
  uint32_t frac_bits() const { return frac_bits_; }
  uint64_t hash_seed() const { return hash_seed_; }
  uint64_t sign_seed() const { return sign_seed_; }
  size_t num_counters() const { return cells_.size(); }

  uint64_t bucket(uint32_t table, uint64_t i) const { return buckets_[table](i); }
  int sign(uint32_t table, uint64_t i) const { return signs_[table](i); }

  /// Adds raw fixed-point value v (units of 2^-frac_bits) for item i.
  void update(uint64_t i, int64_t v) {
    if (i >= domain_size_) {
      throw usage_error("item " + std::to_string(i) + " outside sketch domain [0, " +
                        std::to_string(domain_size_) + ")");
    }
    if (v == 0) return;
    if (v == std::numeric_limits<int64_t>::min()) throw counter_overflow("update magnitude too large");
    for (uint32_t l = 0; l < num_tables_; ++l) {
      int64_t& cell = cells_[index(l, buckets_[l](i))];
      const int64_t delta = signs_[l](i) > 0 ? v : -v;
      if (__builtin_add_overflow(cell, delta, &cell)) {
        throw counter_overflow("count sketch counter overflow in table " + std::to_string(l));
      }
    }
  }

  /// Median over tables of cells[l][h_l(i)] * xi_l(i), raw units; lower median for even s.
  int64_t point_estimate_raw(uint64_t i) const {
    std::vector<int64_t> scratch(num_tables_);
    return median_reading(i, scratch);
  }

  double point_estimate(uint64_t i) const { return to_real(point_estimate_raw(i)); }

  /**
   * Enumerates the whole domain and reports every item whose |point estimate|
   * is at least threshold - error. Estimates are |median|, signs its sign.
   */
  heavy_report heavy_candidates(double threshold, double error) const {
    if (!(threshold > error) || !(error > 0)) {
      throw usage_error("heavy_candidates needs threshold > error > 0");
    }
    heavy_report out;
    const double cut = threshold - error;
    std::vector<int64_t> scratch(num_tables_);
    for (uint64_t i = 0; i < domain_size_; ++i) {
      const double est = to_real(median_reading(i, scratch));
      if (std::fabs(est) >= cut) out.entries.push_back({i, std::fabs(est), est < 0 ? -1 : 1});
    }
    return out;
  }

  /// Tables where i shares its bucket with no other member of `items` (ascending).
  std::vector<uint32_t> non_collision_tables(uint64_t i, std::span<const uint64_t> items) const {
    if (std::find(items.begin(), items.end(), i) == items.end()) {
      throw usage_error("non_collision_tables: item " + std::to_string(i) + " is not in the set");
    }
    std::vector<uint32_t> out;
    for (uint32_t l = 0; l < num_tables_; ++l) {
      const uint64_t b = buckets_[l](i);
      bool clear = true;
      for (uint64_t j : items) {
        if (j != i && buckets_[l](j) == b) {
          clear = false;
          break;
        }
      }
      if (clear) out.push_back(l);
    }
    return out;
  }

  /// non_collision_tables for every member of `items`, in the same order; O(s |H| log |H|).
  std::vector<std::vector<uint32_t>> non_collision_sets(std::span<const uint64_t> items) const {
    std::vector<std::vector<uint32_t>> out(items.size());
    std::vector<std::pair<uint64_t, size_t>> keyed(items.size());
    for (uint32_t l = 0; l < num_tables_; ++l) {
      for (size_t a = 0; a < items.size(); ++a) keyed[a] = {buckets_[l](items[a]), a};
      std::sort(keyed.begin(), keyed.end());
      for (size_t a = 0; a < keyed.size(); ++a) {
        const bool left = a > 0 && keyed[a - 1].first == keyed[a].first;
        const bool right = a + 1 < keyed.size() && keyed[a + 1].first == keyed[a].first;
        if (!left && !right) out[keyed[a].second].push_back(l);
      }
    }
    return out;
  }

  int64_t raw_cell(uint32_t table, uint64_t bucket) const {
    if (table >= num_tables_ || bucket >= num_buckets_) {
      throw usage_error("cell (" + std::to_string(table) + ", " + std::to_string(bucket) +
                        ") out of range");
    }
    return cells_[index(table, bucket)];
  }

  double cell_value(uint32_t table, uint64_t bucket) const { return to_real(raw_cell(table, bucket)); }

  std::span<const int64_t> row(uint32_t table) const {
    return {cells_.data() + static_cast<size_t>(table) * num_buckets_, static_cast<size_t>(num_buckets_)};
  }

  double to_real(int64_t raw) const { return std::ldexp(static_cast<double>(raw), -static_cast<int>(frac_bits_)); }

  bool compatible(const count_sketch& other) const {
    return role_ == other.role_ && num_tables_ == other.num_tables_ && num_buckets_ == other.num_buckets_ &&
           domain_size_ == other.domain_size_ && frac_bits_ == other.frac_bits_ &&
           hash_seed_ == other.hash_seed_ && sign_seed_ == other.sign_seed_;
  }

  count_sketch& operator+=(const count_sketch& other) {
    if (!compatible(other)) throw usage_error("cannot merge count sketches with different parameters");
    for (size_t c = 0; c < cells_.size(); ++c) {
      if (__builtin_add_overflow(cells_[c], other.cells_[c], &cells_[c])) {
        throw counter_overflow("count sketch counter overflow during merge");
      }
    }
    return *this;
  }

  void negate() {
    for (auto& c : cells_) {
      if (c == std::numeric_limits<int64_t>::min()) throw counter_overflow("cannot negate counter");
      c = -c;
    }
  }

  void reset() { std::fill(cells_.begin(), cells_.end(), 0); }

  bool operator==(const count_sketch& other) const { return compatible(other) && cells_ == other.cells_; }

  /**
   * Little-endian layout, identical on every platform:
   *   "FPCS" | u16 version | u8 role | u8 0 | u32 s | u64 C | u64 n | u32 q |
   *   u64 hash_seed | u64 sign_seed | s*C x i64 cells, row-major.
   */
  std::vector<uint8_t> serialize() const {
    std::vector<uint8_t> out;
    out.reserve(header_size + cells_.size() * 8);
    out.insert(out.end(), {'F', 'P', 'C', 'S'});
    put_le(out, serial_version, 2);
    put_le(out, static_cast<uint8_t>(role_), 1);
    put_le(out, 0, 1);
    put_le(out, num_tables_, 4);
    put_le(out, num_buckets_, 8);
    put_le(out, domain_size_, 8);
    put_le(out, frac_bits_, 4);
    put_le(out, hash_seed_, 8);
    put_le(out, sign_seed_, 8);
    for (int64_t c : cells_) put_le(out, static_cast<uint64_t>(c), 8);
    return out;
  }

  /// Parses one sketch from the front of `bytes`; `consumed` receives its length.
  static count_sketch deserialize(std::span<const uint8_t> bytes, size_t* consumed = nullptr) {
    if (bytes.size() < header_size || std::memcmp(bytes.data(), "FPCS", 4) != 0) {
      throw io_error("not a serialized count sketch");
    }
    size_t pos = 4;
    const auto version = static_cast<uint16_t>(get_le(bytes, pos, 2));
    if (version != serial_version) throw io_error("unsupported count sketch version " + std::to_string(version));
    const auto role = static_cast<uint8_t>(get_le(bytes, pos, 1));
    if (role < 1 || role > 3) throw io_error("unknown count sketch role " + std::to_string(role));
    get_le(bytes, pos, 1);
    const auto s = static_cast<uint32_t>(get_le(bytes, pos, 4));
    const uint64_t c = get_le(bytes, pos, 8);
    const uint64_t n = get_le(bytes, pos, 8);
    const auto q = static_cast<uint32_t>(get_le(bytes, pos, 4));
    const uint64_t hash_seed = get_le(bytes, pos, 8);
    const uint64_t sign_seed = get_le(bytes, pos, 8);
    if (c != 0 && s != 0 && (bytes.size() - header_size) / 8 / s < c) {
      throw io_error("truncated count sketch payload");
    }
    count_sketch sk(static_cast<sketch_role>(role), s, c, n, q, hash_seed, sign_seed);
    for (auto& cell : sk.cells_) cell = static_cast<int64_t>(get_le(bytes, pos, 8));
    if (consumed != nullptr) *consumed = pos;
    return sk;
  }

 private:
  static constexpr size_t header_size = 4 + 2 + 1 + 1 + 4 + 8 + 8 + 4 + 8 + 8;

  static void put_le(std::vector<uint8_t>& out, uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) out.push_back(static_cast<uint8_t>(v >> (8 * b)));
  }

  static uint64_t get_le(std::span<const uint8_t> in, size_t& pos, int bytes) {
    if (pos + bytes > in.size()) throw io_error("truncated count sketch");
    uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) v |= static_cast<uint64_t>(in[pos + b]) << (8 * b);
    pos += bytes;
    return v;
  }

  size_t index(uint32_t table, uint64_t bucket) const {
    return static_cast<size_t>(table) * num_buckets_ + bucket;
  }

  int64_t median_reading(uint64_t i, std::vector<int64_t>& scratch) const {
    for (uint32_t l = 0; l < num_tables_; ++l) {
      const int64_t cell = cells_[index(l, buckets_[l](i))];
      scratch[l] = signs_[l](i) > 0 ? cell : -cell;
    }
    const auto mid = scratch.begin() + (num_tables_ - 1) / 2;
    std::nth_element(scratch.begin(), mid, scratch.end());
    return *mid;
  }

  sketch_role role_;
  uint32_t num_tables_;
  uint64_t num_buckets_;
  uint64_t domain_size_;
  uint32_t frac_bits_;
  uint64_t hash_seed_;
  uint64_t sign_seed_;
  std::vector<hash_family> buckets_;
  std::vector<sign_family> signs_;
  std::vector<int64_t> cells_;
};

inline count_sketch merge(const count_sketch& a, const count_sketch& b) {
  count_sketch out = a;
  out += b;
  return out;
}

} // namespace fpsketch

#endif
