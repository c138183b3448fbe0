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

#ifndef FPSKETCH_HASHING_HPP_
#define FPSKETCH_HASHING_HPP_

#include <array>
#include <cstdint>
#include <string>

#include "errors.hpp"
#include "random.hpp"

namespace fpsketch {

/// 2^61 - 1, the field every hash family lives in.
inline constexpr uint64_t mersenne61 = (uint64_t{1} << 61) - 1;

inline constexpr uint64_t reduce_mersenne61(unsigned __int128 x) noexcept {
  // x < 2^122 here, so two folds bring it below 2^62 and one subtraction finishes.
  uint64_t folded = static_cast<uint64_t>(x & mersenne61) + static_cast<uint64_t>(x >> 61);
  folded = (folded & mersenne61) + (folded >> 61);
  return folded >= mersenne61 ? folded - mersenne61 : folded;
}

inline constexpr uint64_t mul_add_mersenne61(uint64_t a, uint64_t x, uint64_t b) noexcept {
  return reduce_mersenne61(static_cast<unsigned __int128>(a) * x + b);
}

/**
 * t-wise independent family h : [0, domain) -> [0, range).
 *
 * h(i) = (c_{t-1} i^{t-1} + ... + c_1 i + c_0 mod 2^61-1) mod range, with all t
 * coefficients drawn uniformly from the field. The polynomial value is exactly
 * t-wise independent and uniform over the field; the final reduction adds a
 * per-bucket bias of at most range / (2^61 - 1), which is below 2^-45 for
 * every range up to 2^16 and below 2^-29 for ranges up to 2^32.
 */
class hash_family {
 public:
  static constexpr uint32_t max_independence = 4;

  hash_family(uint64_t seed, uint32_t independence, uint64_t domain_size, uint64_t range)
      : seed_(seed), independence_(independence), domain_size_(domain_size), range_(range) {
    if (independence < 2 || independence > max_independence) {
      throw config_error("hash independence must be 2, 3 or 4: " + std::to_string(independence));
    }
    if (range == 0) throw config_error("hash range must be >= 1");
    if (domain_size == 0) throw config_error("hash domain must be >= 1");
    if (domain_size > mersenne61) {
      throw config_error("hash domain exceeds the 2^61-1 field: " + std::to_string(domain_size));
    }
    splitmix64_stream gen(seed);
    for (uint32_t j = 0; j < independence; ++j) {
      uint64_t c;
      do {
        c = gen.next() >> 3;
      } while (c >= mersenne61);
      coefficients_[j] = c;
    }
  }

  /// Raw field value in [0, 2^61 - 1).
  uint64_t field_value(uint64_t i) const {
    check_domain(i);
    uint64_t acc = coefficients_[independence_ - 1];
    for (uint32_t j = independence_ - 1; j-- > 0;) {
      acc = mul_add_mersenne61(acc, i, coefficients_[j]);
    }
    return acc;
  }

  uint64_t operator()(uint64_t i) const { return field_value(i) % range_; }

  /// Field value scaled to [0, 1) using its top 53 bits.
  double unit_value(uint64_t i) const { return static_cast<double>(field_value(i) >> 8) * 0x1.0p-53; }

  uint64_t seed() const { return seed_; }
  uint32_t independence() const { return independence_; }
  uint64_t domain_size() const { return domain_size_; }
  uint64_t range() const { return range_; }
  const std::array<uint64_t, max_independence>& coefficients() const { return coefficients_; }

 private:
  void check_domain(uint64_t i) const {
    if (i >= domain_size_) {
      throw usage_error("item " + std::to_string(i) + " outside hash domain [0, " +
                        std::to_string(domain_size_) + ")");
    }
  }

  uint64_t seed_;
  uint32_t independence_;
  uint64_t domain_size_;
  uint64_t range_;
  std::array<uint64_t, max_independence> coefficients_{};
};

/**
 * t-wise independent Rademacher family: the low bit of a t-wise independent
 * field value, mapped to -1 / +1. The field has odd size, so Pr[+1] differs
 * from 1/2 by 1/(2(2^61-1)).
 */
class sign_family {
 public:
  sign_family(uint64_t seed, uint32_t independence, uint64_t domain_size)
      : hash_(seed, independence, domain_size, mersenne61) {}

  int operator()(uint64_t i) const { return (hash_.field_value(i) & 1) ? 1 : -1; }

  uint64_t seed() const { return hash_.seed(); }
  uint32_t independence() const { return hash_.independence(); }
  uint64_t domain_size() const { return hash_.domain_size(); }

 private:
  hash_family hash_;
};

/// Family number `stream_id` of the experiment seeded by `master_seed`.
inline hash_family make_family(uint64_t master_seed, uint64_t stream_id, uint32_t independence,
                               uint64_t domain_size, uint64_t range) {
  return hash_family(derive_seed(master_seed, stream_id), independence, domain_size, range);
}

inline sign_family make_sign_family(uint64_t master_seed, uint64_t stream_id, uint32_t independence,
                                    uint64_t domain_size) {
  return sign_family(derive_seed(master_seed, stream_id), independence, domain_size);
}

} // namespace fpsketch

#endif
