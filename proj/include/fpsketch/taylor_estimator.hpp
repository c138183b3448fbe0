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

#ifndef FPSKETCH_TAYLOR_ESTIMATOR_HPP_
#define FPSKETCH_TAYLOR_ESTIMATOR_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

/**
 * Estimators of psi(mu) = mu^p from independent noisy readings X_l with mean mu.
 *
 * Given an anchor lambda close to mu, the degree-k Taylor polynomial of psi at
 * lambda is evaluated with a distinct reading in every factor:
 *
 *   vartheta = sum_{j=0..k} C(p, j) lambda^(p-j) prod_{l=1..j} (X_l - lambda).
 *
 * Independence makes E[vartheta] the Taylor partial sum at mu, so the bias is
 * the Taylor remainder and vanishes for integral p <= k. The averaged form
 * reuses a pool of s readings across r random k-subsets to cut the variance
 * roughly by s. The geometric-index estimator is exactly unbiased but has a
 * much larger variance; it is kept as a reference.
 */
namespace fpsketch {

/// Generalized binomial coefficient p(p-1)...(p-j+1)/j!.
inline long double gen_binomial(double p, uint32_t j) {
  long double c = 1.0L;
  for (uint32_t i = 0; i < j; ++i) {
    c *= (static_cast<long double>(p) - i) / static_cast<long double>(i + 1);
  }
  return c;
}

inline bool is_integral(double p) { return std::floor(p) == p; }

/// psi(x) = x^p together with its scaled derivatives a_j(lambda) = psi^(j)(lambda)/j!.
class power_function {
 public:
  explicit power_function(double p) : p_(p) {
    if (!(p > 0) || !std::isfinite(p)) throw config_error("power function exponent must be > 0");
  }

  double p() const { return p_; }

  long double operator()(long double x) const { return std::pow(x, static_cast<long double>(p_)); }

  /// Number of nonzero Taylor coefficients among degrees 1..k.
  uint32_t nonzero_terms(uint32_t k) const {
    if (is_integral(p_) && p_ < k) return static_cast<uint32_t>(p_);
    return k;
  }

  long double taylor_coefficient(uint32_t j, long double lambda) const {
    return gen_binomial(p_, j) * std::pow(lambda, static_cast<long double>(p_) - j);
  }

 private:
  double p_;
};

namespace detail {

inline void check_anchor(double lambda) {
  if (!(lambda > 0) || !std::isfinite(lambda)) {
    throw usage_error("Taylor anchor must be finite and > 0");
  }
}

/**
 * Evaluates the degree-k polynomial with prefix products, reading the j-th
 * factor from `reading(j-1)`. Coefficients are advanced by the ratio
 * a_j / a_{j-1} = (p - j + 1) / (j lambda); the loop stops once the remaining
 * coefficients are exactly zero.
 */
template <typename Reading>
long double evaluate_taylor(const power_function& psi, long double lambda, uint32_t k,
                            Reading&& reading) {
  const uint32_t terms = psi.nonzero_terms(k);
  const long double p = psi.p();
  long double coefficient = psi(lambda);
  long double product = 1.0L;
  long double sum = coefficient;
  for (uint32_t j = 1; j <= terms; ++j) {
    coefficient *= (p - (j - 1)) / (static_cast<long double>(j) * lambda);
    product *= static_cast<long double>(reading(j - 1)) - lambda;
    sum += coefficient * product;
  }
  return sum;
}

} // namespace detail

/// Single Taylor estimator on exactly k readings.
inline double taylor_estimate(const power_function& psi, double lambda, uint32_t k,
                              std::span<const double> samples) {
  detail::check_anchor(lambda);
  if (samples.size() != k) {
    throw usage_error("Taylor estimate of degree " + std::to_string(k) + " needs exactly " +
                      std::to_string(k) + " samples, got " + std::to_string(samples.size()));
  }
  return static_cast<double>(
      detail::evaluate_taylor(psi, lambda, k, [&](uint32_t l) { return samples[l]; }));
}

/// E[vartheta] for i.i.d. readings with mean mu: the Taylor partial sum at mu.
inline double analytic_mean(const power_function& psi, double lambda, double mu, uint32_t k) {
  detail::check_anchor(lambda);
  if (!(mu > 0)) throw usage_error("analytic mean needs mu > 0");
  const long double delta = static_cast<long double>(mu) - lambda;
  long double sum = 0.0L;
  long double power = 1.0L;
  for (uint32_t j = 0; j <= k; ++j) {
    sum += psi.taylor_coefficient(j, lambda) * power;
    power *= delta;
  }
  return static_cast<double>(sum);
}

/**
 * Conservative bound on |analytic_mean - mu^p|: the Lagrange remainder
 * |C(p,k+1)| lambda'^(p-k-1) |mu - lambda|^(k+1) with lambda' replaced by the
 * endpoint of [min(mu,lambda), max(mu,lambda)] that maximizes the power.
 */
inline double taylor_remainder_bound(double p, double lambda, double mu, uint32_t k) {
  const long double exponent = static_cast<long double>(p) - k - 1;
  const long double endpoint = exponent >= 0 ? std::max(mu, lambda) : std::min(mu, lambda);
  return static_cast<double>(std::fabs(gen_binomial(p, k + 1)) * std::pow(endpoint, exponent) *
                             std::pow(std::fabs(static_cast<long double>(mu) - lambda),
                                      static_cast<long double>(k + 1)));
}

/// How the readings of each averaged group are ordered before evaluation.
enum class subset_order {
  random,    ///< k distinct pool indices in uniformly random order
  ascending  ///< the same k-subset sorted by pool index
};

struct taylor_config {
  double p = 3.0;
  double anchor = 1.0;
  uint32_t degree = 0;  ///< k
  uint32_t groups = 1;  ///< r
  subset_order order = subset_order::random;
};

/**
 * Averaged Taylor estimator: the mean of r Taylor estimators, each evaluated
 * on k distinct readings drawn without replacement from the pool.
 *
 * With subset_order::random group j reads X_{tau_j(1)}, ..., X_{tau_j(k)} for a
 * uniformly random injection tau_j, drawn by a partial Fisher-Yates shuffle of
 * a persistent index permutation (a partial shuffle of any fixed arrangement
 * is uniform, so groups stay independent). subset_order::ascending reads the
 * same subset sorted by index, drawn by sequential selection sampling. Both
 * stop drawing once the remaining coefficients are zero.
 */
inline double averaged_taylor(const taylor_config& cfg, std::span<const double> pool, uint64_t seed) {
  detail::check_anchor(cfg.anchor);
  const uint32_t k = cfg.degree;
  if (pool.size() < k) {
    throw usage_error("averaged Taylor estimate needs a pool of at least k = " + std::to_string(k) +
                      " samples, got " + std::to_string(pool.size()));
  }
  if (cfg.groups == 0) throw usage_error("averaged Taylor estimate needs r >= 1 groups");
  const power_function psi(cfg.p);
  const uint32_t terms = psi.nonzero_terms(k);
  const auto s = static_cast<uint64_t>(pool.size());
  rng gen(seed);
  std::vector<uint32_t> perm(pool.size());
  std::iota(perm.begin(), perm.end(), 0u);
  std::vector<uint32_t> chosen(terms);

  long double total = 0.0L;
  for (uint32_t group = 0; group < cfg.groups; ++group) {
    if (cfg.order == subset_order::random) {
      for (uint32_t v = 0; v < terms; ++v) {
        const uint64_t j = v + gen.uniform_below(s - v);
        std::swap(perm[v], perm[j]);
        chosen[v] = perm[v];
      }
    } else {
      uint32_t selected = 0;
      for (uint64_t t = 0; selected < terms; ++t) {
        if (gen.uniform_below(s - t) < k - selected) chosen[selected++] = static_cast<uint32_t>(t);
      }
    }
    total += detail::evaluate_taylor(psi, cfg.anchor, k,
                                     [&](uint32_t l) { return pool[chosen[l]]; });
  }
  return static_cast<double>(total / cfg.groups);
}

/**
 * Geometric-index unbiased estimator: draws N with Pr[N = j] = 2^-(j+1)
 * (capped at n_cap), consumes N readings from `source` and returns
 * 2^(N+1) C(p,N) lambda^(p-N) prod_{l<=N} (X_l - lambda).
 */
template <typename Source>
  requires std::invocable<Source&>
double singh_estimate(const power_function& psi, double lambda, Source&& source, uint64_t seed,
                      unsigned n_cap = 64) {
  detail::check_anchor(lambda);
  rng gen(seed);
  const unsigned n = std::min(gen.geometric_half(), n_cap);
  long double product = 1.0L;
  for (unsigned l = 0; l < n; ++l) product *= static_cast<long double>(source()) - lambda;
  return static_cast<double>(std::ldexp(1.0L, static_cast<int>(n) + 1) *
                             psi.taylor_coefficient(n, lambda) * product);
}

/// Same, reading from a finite buffer; running out of readings is a usage error.
inline double singh_estimate(const power_function& psi, double lambda,
                             std::span<const double> samples, uint64_t seed, unsigned n_cap = 64) {
  size_t next = 0;
  return singh_estimate(
      psi, lambda,
      [&]() {
        if (next >= samples.size()) throw usage_error("sample source exhausted");
        return samples[next++];
      },
      seed, n_cap);
}

/// Bias and variance bounds for psi = x^p with |lambda - f| <= sigma and f > 9 p sigma.
struct taylor_bounds {
  double bias_bound = 0.0;
  double var_single = 0.0;
  /// Present when the averaged bound applies (k >= 144, s >= 16k).
  std::optional<double> var_avg;
  /// epsilon implied by k >= 4 ceil(log2(1/epsilon)) + 8.
  double epsilon = 1.0;
};

inline taylor_bounds taylor_error_bounds(double p, double f, double sigma, uint32_t k, uint32_t s,
                                       uint32_t r) {
  if (!(p > 2)) throw bound_not_applicable("bounds are stated for p > 2");
  if (!(sigma >= 0) || !(f > 9.0 * p * sigma)) {
    throw bound_not_applicable("bounds need f > 9 p sigma (f = " + std::to_string(f) +
                               ", sigma = " + std::to_string(sigma) + ")");
  }
  taylor_bounds out;
  out.epsilon = std::exp2(-(static_cast<double>(k) - 8.0) / 4.0);
  const bool exact = is_integral(p) && p <= k;
  if (!exact && k < 8) {
    throw bound_not_applicable("bias bound needs k >= 8 unless p is integral and k >= p");
  }
  out.bias_bound = exact ? 0.0 : std::pow(12.0, -8.0) * std::pow(out.epsilon, 12.0) * std::pow(f, p);
  const double scale = p * p * std::pow(f, 2.0 * p - 2.0) * sigma * sigma;
  out.var_single = 3.0 * scale;
  if (k >= 144 && s >= 16ull * k && r >= 1) {
    out.var_avg = scale * (3.0 / r + (1.0 + std::pow(72.0, -10.0)) / s);
  }
  return out;
}

/// (sum_{1<=j<=k} |a_j(lambda)| eta^j)^2 with eta^2 = sigma^2 + (mu - lambda)^2.
inline double taylor_variance_bound(double p, double lambda, double mu, double sigma, uint32_t k) {
  const power_function psi(p);
  const long double eta = std::sqrt(static_cast<long double>(sigma) * sigma +
                                    (static_cast<long double>(mu) - lambda) * (mu - lambda));
  long double sum = 0.0L;
  long double power = 1.0L;
  for (uint32_t j = 1; j <= k; ++j) {
    power *= eta;
    sum += std::fabs(psi.taylor_coefficient(j, lambda)) * power;
  }
  return static_cast<double>(sum * sum);
}

} // namespace fpsketch

#endif
