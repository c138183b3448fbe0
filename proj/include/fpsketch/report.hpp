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

#ifndef FPSKETCH_REPORT_HPP_
#define FPSKETCH_REPORT_HPP_

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "fp_sketch.hpp"
#include "oracle.hpp"

namespace fpsketch {

/// Shortest-round-trip style text for doubles (17 significant digits).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Line-oriented "key: value" report.
class kv_writer {
 public:
  explicit kv_writer(std::ostream& out) : out_(out) {}

  kv_writer& put(const std::string& key, const std::string& value) {
    out_ << key << ": " << value << '\n';
    return *this;
  }
  kv_writer& put(const std::string& key, const char* value) { return put(key, std::string(value)); }
  kv_writer& put(const std::string& key, double value) { return put(key, format_double(value)); }
  kv_writer& put(const std::string& key, bool value) { return put(key, value ? "true" : "false"); }
  template <typename Int>
    requires std::is_integral_v<Int>
  kv_writer& put(const std::string& key, Int value) {
    return put(key, std::to_string(value));
  }

 private:
  std::ostream& out_;
};

inline nlohmann::ordered_json to_json(const fp_config& cfg) {
  nlohmann::ordered_json j;
  j["n"] = cfg.n;
  j["p"] = cfg.p;
  j["epsilon"] = cfg.epsilon;
  j["master_seed"] = cfg.master_seed;
  j["scale_b"] = cfg.scales.b;
  j["scale_s"] = cfg.scales.s;
  j["scale_k"] = cfg.scales.k;
  j["scale_r"] = cfg.scales.r;
  j["B"] = cfg.B;
  j["C"] = cfg.C;
  j["s"] = cfg.s;
  j["k"] = cfg.k;
  j["r"] = cfg.r;
  j["R"] = cfg.R;
  j["A"] = cfg.A;
  j["E_y2"] = cfg.ey2;
  j["q"] = cfg.q;
  j["f2_width"] = cfg.f2_width;
  j["f2_groups"] = cfg.f2_groups;
  j["total_counters"] = cfg.total_counters();
  j["memory_bytes"] = cfg.memory_bytes();
  return j;
}

inline nlohmann::ordered_json to_json(const item_trace& it) {
  nlohmann::ordered_json j;
  j["item"] = it.item;
  j["g_hat"] = it.g_hat;
  j["sign"] = it.sign;
  j["y"] = it.y;
  j["f_hat"] = it.f_hat;
  j["level"] = it.level;
  j["threshold"] = it.threshold;
  j["rho"] = it.rho;
  j["q_size"] = it.q_size;
  j["in_h"] = it.in_h;
  j["above_cutoff"] = it.above_cutoff;
  j["theta_bar"] = it.theta_bar;
  j["included"] = it.included;
  if (!it.note.empty()) j["note"] = it.note;
  return j;
}

inline nlohmann::ordered_json to_json(const query_trace& tr) {
  nlohmann::ordered_json j;
  j["f2_hat"] = tr.f2_hat;
  j["t_hat"] = tr.t_hat;
  j["delta"] = tr.delta;
  j["cutoff"] = tr.cutoff;
  j["h_g"] = nlohmann::ordered_json::array();
  for (const auto& it : tr.items) j["h_g"].push_back(to_json(it));
  j["h"] = tr.h;
  j["theta"] = tr.theta;
  j["nc_failed"] = tr.nc_failed;
  return j;
}

inline nlohmann::ordered_json to_json(const trial_summary& s) {
  nlohmann::ordered_json j;
  j["trials"] = s.trials;
  j["successes"] = s.successes;
  j["mean"] = s.mean;
  j["variance"] = s.variance;
  j["nc_failures"] = s.nc_failures;
  return j;
}

} // namespace fpsketch

#endif
