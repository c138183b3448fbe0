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

#ifndef FPSKETCH_STREAM_HPP_
#define FPSKETCH_STREAM_HPP_

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace fpsketch {

/// One stream record (i, v): item index in [0, n) and signed increment.
struct stream_update {
  uint64_t item;
  int64_t delta;

  bool operator==(const stream_update&) const = default;
};

/**
 * Sums the updates of every item: one (i, f_i) record per item with f_i != 0,
 * ascending by item. All sketches here are linear over integers, so ingesting
 * the aggregate leaves them bit-identical to ingesting the raw stream.
 */
inline std::vector<stream_update> aggregate(std::span<const stream_update> updates) {
  std::vector<stream_update> sorted(updates.begin(), updates.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const stream_update& a, const stream_update& b) { return a.item < b.item; });
  std::vector<stream_update> out;
  for (const auto& u : sorted) {
    if (!out.empty() && out.back().item == u.item) {
      out.back().delta += u.delta;
    } else {
      out.push_back(u);
    }
  }
  std::erase_if(out, [](const stream_update& u) { return u.delta == 0; });
  return out;
}

} // namespace fpsketch

#endif
