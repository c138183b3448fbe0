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

#ifndef FPSKETCH_STREAM_IO_HPP_
#define FPSKETCH_STREAM_IO_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "stream.hpp"

namespace fpsketch {

/**
 * Text stream file:
 *
 *   # fpsketch stream v1 n=<n> M=<max |v|> m=<updates>
 *   # items are 0-based
 *   <i> <v>
 *   ...
 *
 * Lines starting with '#' are comments. Items lie in [0, n) and |v| <= M.
 */
struct stream_file {
  uint64_t n = 0;
  uint64_t max_update = 0;
  std::vector<stream_update> updates;
};

inline void write_stream(std::ostream& out, const stream_file& sf) {
  out << "# fpsketch stream v1 n=" << sf.n << " M=" << sf.max_update << " m=" << sf.updates.size() << '\n';
  out << "# items are 0-based\n";
  for (const auto& u : sf.updates) out << u.item << ' ' << u.delta << '\n';
}

inline void write_stream_file(const std::string& path, const stream_file& sf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  write_stream(out, sf);
  out.flush();
  if (!out) throw io_error("write to '" + path + "' failed");
}

namespace detail {

template <typename T>
bool parse_number(std::string_view text, T& value) {
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::string_view next_token(std::string_view& rest) {
  const size_t start = rest.find_first_not_of(" \t\r");
  if (start == std::string_view::npos) {
    rest = {};
    return {};
  }
  rest.remove_prefix(start);
  const size_t stop = rest.find_first_of(" \t\r");
  const std::string_view tok = rest.substr(0, stop);
  rest.remove_prefix(stop == std::string_view::npos ? rest.size() : stop);
  return tok;
}

/// Reads "key=value" from a header comment.
inline std::optional<uint64_t> header_field(std::string_view line, std::string_view key) {
  std::string_view rest = line;
  while (!rest.empty()) {
    const std::string_view tok = next_token(rest);
    if (tok.size() > key.size() && tok.substr(0, key.size()) == key && tok[key.size()] == '=') {
      uint64_t v = 0;
      if (parse_number(tok.substr(key.size() + 1), v)) return v;
    }
  }
  return std::nullopt;
}

} // namespace detail

/**
 * Parses a stream. n and M come from the header unless given; a record with
 * i >= n, |v| > M, or anything other than two integers fails with its line
 * number.
 */
inline stream_file read_stream(std::istream& in, std::optional<uint64_t> n = std::nullopt,
                               std::optional<uint64_t> max_update = std::nullopt) {
  stream_file sf;
  std::string line;
  uint64_t line_no = 0;
  bool saw_header = false;
  auto fail = [&](const std::string& why) {
    throw io_error("stream line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (!view.empty() && view.front() == '#') {
      if (!saw_header && view.find("fpsketch stream") != std::string_view::npos) {
        saw_header = true;
        if (!n) n = detail::header_field(view, "n");
        if (!max_update) max_update = detail::header_field(view, "M");
      }
      continue;
    }
    std::string_view rest = view;
    const std::string_view item_tok = detail::next_token(rest);
    if (item_tok.empty()) continue;
    const std::string_view value_tok = detail::next_token(rest);
    if (value_tok.empty() || !detail::next_token(rest).empty()) fail("expected \"<item> <value>\"");
    stream_update u{};
    if (!detail::parse_number(item_tok, u.item)) fail("bad item '" + std::string(item_tok) + "'");
    if (!detail::parse_number(value_tok, u.delta)) fail("bad value '" + std::string(value_tok) + "'");
    if (!n) fail("domain size n unknown (no header and none given)");
    if (u.item >= *n) fail("item " + std::to_string(u.item) + " outside [0, " + std::to_string(*n) + ")");
    if (max_update) {
      const uint64_t mag = u.delta < 0 ? uint64_t(0) - static_cast<uint64_t>(u.delta) : static_cast<uint64_t>(u.delta);
      if (mag > *max_update) fail("|value| exceeds M = " + std::to_string(*max_update));
    }
    sf.updates.push_back(u);
  }
  if (in.bad()) throw io_error("error while reading stream");
  if (!n) throw io_error("domain size n unknown (no header and none given)");
  sf.n = *n;
  sf.max_update = max_update.value_or(0);
  return sf;
}

inline stream_file read_stream_file(const std::string& path, std::optional<uint64_t> n = std::nullopt,
                                    std::optional<uint64_t> max_update = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  return read_stream(in, n, max_update);
}

} // namespace fpsketch

#endif
