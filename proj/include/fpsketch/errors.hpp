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

#ifndef FPSKETCH_ERRORS_HPP_
#define FPSKETCH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace fpsketch {

/// Rejected parameters: bad (n, p, epsilon), unsupported independence, zero range, ...
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A call violated a precondition: index out of domain, wrong sample count, ...
class usage_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A bound formula was asked for outside the regime where it holds.
class bound_not_applicable : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A fixed-point counter would have wrapped. The sizing contract was violated.
class counter_overflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Malformed input file or unreadable/unwritable path.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

} // namespace fpsketch

#endif
