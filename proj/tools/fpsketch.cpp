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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_sketch_flags(CLI::App* app, fpsketch::cli::sketch_options& o) {
  app->add_option("--p", o.p, "moment exponent p > 2")->capture_default_str();
  app->add_option("--epsilon", o.epsilon, "target relative error")->capture_default_str();
  app->add_option("--seed", o.seed, "master seed")->capture_default_str();
  app->add_option("--copies", o.copies, "independent copies for the median (odd)")->capture_default_str();
  app->add_option("--scale-b", o.scales.b, "multiplier on B")->capture_default_str();
  app->add_option("--scale-s", o.scales.s, "multiplier on s")->capture_default_str();
  app->add_option("--scale-k", o.scales.k, "multiplier on k")->capture_default_str();
  app->add_option("--scale-r", o.scales.r, "multiplier on r")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
  using namespace fpsketch::cli;
  CLI::App app{"fpsketch: streaming F_p estimation for p > 2"};
  app.require_subcommand(1);

  generate_options gen;
  auto* g = app.add_subcommand("generate", "write a synthetic stream file");
  g->add_option("--dist", gen.dist, "zipf, uniform or single-heavy")->capture_default_str();
  g->add_option("--alpha", gen.alpha, "zipf exponent")->capture_default_str();
  g->add_option("--n", gen.n, "domain size")->required();
  g->add_option("--m", gen.m, "number of updates")->required();
  g->add_option("--max-update", gen.max_update, "increments are uniform on [1, M]")->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("--out", gen.out, "output stream file")->required();

  estimate_options est;
  auto* e = app.add_subcommand("estimate", "estimate F_p of a stream file");
  e->add_option("--stream", est.stream, "input stream file")->required();
  e->add_option("--n", est.n, "domain size (default: from the file header)");
  add_sketch_flags(e, est.sketch);
  e->add_flag("--with-oracle", est.with_oracle, "also report exact F_p and the relative error");
  e->add_flag("--exact", est.exact, "skip the sketch and report exact F_p");
  e->add_option("--out", est.out, "write a JSON dump with the config and query trace");

  benchmark_options bench;
  auto* b = app.add_subcommand("benchmark", "Monte-Carlo accuracy over many master seeds");
  b->add_option("--stream", bench.stream, "input stream file (default: generate one)");
  b->add_option("--n", bench.n, "domain size");
  b->add_option("--dist", bench.dist, "generator distribution without --stream")->capture_default_str();
  b->add_option("--alpha", bench.alpha, "zipf exponent")->capture_default_str();
  b->add_option("--m", bench.m, "generated updates")->capture_default_str();
  b->add_option("--max-update", bench.max_update, "generated increments are uniform on [1, M]")
      ->capture_default_str();
  add_sketch_flags(b, bench.sketch);
  b->add_option("--trials", bench.trials, "number of master seeds")->capture_default_str();
  b->add_option("--out", bench.out, "write a JSON dump with per-trial estimates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? ok : usage;
  }

  if (g->parsed()) return cmd_generate(gen, std::cout, std::cerr);
  if (e->parsed()) return cmd_estimate(est, std::cout, std::cerr);
  return cmd_benchmark(bench, std::cout, std::cerr);
}
