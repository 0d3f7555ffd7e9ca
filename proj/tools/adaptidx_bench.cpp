/*
 * Copyright 2026 The adaptidx Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaptidx/bench.hpp"
#include "adaptidx/simulator.hpp"

namespace
{
using adaptidx::bench::BenchConfig;
using adaptidx::bench::SampleRow;

void add_workload_options(CLI::App& cmd, BenchConfig& config)
{
  cmd.add_option("--records", config.records, "Number of records")->check(CLI::PositiveNumber);
  cmd.add_option("--seed", config.seed, "Data generator seed");
  cmd.add_option("--theta", config.thetas, "Crack threshold; repeat for several policies")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()).description(">= 2"));
  cmd.add_option_function<std::string>(
         "--mode",
         [&config](const std::string& v) {
           config.mode = v == "sync" ? adaptidx::bench::Mode::kSync : adaptidx::bench::Mode::kConcurrent;
         },
         "Reorganization mode")
      ->check(CLI::IsMember({"sync", "concurrent"}, CLI::ignore_case));
  cmd.add_option_function<std::string>(
         "--workload",
         [&config](const std::string& v) {
           config.workload = v == "point" ? adaptidx::bench::Workload::kPoint : adaptidx::bench::Workload::kRange;
         },
         "Query workload")
      ->check(CLI::IsMember({"point", "range"}, CLI::ignore_case));
  cmd.add_option("--queries", config.queries_per_sample, "Queries per sample (0: workload default)");
  cmd.add_option("--range-span", config.range_span, "Records visited per range scan")->check(CLI::PositiveNumber);
  cmd.add_option("--sample-every", config.sample_every, "Transforms between synchronous samples (0: auto)");
  cmd.add_option("--sample-interval", config.sample_interval_s, "Seconds between concurrent samples")
      ->check(CLI::PositiveNumber);
  cmd.add_flag("--no-merge", [&config](std::int64_t) { config.merge = false; }, "Use Crack-Sort without merging");
}

void emit(const std::string& path, const std::vector<SampleRow>& rows)
{
  if (path.empty() || path == "-") {
    adaptidx::bench::write_csv(std::cout, rows);
    return;
  }
  std::ofstream out{path};
  if (!out) throw std::runtime_error{"cannot open " + path + " for writing"};
  adaptidx::bench::write_csv(out, rows);
  if (!out) throw std::runtime_error{"failed writing " + path};
}

std::vector<SampleRow> simulated_rows(const BenchConfig& config, const std::string& model_path)
{
  const adaptidx::CostModel model = adaptidx::load_cost_model(model_path);
  std::vector<SampleRow> rows;
  for (std::size_t theta : config.thetas) {
    auto sim = adaptidx::bench::run_simulated(config, theta, model);
    rows.insert(rows.end(), sim.begin(), sim.end());
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Adaptive index benchmark driver"};
  app.require_subcommand(1);
  app.failure_message([](const CLI::App*, const CLI::Error& e) { return "adaptidx_bench: " + std::string{e.what()} + "\n"; });

  adaptidx::bench::MicrobenchConfig micro;
  std::string micro_out;
  std::string micro_raw;
  auto* microbench = app.add_subcommand("microbench", "Measure operation costs and fit a cost model");
  microbench->add_option("--min-log2", micro.min_log2, "Smallest size as a power of two")->check(CLI::Range(1, 30));
  microbench->add_option("--max-log2", micro.max_log2, "Largest size as a power of two")->check(CLI::Range(1, 30));
  microbench->add_option("--step-log2", micro.log2_step, "Power-of-two increment")->check(CLI::PositiveNumber);
  microbench->add_option("--seed", micro.seed, "Random seed");
  microbench->add_option("--out", micro_out, "Cost model file to write")->required();
  microbench->add_option("--raw", micro_raw, "Also write raw measurements as CSV");

  BenchConfig timeline_cfg;
  std::string timeline_out;
  std::string timeline_model;
  bool timeline_sim = false;
  auto* timeline = app.add_subcommand("timeline", "Latency over time for one policy");
  add_workload_options(*timeline, timeline_cfg);
  timeline->add_option("--out", timeline_out, "CSV output path ('-' for stdout)");
  timeline->add_option("--model", timeline_model, "Cost model file for --sim")->check(CLI::ExistingFile);
  timeline->add_flag("--sim", timeline_sim, "Append the simulated timeline");

  BenchConfig compare_cfg;
  compare_cfg.thetas = {100, 1000, 10000};
  std::string compare_out;
  std::string compare_model;
  bool compare_sim = false;
  auto* compare = app.add_subcommand("compare", "Latency over time for several policies");
  add_workload_options(*compare, compare_cfg);
  compare->add_option("--out", compare_out, "CSV output path ('-' for stdout)");
  compare->add_option("--model", compare_model, "Cost model file for --sim")->check(CLI::ExistingFile);
  compare->add_flag("--sim", compare_sim, "Append simulated timelines");

  BenchConfig simulate_cfg;
  std::string simulate_out;
  std::string simulate_model;
  auto* simulate = app.add_subcommand("simulate", "Predicted timeline from a cost model");
  add_workload_options(*simulate, simulate_cfg);
  simulate->add_option("--model", simulate_model, "Cost model file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", simulate_out, "CSV output path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*microbench) {
      if (micro.max_log2 < micro.min_log2) throw std::invalid_argument{"--max-log2 must be >= --min-log2"};
      const auto measurements = adaptidx::bench::run_microbench(micro);
      if (!micro_raw.empty()) {
        std::ofstream raw{micro_raw};
        if (!raw) throw std::runtime_error{"cannot open " + micro_raw + " for writing"};
        raw << "function,n,nanoseconds\n";
        for (const auto& m : measurements) raw << adaptidx::to_string(m.function) << ',' << m.n << ',' << m.nanoseconds << '\n';
      }
      const adaptidx::CostModel model = adaptidx::fit_cost_model(measurements);
      adaptidx::save_cost_model(micro_out, model);
      adaptidx::write_cost_model(std::cout, model);
    } else if (*timeline) {
      if (timeline_cfg.thetas.size() != 1) throw std::invalid_argument{"timeline takes exactly one --theta"};
      if (timeline_sim && timeline_model.empty()) throw std::invalid_argument{"--sim requires --model"};
      timeline_cfg.validate();
      const auto data = adaptidx::bench::generate_data(timeline_cfg.records, timeline_cfg.seed);
      auto rows = adaptidx::bench::run_timeline(timeline_cfg, timeline_cfg.thetas.front(), data);
      if (timeline_sim) {
        auto sim = simulated_rows(timeline_cfg, timeline_model);
        rows.insert(rows.end(), sim.begin(), sim.end());
      }
      emit(timeline_out, rows);
    } else if (*compare) {
      if (compare_sim && compare_model.empty()) throw std::invalid_argument{"--sim requires --model"};
      auto rows = adaptidx::bench::run_compare(compare_cfg);
      if (compare_sim) {
        auto sim = simulated_rows(compare_cfg, compare_model);
        rows.insert(rows.end(), sim.begin(), sim.end());
      }
      emit(compare_out, rows);
    } else if (*simulate) {
      emit(simulate_out, simulated_rows(simulate_cfg, simulate_model));
    }
  } catch (const std::exception& e) {
    std::cerr << "adaptidx_bench: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
