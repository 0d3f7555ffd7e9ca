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

#ifndef ADAPTIDX_BENCH_HPP
#define ADAPTIDX_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "adaptidx/cog.hpp"
#include "adaptidx/simulator.hpp"

namespace adaptidx::bench
{
enum class Mode : std::uint8_t { kSync, kConcurrent };
enum class Workload : std::uint8_t { kPoint, kRange };

struct BenchConfig {
  std::size_t records = 1'000'000;
  std::uint64_t seed = 42;
  std::vector<std::size_t> thetas{1000};
  Mode mode = Mode::kSync;
  Workload workload = Workload::kPoint;
  std::size_t queries_per_sample = 0;  // 0: 1000 point lookups or 50 range scans
  std::size_t range_span = 1000;       // records visited per range scan
  std::size_t sample_every = 0;        // transforms per synchronous sample; 0: about 50 samples
  double sample_interval_s = 1.0;      // concurrent mode sampling period
  bool merge = true;                   // false: Crack-Sort without the merge phase

  std::size_t queries() const;
  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

struct SampleRow {
  double elapsed_s = 0.0;
  std::uint64_t transforms = 0;
  double latency_ns = 0.0;  // mean
  std::string policy;
  double p50_ns = 0.0;
  double p99_ns = 0.0;
};

inline constexpr std::string_view kCsvHeader = "elapsed_s,transforms,latency_ns,policy,p50_ns,p99_ns";

void write_csv(std::ostream& out, const std::vector<SampleRow>& rows);
/// Throws std::runtime_error with the offending line number.
std::vector<SampleRow> read_csv(std::istream& in);

/// `n` records with keys drawn uniformly from the full key range; values are positions.
/// Same seed, same sequence.
std::vector<Record> generate_data(std::size_t n, std::uint64_t seed);

std::string policy_label(std::size_t theta, bool merge);

/**
 * Performance over time for one threshold. Synchronous mode alternates batches of
 * transforms (worker paused, reorganization time accumulated into elapsed_s) with latency
 * samples. Concurrent mode lets the worker run and samples on a wall-clock period. Both
 * end with one sample after convergence. Every sample also checks 100 random lookups
 * against the source data and throws std::runtime_error on a mismatch.
 */
std::vector<SampleRow> run_timeline(const BenchConfig& config, std::size_t theta,
                                    const std::vector<Record>& data);

/// One timeline per threshold over the same generated data.
std::vector<SampleRow> run_compare(const BenchConfig& config);

/// Predicted timeline in the same schema, policy label suffixed "-sim".
std::vector<SampleRow> run_simulated(const BenchConfig& config, std::size_t theta, const CostModel& model);

/// Transforms per synchronous sample when the config leaves it open.
std::size_t default_sample_every(const BenchConfig& config, std::size_t theta);

struct MicrobenchConfig {
  unsigned min_log2 = 10;
  unsigned max_log2 = 24;
  unsigned log2_step = 2;
  std::uint64_t seed = 7;
};

/// Times Array/Sorted gets, BinTree descent, Crack and Sort across sizes.
std::vector<Measurement> run_microbench(const MicrobenchConfig& config);

}  // namespace adaptidx::bench

#endif  // ADAPTIDX_BENCH_HPP
