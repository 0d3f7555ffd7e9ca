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

#include "adaptidx/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "adaptidx/index.hpp"
#include "adaptidx/policy.hpp"

namespace adaptidx::bench
{
namespace
{
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double nanos_between(Clock::time_point a, Clock::time_point b)
{
  return std::chrono::duration<double, std::nano>(b - a).count();
}

struct LatencyStats {
  double mean = 0.0;
  double p50 = 0.0;
  double p99 = 0.0;
};

LatencyStats summarize(std::vector<double> samples)
{
  LatencyStats out;
  if (samples.empty()) return out;
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  auto rank = [&samples](double q) {
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(samples.size() - 1) + 0.5);
    return samples[std::min(idx, samples.size() - 1)];
  };
  out.p50 = rank(0.50);
  out.p99 = rank(0.99);
  return out;
}

// Sink that keeps the optimizer from discarding lookups.
volatile std::int64_t g_sink = 0;

LatencyStats measure(const Index& index, const BenchConfig& config, std::mt19937_64& rng)
{
  std::vector<double> samples;
  const std::size_t queries = config.queries();
  samples.reserve(queries);
  for (std::size_t q = 0; q < queries; ++q) {
    const auto key = static_cast<Key>(rng());
    if (config.workload == Workload::kPoint) {
      const auto t0 = Clock::now();
      const auto hit = index.get(key);
      const auto t1 = Clock::now();
      if (hit) g_sink = g_sink + hit->value;
      samples.push_back(nanos_between(t0, t1));
    } else {
      const auto t0 = Clock::now();
      auto it = index.ordered_iterator(key);
      std::int64_t acc = 0;
      for (std::size_t i = 0; i < config.range_span && it.valid(); ++i, it.step()) acc += it.get().value;
      const auto t1 = Clock::now();
      g_sink = g_sink + acc;
      samples.push_back(nanos_between(t0, t1));
    }
  }
  return summarize(std::move(samples));
}

// Validates random lookups against the source records (sorted by key, value).
class SpotCheck
{
 public:
  explicit SpotCheck(const std::vector<Record>& data) : sorted_{data}
  {
    std::sort(sorted_.begin(), sorted_.end(), [](const Record& a, const Record& b) {
      return a.key != b.key ? a.key < b.key : a.value < b.value;
    });
  }

  void run(const Index& index, std::mt19937_64& rng) const
  {
    constexpr int kLookups = 100;
    for (int i = 0; i < kLookups; ++i) {
      const bool present = (i % 2 == 0) && !sorted_.empty();
      const Key key = present ? sorted_[rng() % sorted_.size()].key : static_cast<Key>(rng());
      const auto [lo, hi] = std::equal_range(sorted_.begin(), sorted_.end(), key, KeyLess{});
      const auto hit = index.get(key);
      if (lo == hi) {
        if (hit) throw std::runtime_error{"spot check: found absent key " + std::to_string(key)};
        continue;
      }
      if (!hit || std::find(lo, hi, *hit) == hi) {
        throw std::runtime_error{"spot check: wrong result for key " + std::to_string(key)};
      }
    }
  }

 private:
  std::vector<Record> sorted_;
};

ScoringFunction policy_for(std::size_t theta, bool merge)
{
  return merge ? score_crack_sort_merge(theta) : score_crack_sort(theta);
}
}  // namespace

std::size_t BenchConfig::queries() const
{
  if (queries_per_sample != 0) return queries_per_sample;
  return workload == Workload::kPoint ? 1000 : 50;
}

void BenchConfig::validate() const
{
  if (records < 1) throw std::invalid_argument{"--records must be at least 1"};
  if (thetas.empty()) throw std::invalid_argument{"at least one --theta is required"};
  for (std::size_t t : thetas) {
    if (t < 2) throw std::invalid_argument{"--theta must be at least 2"};
  }
  if (range_span < 1) throw std::invalid_argument{"--range-span must be at least 1"};
  if (!(sample_interval_s > 0.0)) throw std::invalid_argument{"--sample-interval must be positive"};
}

void write_csv(std::ostream& out, const std::vector<SampleRow>& rows)
{
  out << kCsvHeader << '\n';
  const auto old_precision = out.precision(9);
  for (const auto& r : rows) {
    out << r.elapsed_s << ',' << r.transforms << ',' << r.latency_ns << ',' << r.policy << ',' << r.p50_ns << ','
        << r.p99_ns << '\n';
  }
  out.precision(old_precision);
}

std::vector<SampleRow> read_csv(std::istream& in)
{
  std::vector<SampleRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error{"line 1: unexpected header"};
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss{line};
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 6) throw std::runtime_error{"line " + std::to_string(line_no) + ": expected 6 fields"};
    try {
      SampleRow r;
      r.elapsed_s = std::stod(fields[0]);
      r.transforms = std::stoull(fields[1]);
      r.latency_ns = std::stod(fields[2]);
      r.policy = fields[3];
      r.p50_ns = std::stod(fields[4]);
      r.p99_ns = std::stod(fields[5]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error{"line " + std::to_string(line_no) + ": malformed number"};
    }
  }
  return rows;
}

std::vector<Record> generate_data(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng{seed};
  std::vector<Record> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {static_cast<Key>(rng()), static_cast<Value>(i)};
  return out;
}

std::string policy_label(std::size_t theta, bool merge)
{
  return "theta=" + std::to_string(theta) + (merge ? "" : "-nomerge");
}

std::size_t default_sample_every(const BenchConfig& config, std::size_t theta)
{
  if (config.sample_every != 0) return config.sample_every;
  // Step count from a unit-cost simulation of the same policy.
  CostModel unit;
  unit.nu.a = unit.delta.a = unit.alpha.a = unit.beta.a = 1.0;
  const auto family = config.merge ? light_score_crack_sort_merge(theta) : light_score_crack_sort(theta);
  const auto sim = simulate(*light_array(config.records), family, unit);
  constexpr std::size_t kTargetSamples = 50;
  return std::max<std::size_t>(1, (sim.steps.size() + kTargetSamples - 1) / kTargetSamples);
}

std::vector<SampleRow> run_timeline(const BenchConfig& config, std::size_t theta, const std::vector<Record>& data)
{
  config.validate();
  Index index{policy_for(theta, config.merge), data};
  const SpotCheck check{data};
  std::mt19937_64 rng{config.seed ^ 0x9e3779b97f4a7c15ULL};
  const std::string label = policy_label(theta, config.merge);
  std::vector<SampleRow> rows;

  auto sample = [&](double elapsed) {
    check.run(index, rng);
    const LatencyStats stats = measure(index, config, rng);
    rows.push_back({elapsed, index.transforms_applied(), stats.mean, label, stats.p50, stats.p99});
  };

  if (config.mode == Mode::kSync) {
    const std::size_t batch = default_sample_every(config, theta);
    double reorganizing = 0.0;
    sample(0.0);
    while (!index.converged()) {
      const auto t0 = Clock::now();
      const std::size_t applied = index.optimize(batch);
      reorganizing += seconds_since(t0);
      if (applied == 0) break;
      sample(reorganizing);
    }
    return rows;
  }

  const auto start = Clock::now();
  index.start_worker();
  const auto period = std::chrono::duration<double>(config.sample_interval_s);
  auto next = start;
  while (true) {
    const bool done = index.converged();
    sample(seconds_since(start));
    if (done) break;
    next += std::chrono::duration_cast<Clock::duration>(period);
    while (Clock::now() < next && !index.converged()) std::this_thread::sleep_for(std::chrono::milliseconds{2});
  }
  index.stop_worker();
  return rows;
}

std::vector<SampleRow> run_compare(const BenchConfig& config)
{
  config.validate();
  const auto data = generate_data(config.records, config.seed);
  std::vector<SampleRow> rows;
  for (std::size_t theta : config.thetas) {
    auto timeline = run_timeline(config, theta, data);
    rows.insert(rows.end(), timeline.begin(), timeline.end());
  }
  return rows;
}

std::vector<SampleRow> run_simulated(const BenchConfig& config, std::size_t theta, const CostModel& model)
{
  config.validate();
  const auto family = config.merge ? light_score_crack_sort_merge(theta) : light_score_crack_sort(theta);
  const Simulation sim = simulate(*light_array(config.records), family, model);
  const std::size_t batch = default_sample_every(config, theta);
  const std::string label = policy_label(theta, config.merge) + "-sim";

  std::vector<SampleRow> rows;
  for (const auto& iv : sim.intervals) {
    if (iv.transforms % batch != 0 && !iv.converged) continue;
    rows.push_back({iv.start_s, iv.transforms, iv.latency_ns, label, iv.latency_ns, iv.latency_ns});
  }
  return rows;
}

/*######################################################################################
 * Microbenchmarks
 *####################################################################################*/

std::vector<Measurement> run_microbench(const MicrobenchConfig& config)
{
  if (config.min_log2 < 1 || config.max_log2 < config.min_log2 || config.log2_step < 1) {
    throw std::invalid_argument{"invalid microbenchmark size range"};
  }
  std::mt19937_64 rng{config.seed};
  std::vector<Measurement> out;

  // Repeat each measurement until it has covered about this much work.
  constexpr double kWorkBudget = double{1 << 22};

  auto time_gets = [&rng](const HandlePtr& root, std::size_t lookups) {
    std::vector<Key> keys(lookups);
    for (auto& k : keys) k = static_cast<Key>(rng());
    const auto t0 = Clock::now();
    for (Key k : keys) {
      if (auto hit = adaptidx::get(root, k)) g_sink = g_sink + hit->value;
    }
    return nanos_between(t0, Clock::now()) / static_cast<double>(lookups);
  };

  for (unsigned lg = config.min_log2; lg <= config.max_log2; lg += config.log2_step) {
    const std::size_t n = std::size_t{1} << lg;
    const auto dn = static_cast<double>(n);
    const auto data = generate_data(n, rng());
    const NodePtr array = make_array(data);

    const auto scans = static_cast<std::size_t>(std::max(3.0, kWorkBudget / dn));
    out.push_back({CostFunction::kAlpha, dn, time_gets(make_handle(array), scans)});

    const NodePtr sorted = apply_atomic(AtomicTransform::kSort, array);
    out.push_back({CostFunction::kBeta, dn, time_gets(make_handle(sorted), 20000)});

    // Transforms are timed including release of their output, as in a scheduler step
    // that frees the node it replaced. One untimed run first warms the allocator.
    const auto reps = static_cast<std::size_t>(std::max(3.0, kWorkBudget / (dn * 4)));
    for (auto [fn, atomic] : {std::pair{CostFunction::kDelta, AtomicTransform::kCrack},
                              std::pair{CostFunction::kNu, AtomicTransform::kSort}}) {
      { const NodePtr warm = apply_atomic(atomic, array); }
      std::vector<double> samples(reps);
      for (auto& sample : samples) {
        const auto t0 = Clock::now();
        { const NodePtr result = apply_atomic(atomic, array); }
        sample = nanos_between(t0, Clock::now());
      }
      std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(reps / 2), samples.end());
      out.push_back({fn, dn, samples[reps / 2]});
    }
  }

  // BinTree descent: balanced trees over single-record Sorted leaves, compared with a
  // bare leaf.
  const double leaf_cost = time_gets(make_handle(make_sorted({{0, 0}})), 200000);
  for (unsigned depth : {2U, 4U, 6U, 8U, 10U, 12U}) {
    const std::size_t leaves = std::size_t{1} << depth;
    const Key stride = std::numeric_limits<Key>::max() / static_cast<Key>(leaves) * 2;
    auto build = [&](auto&& self, std::size_t first, std::size_t count) -> NodePtr {
      const Key lo = kMinKey + static_cast<Key>(first) * stride;
      if (count == 1) return make_sorted({{lo, 0}});
      const std::size_t half = count / 2;
      NodePtr l = self(self, first, half);
      NodePtr r = self(self, first + half, count - half);
      return make_bintree(kMinKey + static_cast<Key>(first + half) * stride, std::move(l), std::move(r));
    };
    const HandlePtr root = make_handle(build(build, 0, leaves));
    const double per_get = time_gets(root, 200000);
    out.push_back({CostFunction::kGamma, static_cast<double>(depth), std::max(0.0, (per_get - leaf_cost) / depth)});
  }
  return out;
}

}  // namespace adaptidx::bench
