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

#ifndef ADAPTIDX_SIMULATOR_HPP
#define ADAPTIDX_SIMULATOR_HPP

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaptidx/policy.hpp"
#include "adaptidx/transforms.hpp"

namespace adaptidx
{
/*######################################################################################
 * Cost model
 *####################################################################################*/

/// The five measured operations and the shape each is fitted to.
enum class CostFunction : std::uint8_t {
  kAlpha,  // get on Array(N):   a*N + b
  kBeta,   // get on Sorted(N):  a*log2(N) + b
  kGamma,  // BinTree descent:   b (constant)
  kDelta,  // Crack(N):          a*N + b
  kNu,     // Sort(N):           a*N*log2(N) + b
};

std::string_view to_string(CostFunction f);

/// a * shape(N) + b, in nanoseconds.
struct FittedCost {
  double a = 0.0;
  double b = 0.0;
};

struct CostModel {
  FittedCost alpha;
  FittedCost beta;
  FittedCost gamma;
  FittedCost delta;
  FittedCost nu;

  double array_get(double n) const;
  double sorted_get(double n) const;
  double bintree_descent() const { return gamma.b; }
  double crack(double n) const;
  double sort(double n) const;
  /// Merges are charged like a crack of the merged size.
  double merge(double n) const { return crack(n); }

  const FittedCost& operator[](CostFunction f) const;
  FittedCost& operator[](CostFunction f);
};

/// Value of the basis function for `f` at N (log2 taken as 0 below N = 1).
double cost_shape(CostFunction f, double n);

struct Measurement {
  CostFunction function;
  double n;
  double nanoseconds;
};

/**
 * Least-squares fit of each function to its shape. The intercept is kept within
 * [0, smallest observation], refitting the slope when it is pinned; a negative slope
 * falls back to the mean. Throws std::invalid_argument naming the function when a
 * sized function has fewer than three distinct N, or gamma has no samples.
 */
CostModel fit_cost_model(std::span<const Measurement> measurements);

/// Text form: one line per function, `name a b`.
void write_cost_model(std::ostream& out, const CostModel& model);
CostModel read_cost_model(std::istream& in);

void save_cost_model(const std::filesystem::path& path, const CostModel& model);
/// Throws std::runtime_error naming the file when it is missing or malformed.
CostModel load_cost_model(const std::filesystem::path& path);

/*######################################################################################
 * Light grammar
 *####################################################################################*/

enum class LightKind : std::uint8_t { kArray, kSorted, kConcat, kBinTree };

struct LightNode;
using LightNodePtr = std::shared_ptr<const LightNode>;

/// A data-free instance: leaves carry only a record count.
struct LightNode {
  LightKind kind = LightKind::kArray;
  std::size_t n = 0;
  LightNodePtr left;
  LightNodePtr right;

  /// Total leaf records underneath.
  std::size_t size() const;
};

LightNodePtr light_array(std::size_t n);
LightNodePtr light_sorted(std::size_t n);
LightNodePtr light_concat(LightNodePtr left, LightNodePtr right);
LightNodePtr light_bintree(LightNodePtr left, LightNodePtr right);

/**
 * Expected get cost under uniformly distributed lookups. Leaves cost alpha/beta; a BinTree
 * costs gamma plus its children weighted by their share of records; a Concat costs its
 * whole left child plus its right child weighted by the right's share. Zero when the
 * instance holds no records.
 */
double predicted_latency(const LightNode& node, const CostModel& model);

/// What a scoring function may see of a light node: itself and its children's shapes.
struct LightView {
  LightKind kind = LightKind::kArray;
  std::size_t n = 0;  // leaf records; 0 for inner nodes
  std::optional<LightKind> left_kind;
  std::optional<LightKind> right_kind;
  std::size_t left_n = 0;
  std::size_t right_n = 0;
};

using LightScoringFunction = std::function<Score(AtomicTransform, const LightView&)>;

/// Light counterparts of score_crack_sort_merge / score_crack_sort (keys assumed distinct).
LightScoringFunction light_score_crack_sort_merge(std::size_t theta);
LightScoringFunction light_score_crack_sort(std::size_t theta);

/*######################################################################################
 * Simulation
 *####################################################################################*/

/// A stretch of simulated time over which the instance, and so its predicted latency, is
/// fixed.
struct StatusInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  double latency_ns = 0.0;
  std::size_t transforms = 0;  // transforms completed before the interval starts
  bool converged = false;      // no transform remains
};

struct SimulatedStep {
  AtomicTransform atomic = AtomicTransform::kIdentity;
  std::size_t records = 0;
  double cost_ns = 0.0;

  friend bool operator==(const SimulatedStep&, const SimulatedStep&) = default;
};

struct Simulation {
  std::vector<StatusInterval> intervals;
  std::vector<SimulatedStep> steps;
  bool converged = false;

  /// Start of the converged interval; +inf when the horizon came first.
  double time_to_convergence() const;
};

/**
 * Runs the scheduler over a light instance: highest score first, ties to the older node,
 * one interval per state. Crack splits n into floor(n/2) and ceil(n/2). Each transform
 * advances the clock by its modeled cost (queue maintenance is free). The last interval
 * ends at `horizon_s`.
 */
Simulation simulate(const LightNode& initial, const LightScoringFunction& score, const CostModel& model,
                    double horizon_s = std::numeric_limits<double>::infinity());

/*######################################################################################
 * Utilities and policy selection
 *####################################################################################*/

/// Lower is better.
using UtilityFunction = std::function<double(std::span<const StatusInterval>)>;

double evaluate_utility(std::span<const StatusInterval> intervals, const UtilityFunction& utility);

/// Earliest time at which predicted latency drops below `latency_ns`; +inf if never.
UtilityFunction time_until_latency_below(double latency_ns);

/// Total seconds spent answering `queries` lookups arriving uniformly over [0, window_s].
UtilityFunction total_workload_time(std::size_t queries, double window_s);

/// Seconds until the policy converges; +inf if it does not within the simulation.
UtilityFunction time_to_convergence();

/// Builds the light scoring function for a given threshold.
using PolicyFamily = std::function<LightScoringFunction(std::size_t theta)>;

struct PolicySearch {
  LightNodePtr initial;
  CostModel model;
  UtilityFunction utility;
  PolicyFamily family = light_score_crack_sort_merge;
  double horizon_s = std::numeric_limits<double>::infinity();
};

double evaluate_policy(const PolicySearch& search, std::size_t theta);

/// Exhaustive: the candidate with the lowest utility, ties to the smaller threshold.
std::size_t optimize_policy(const PolicySearch& search, std::span<const std::size_t> candidates);

/**
 * Golden-section search over the 2x geometric grid lo, 2lo, 4lo, ... (capped at hi), with a
 * final check of the grid neighbours of the best point.
 */
std::size_t optimize_policy(const PolicySearch& search, std::size_t lo, std::size_t hi);

}  // namespace adaptidx

#endif  // ADAPTIDX_SIMULATOR_HPP
