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

#ifndef ADAPTIDX_POLICY_HPP
#define ADAPTIDX_POLICY_HPP

#include <chrono>
#include <functional>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "adaptidx/cog.hpp"
#include "adaptidx/transforms.hpp"

namespace adaptidx
{
using Score = std::uint64_t;

/**
 * Scores an atomic transform applied to a node. A scoring function must return 0 whenever
 * the transform would leave the node unchanged, and may only inspect the node itself and
 * its immediate children (never ancestors).
 */
using ScoringFunction = std::function<Score(AtomicTransform, const Node&)>;

/**
 * Crack-Sort-Merge. Arrays of at most `theta` records are sorted, larger ones cracked, and
 * Concat/BinTree nodes over two Sorted children are merged; larger work scores higher.
 *
 * An array whose crack would leave the lower partition empty (its pivot key is the
 * minimum) is sorted instead, whatever its size. Empty arrays score 1 for Sort so that
 * they too end up merged away. Throws std::invalid_argument when theta < 2.
 */
ScoringFunction score_crack_sort_merge(std::size_t theta);

/// Crack-Sort-Merge without the merge phase: converges to a BinTree over Sorted leaves.
ScoringFunction score_crack_sort(std::size_t theta);

struct ScoredTransform {
  AtomicTransform atomic = AtomicTransform::kIdentity;
  Score score = 0;
};

/// Highest positive-scoring atomic transform for `node`, ties going to the earlier
/// transform in kAtomicTransforms order.
std::optional<ScoredTransform> best_transform(const ScoringFunction& score, const Node& node);

struct TargetEntry {
  HandleId handle = 0;
  AtomicTransform atomic = AtomicTransform::kIdentity;
  Score score = 0;

  friend bool operator==(const TargetEntry&, const TargetEntry&) = default;
};

/// What the last successful step did.
struct StepReport {
  HandleId handle = 0;
  AtomicTransform atomic = AtomicTransform::kIdentity;
  std::size_t records = 0;     // records under the rewritten node
  std::size_t insertions = 0;  // queue entries added
  std::size_t removals = 0;    // queue entries removed (including the popped one)
};

/**
 * The scheduler's priority queue: the best transform per reachable handle, keyed by score
 * (ties to the smaller handle id). Maintained incrementally as steps rewrite the tree;
 * only handles created, destroyed or rewritten by a step, plus the rewritten handle's
 * parent, are rescored.
 *
 * Not thread-safe; owned by a single worker. Handle swaps made by other threads (logically
 * equivalent by contract) are detected through the handle's generation counter.
 */
class PolicyQueue
{
 public:
  PolicyQueue(ScoringFunction score, HandlePtr root);

  /// Pops and applies the highest-scoring transform. Returns false once converged.
  bool step();

  /// Starts tracking a new root; handles already tracked keep their entries.
  void adopt_root(HandlePtr root);

  const HandlePtr& root() const { return root_; }
  bool converged() const { return ordered_.empty(); }
  std::size_t size() const { return ordered_.size(); }
  std::size_t tracked_handles() const { return slots_.size(); }
  const StepReport& last_step() const { return last_; }

  /// Current entries, ordered by handle id.
  std::vector<TargetEntry> entries() const;

 private:
  struct Slot {
    HandlePtr handle;
    HandleId parent = 0;
    std::uint64_t generation = 0;
    std::optional<ScoredTransform> best;
  };

  struct Order {
    bool operator()(const std::pair<Score, HandleId>& a, const std::pair<Score, HandleId>& b) const
    {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    }
  };

  void rescore(HandleId id);
  void drop(HandleId id);
  void track(const HandlePtr& h, HandleId parent);
  void reconcile(HandleId id, const Node& before, const Node& after);

  ScoringFunction score_;
  HandlePtr root_;
  std::unordered_map<HandleId, Slot> slots_;
  std::set<std::pair<Score, HandleId>, Order> ordered_;
  StepReport last_;
  std::size_t insertions_ = 0;
  std::size_t removals_ = 0;
};

PolicyQueue build_queue(HandlePtr root, ScoringFunction score);

struct Budget {
  std::optional<std::size_t> max_steps;
  std::optional<std::chrono::steady_clock::duration> max_time;
};

struct RunResult {
  std::size_t steps = 0;
  bool converged = false;
};

/// Steps the policy on `root` until it converges or the budget runs out.
RunResult run_to_convergence(const HandlePtr& root, ScoringFunction score, Budget budget = {});

/// [C_0 .. C_k]: `root` followed by the instance after each of k scheduler steps. Works on
/// a private copy; each snapshot is frozen. Stops early (repeating the fixed point) once
/// converged.
std::vector<NodePtr> trace(const NodePtr& root, ScoringFunction score, std::size_t k);

}  // namespace adaptidx

#endif  // ADAPTIDX_POLICY_HPP
