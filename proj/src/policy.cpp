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

#include "adaptidx/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace adaptidx
{
namespace
{
ScoringFunction crack_sort_family(std::size_t theta, bool merge)
{
  if (theta < 2) throw std::invalid_argument{"crack threshold must be at least 2"};
  return [theta, merge](AtomicTransform t, const Node& node) -> Score {
    switch (t) {
      case AtomicTransform::kSort: {
        const auto* arr = node.as<ArrayNode>();
        if (arr == nullptr) return 0;
        const std::size_t n = arr->records.size();
        if (n <= theta) return std::max<Score>(n, 1);
        return crack_splits(arr->records) ? 0 : n;
      }
      case AtomicTransform::kCrack: {
        const auto* arr = node.as<ArrayNode>();
        if (arr == nullptr || arr->records.size() <= theta) return 0;
        return crack_splits(arr->records) ? arr->records.size() : 0;
      }
      case AtomicTransform::kMerge: {
        if (!merge || node.is_leaf()) return 0;
        const NodePtr l = node.left()->load();
        const NodePtr r = node.right()->load();
        if (l->kind() != NodeKind::kSorted || r->kind() != NodeKind::kSorted) return 0;
        return std::max<Score>(l->records().size() + r->records().size(), 1);
      }
      default:
        return 0;
    }
  };
}

// Handles one and two levels below a node, with the id of the handle's parent (0 stands
// for the node itself).
void collect_near(const Node& node, HandleId self,
                  std::vector<std::pair<HandlePtr, HandleId>>& out)
{
  if (node.is_leaf()) return;
  for (const HandlePtr* child : {&node.left(), &node.right()}) {
    out.emplace_back(*child, self);
    const NodePtr grand = (*child)->load();
    if (grand->is_leaf()) continue;
    out.emplace_back(grand->left(), (*child)->id());
    out.emplace_back(grand->right(), (*child)->id());
  }
}
}  // namespace

ScoringFunction score_crack_sort_merge(std::size_t theta) { return crack_sort_family(theta, true); }

ScoringFunction score_crack_sort(std::size_t theta) { return crack_sort_family(theta, false); }

std::optional<ScoredTransform> best_transform(const ScoringFunction& score, const Node& node)
{
  std::optional<ScoredTransform> best;
  for (AtomicTransform t : kAtomicTransforms) {
    if (t == AtomicTransform::kIdentity) continue;
    const Score s = score(t, node);
    if (s > 0 && (!best || s > best->score)) best = ScoredTransform{t, s};
  }
  return best;
}

PolicyQueue::PolicyQueue(ScoringFunction score, HandlePtr root) : score_{std::move(score)}
{
  adopt_root(std::move(root));
}

void PolicyQueue::rescore(HandleId id)
{
  auto it = slots_.find(id);
  if (it == slots_.end()) return;
  Slot& slot = it->second;
  slot.generation = slot.handle->generation();
  const NodePtr node = slot.handle->load();
  const auto best = best_transform(score_, *node);

  const bool same = best.has_value() == slot.best.has_value() &&
                    (!best || (best->atomic == slot.best->atomic && best->score == slot.best->score));
  if (same) return;
  if (slot.best) {
    ordered_.erase({slot.best->score, id});
    ++removals_;
  }
  slot.best = best;
  if (best) {
    ordered_.insert({best->score, id});
    ++insertions_;
  }
}

void PolicyQueue::drop(HandleId id)
{
  auto it = slots_.find(id);
  if (it == slots_.end()) return;
  if (it->second.best) {
    ordered_.erase({it->second.best->score, id});
    ++removals_;
  }
  slots_.erase(it);
}

void PolicyQueue::track(const HandlePtr& h, HandleId parent)
{
  auto [it, fresh] = slots_.try_emplace(h->id());
  it->second.parent = parent;
  if (!fresh) return;
  it->second.handle = h;
  rescore(h->id());
}

void PolicyQueue::adopt_root(HandlePtr root)
{
  if (root == root_) return;
  root_ = std::move(root);

  std::vector<std::pair<HandlePtr, HandleId>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto [h, parent] = std::move(stack.back());
    stack.pop_back();
    const bool known = slots_.contains(h->id());
    track(h, parent);
    if (known) continue;
    const NodePtr n = h->load();
    if (n->is_leaf()) continue;
    stack.emplace_back(n->right(), h->id());
    stack.emplace_back(n->left(), h->id());
  }
}

void PolicyQueue::reconcile(HandleId id, const Node& before, const Node& after)
{
  std::vector<std::pair<HandlePtr, HandleId>> old_near;
  std::vector<std::pair<HandlePtr, HandleId>> new_near;
  collect_near(before, id, old_near);
  collect_near(after, id, new_near);

  auto contains = [](const auto& v, HandleId hid) {
    return std::any_of(v.begin(), v.end(), [hid](const auto& p) { return p.first->id() == hid; });
  };
  for (const auto& [h, parent] : old_near) {
    if (!contains(new_near, h->id())) drop(h->id());
  }
  for (const auto& [h, parent] : new_near) {
    if (contains(old_near, h->id())) {
      slots_[h->id()].parent = parent;
    } else {
      track(h, parent);
    }
  }
  rescore(id);
  if (auto it = slots_.find(id); it != slots_.end() && it->second.parent != 0) {
    rescore(it->second.parent);
  }
}

bool PolicyQueue::step()
{
  insertions_ = 0;
  removals_ = 0;
  while (!ordered_.empty()) {
    const HandleId id = ordered_.begin()->second;
    ordered_.erase(ordered_.begin());
    ++removals_;

    auto it = slots_.find(id);
    if (it == slots_.end()) continue;
    Slot& slot = it->second;
    const ScoredTransform chosen = *slot.best;
    slot.best.reset();
    const HandlePtr handle = slot.handle;
    const HandleId parent = slot.parent;

    // Someone else swapped this handle since it was scored.
    if (handle->generation() != slot.generation) {
      rescore(id);
      if (parent != 0) rescore(parent);
      continue;
    }

    NodePtr before = handle->load();
    NodePtr after = apply_atomic(chosen.atomic, before);
    if (after == before) {
      rescore(id);
      continue;
    }
    const NodePtr keep_before = before;
    if (!handle->compare_exchange(before, after)) {
      rescore(id);
      if (parent != 0) rescore(parent);
      continue;
    }

    std::size_t records = keep_before->records().size();
    if (!keep_before->is_leaf() && chosen.atomic == AtomicTransform::kMerge) records = after->records().size();
    reconcile(id, *keep_before, *after);
    last_ = StepReport{id, chosen.atomic, records, insertions_, removals_};
    return true;
  }
  return false;
}

std::vector<TargetEntry> PolicyQueue::entries() const
{
  std::vector<TargetEntry> out;
  for (const auto& [id, slot] : slots_) {
    if (slot.best) out.push_back({id, slot.best->atomic, slot.best->score});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.handle < b.handle; });
  return out;
}

PolicyQueue build_queue(HandlePtr root, ScoringFunction score)
{
  return PolicyQueue{std::move(score), std::move(root)};
}

RunResult run_to_convergence(const HandlePtr& root, ScoringFunction score, Budget budget)
{
  PolicyQueue queue{std::move(score), root};
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  while (true) {
    if (budget.max_steps && out.steps >= *budget.max_steps) break;
    if (budget.max_time && std::chrono::steady_clock::now() - start >= *budget.max_time) break;
    if (!queue.step()) {
      out.converged = true;
      break;
    }
    ++out.steps;
  }
  if (!out.converged) out.converged = queue.converged();
  return out;
}

std::vector<NodePtr> trace(const NodePtr& root, ScoringFunction score, std::size_t k)
{
  const HandlePtr handle = make_handle(freeze(root));
  PolicyQueue queue{std::move(score), handle};
  std::vector<NodePtr> out{freeze(handle->load())};
  for (std::size_t i = 0; i < k; ++i) {
    if (queue.step()) {
      out.push_back(freeze(handle->load()));
    } else {
      out.push_back(out.back());
    }
  }
  return out;
}

}  // namespace adaptidx
