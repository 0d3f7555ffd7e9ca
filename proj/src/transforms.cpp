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

#include "adaptidx/transforms.hpp"

#include <algorithm>
#include <iterator>

namespace adaptidx
{
namespace
{
std::vector<Record> concatenated(std::span<const Record> a, std::span<const Record> b)
{
  std::vector<Record> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

NodePtr sort(const NodePtr& node)
{
  const auto* arr = node->as<ArrayNode>();
  if (arr == nullptr) return node;
  std::vector<Record> recs = arr->records;
  std::sort(recs.begin(), recs.end(), KeyLess{});
  return make_sorted(std::move(recs));
}

NodePtr unsort(const NodePtr& node)
{
  const auto* s = node->as<SortedNode>();
  if (s == nullptr) return node;
  return make_array(s->records);
}

NodePtr divide(const NodePtr& node)
{
  const auto* arr = node->as<ArrayNode>();
  if (arr == nullptr || arr->records.size() < 2) return node;
  const auto recs = std::span<const Record>{arr->records};
  const std::size_t mid = recs.size() / 2;
  NodePtr lo = make_array({recs.begin(), recs.begin() + mid});
  NodePtr hi = make_array({recs.begin() + mid, recs.end()});
  return make_concat(std::move(lo), std::move(hi));
}

NodePtr crack(const NodePtr& node)
{
  const auto* arr = node->as<ArrayNode>();
  if (arr == nullptr || arr->records.size() < 2) return node;
  const auto& recs = arr->records;
  const Key pivot = recs[crack_pivot_index(recs.size())].key;
  const auto below = static_cast<std::size_t>(
      std::count_if(recs.begin(), recs.end(), [pivot](const Record& r) { return r.key < pivot; }));

  std::vector<Record> lo;
  std::vector<Record> hi;
  lo.reserve(below);
  hi.reserve(recs.size() - below);
  std::partition_copy(recs.begin(), recs.end(), std::back_inserter(lo), std::back_inserter(hi),
                      [pivot](const Record& r) { return r.key < pivot; });
  return make_bintree(pivot, make_array(std::move(lo)), make_array(std::move(hi)));
}

NodePtr merge(const NodePtr& node)
{
  if (node->is_leaf()) return node;
  const NodePtr l = node->left()->load();
  const NodePtr r = node->right()->load();
  const bool is_concat = node->kind() == NodeKind::kConcat;

  if (l->kind() == NodeKind::kArray && r->kind() == NodeKind::kArray) {
    return make_array(concatenated(l->records(), r->records()));
  }
  if (l->kind() == NodeKind::kSorted && r->kind() == NodeKind::kSorted) {
    if (!is_concat) return make_sorted(concatenated(l->records(), r->records()));
    const auto a = l->records();
    const auto b = r->records();
    std::vector<Record> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out), KeyLess{});
    return make_sorted(std::move(out));
  }
  return node;
}

NodePtr pivot_left(const NodePtr& node)
{
  if (const auto* c = node->as<ConcatNode>()) {
    const NodePtr inner = c->right->load();
    const auto* ic = inner->as<ConcatNode>();
    if (ic == nullptr) return node;
    return make_concat(make_handle(make_concat(c->left, ic->left)), ic->right);
  }
  if (const auto* b = node->as<BinTreeNode>()) {
    const NodePtr inner = b->right->load();
    const auto* ib = inner->as<BinTreeNode>();
    if (ib == nullptr || !(b->separator < ib->separator)) return node;
    return make_bintree(ib->separator, make_handle(make_bintree(b->separator, b->left, ib->left)),
                        ib->right);
  }
  return node;
}

NodePtr pivot_right(const NodePtr& node)
{
  if (const auto* c = node->as<ConcatNode>()) {
    const NodePtr inner = c->left->load();
    const auto* ic = inner->as<ConcatNode>();
    if (ic == nullptr) return node;
    return make_concat(ic->left, make_handle(make_concat(ic->right, c->right)));
  }
  if (const auto* b = node->as<BinTreeNode>()) {
    const NodePtr inner = b->left->load();
    const auto* ib = inner->as<BinTreeNode>();
    if (ib == nullptr || !(ib->separator < b->separator)) return node;
    return make_bintree(ib->separator, ib->left,
                        make_handle(make_bintree(b->separator, ib->right, b->right)));
  }
  return node;
}

NodePtr with_child(const NodePtr& node, PathStep side, NodePtr child)
{
  HandlePtr l = node->left();
  HandlePtr r = node->right();
  (side == PathStep::kLhs ? l : r) = make_handle(std::move(child));
  if (node->kind() == NodeKind::kConcat) return make_concat(std::move(l), std::move(r));
  return make_bintree(node->separator(), std::move(l), std::move(r));
}

Transform descend(PathStep side, Transform t)
{
  return [side, t = std::move(t)](const NodePtr& node) -> NodePtr {
    if (node->is_leaf()) return node;
    const HandlePtr& child = side == PathStep::kLhs ? node->left() : node->right();
    const NodePtr before = child->load();
    NodePtr after = t(before);
    if (after == before) return node;
    return with_child(node, side, std::move(after));
  };
}
}  // namespace

std::string_view to_string(AtomicTransform t)
{
  switch (t) {
    case AtomicTransform::kIdentity: return "Identity";
    case AtomicTransform::kSort: return "Sort";
    case AtomicTransform::kUnSort: return "UnSort";
    case AtomicTransform::kDivide: return "Divide";
    case AtomicTransform::kCrack: return "Crack";
    case AtomicTransform::kMerge: return "Merge";
    case AtomicTransform::kPivotLeft: return "PivotLeft";
    case AtomicTransform::kPivotRight: return "PivotRight";
  }
  return "?";
}

bool crack_splits(std::span<const Record> records)
{
  if (records.size() < 2) return false;
  const Key pivot = records[crack_pivot_index(records.size())].key;
  return std::any_of(records.begin(), records.end(), [pivot](const Record& r) { return r.key < pivot; });
}

NodePtr apply_atomic(AtomicTransform t, const NodePtr& node)
{
  switch (t) {
    case AtomicTransform::kIdentity: return node;
    case AtomicTransform::kSort: return sort(node);
    case AtomicTransform::kUnSort: return unsort(node);
    case AtomicTransform::kDivide: return divide(node);
    case AtomicTransform::kCrack: return crack(node);
    case AtomicTransform::kMerge: return merge(node);
    case AtomicTransform::kPivotLeft: return pivot_left(node);
    case AtomicTransform::kPivotRight: return pivot_right(node);
  }
  return node;
}

HandlePtr follow(const HandlePtr& root, const Path& path)
{
  HandlePtr h = root;
  for (PathStep step : path) {
    const NodePtr n = h->load();
    if (n->is_leaf()) return nullptr;
    h = step == PathStep::kLhs ? n->left() : n->right();
  }
  return h;
}

bool apply_hierarchical(const HierarchicalTransform& t, const HandlePtr& root)
{
  const HandlePtr h = follow(root, t.path);
  if (!h) return false;
  NodePtr current = h->load();
  // A concurrent logically-equivalent swap (e.g. a reader's forced Sort) may win the
  // race; recompute once against the new target.
  for (int attempt = 0; attempt < 2; ++attempt) {
    NodePtr next = apply_atomic(t.atomic, current);
    if (next == current) return false;
    if (h->compare_exchange(current, std::move(next))) return true;
  }
  return false;
}

Transform atomic(AtomicTransform t)
{
  return [t](const NodePtr& node) { return apply_atomic(t, node); };
}

Transform lhs(Transform t) { return descend(PathStep::kLhs, std::move(t)); }
Transform rhs(Transform t) { return descend(PathStep::kRhs, std::move(t)); }

Transform compose(Transform t1, Transform t2)
{
  return [t1 = std::move(t1), t2 = std::move(t2)](const NodePtr& node) { return t2(t1(node)); };
}

Transform to_transform(const HierarchicalTransform& t)
{
  Transform out = atomic(t.atomic);
  for (auto it = t.path.rbegin(); it != t.path.rend(); ++it) out = descend(*it, std::move(out));
  return out;
}

std::optional<Target> target(const HierarchicalTransform& t, const NodePtr& root)
{
  NodePtr n = root;
  for (PathStep step : t.path) {
    if (n->is_leaf()) return std::nullopt;
    n = (step == PathStep::kLhs ? n->left() : n->right())->load();
  }
  return Target{std::move(n), t.atomic};
}

}  // namespace adaptidx
