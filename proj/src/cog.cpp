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

#include "adaptidx/cog.hpp"

#include <algorithm>
#include <optional>
#include <tuple>

namespace adaptidx
{
namespace
{
std::atomic<HandleId> next_handle_id{1};

const HandlePtr kNoHandle{};

bool record_less(const Record& a, const Record& b)
{
  return std::tie(a.key, a.value) < std::tie(b.key, b.value);
}

// Key range of a subtree; nullopt when it holds no records or is not structurally
// correct (`ok` reports which).
struct Summary {
  bool ok = true;
  std::optional<Key> min;
  std::optional<Key> max;
};

Summary summarize(const Node& node)
{
  Summary out;
  auto widen = [&out](Key lo, Key hi) {
    out.min = out.min ? std::min(*out.min, lo) : lo;
    out.max = out.max ? std::max(*out.max, hi) : hi;
  };

  switch (node.kind()) {
    case NodeKind::kArray:
    case NodeKind::kSorted: {
      const auto recs = node.records();
      if (recs.empty()) return out;
      if (node.kind() == NodeKind::kSorted) {
        out.ok = std::is_sorted(recs.begin(), recs.end(), KeyLess{});
        widen(recs.front().key, recs.back().key);
        if (out.ok) return out;
      }
      const auto [lo, hi] = std::minmax_element(recs.begin(), recs.end(), KeyLess{});
      widen(lo->key, hi->key);
      return out;
    }
    case NodeKind::kConcat:
    case NodeKind::kBinTree: {
      const Summary l = summarize(*node.left()->load());
      const Summary r = summarize(*node.right()->load());
      out.ok = l.ok && r.ok;
      if (node.kind() == NodeKind::kBinTree) {
        const Key sep = node.separator();
        if (l.max && !(*l.max < sep)) out.ok = false;
        if (r.min && *r.min < sep) out.ok = false;
      }
      if (l.min) widen(*l.min, *l.max);
      if (r.min) widen(*r.min, *r.max);
      return out;
    }
  }
  return out;
}
}  // namespace

std::span<const Record> Node::records() const
{
  if (const auto* a = as<ArrayNode>()) return a->records;
  if (const auto* s = as<SortedNode>()) return s->records;
  return {};
}

const HandlePtr& Node::left() const
{
  if (const auto* c = as<ConcatNode>()) return c->left;
  if (const auto* b = as<BinTreeNode>()) return b->left;
  return kNoHandle;
}

const HandlePtr& Node::right() const
{
  if (const auto* c = as<ConcatNode>()) return c->right;
  if (const auto* b = as<BinTreeNode>()) return b->right;
  return kNoHandle;
}

Handle::Handle(NodePtr target)
    : target_{std::move(target)}, id_{next_handle_id.fetch_add(1, std::memory_order_relaxed)}
{
}

bool Handle::compare_exchange(NodePtr& expected, NodePtr desired)
{
  if (std::atomic_compare_exchange_strong_explicit(&target_, &expected, std::move(desired),
                                                   std::memory_order_acq_rel,
                                                   std::memory_order_acquire)) {
    generation_.fetch_add(1, std::memory_order_acq_rel);
    return true;
  }
  return false;
}

NodePtr make_array(std::vector<Record> records)
{
  return std::make_shared<const Node>(ArrayNode{std::move(records)});
}

NodePtr make_sorted(std::vector<Record> records)
{
  return std::make_shared<const Node>(SortedNode{std::move(records)});
}

NodePtr make_concat(HandlePtr left, HandlePtr right)
{
  return std::make_shared<const Node>(ConcatNode{std::move(left), std::move(right)});
}

NodePtr make_bintree(Key separator, HandlePtr left, HandlePtr right)
{
  return std::make_shared<const Node>(BinTreeNode{separator, std::move(left), std::move(right)});
}

// Handles are created left first so ids follow tree order.
NodePtr make_concat(NodePtr left, NodePtr right)
{
  HandlePtr l = make_handle(std::move(left));
  HandlePtr r = make_handle(std::move(right));
  return make_concat(std::move(l), std::move(r));
}

NodePtr make_bintree(Key separator, NodePtr left, NodePtr right)
{
  HandlePtr l = make_handle(std::move(left));
  HandlePtr r = make_handle(std::move(right));
  return make_bintree(separator, std::move(l), std::move(r));
}

std::vector<Record> records_from_keys(std::span<const Key> keys)
{
  std::vector<Record> out;
  out.reserve(keys.size());
  for (Key k : keys) out.push_back({k, k});
  return out;
}

Bag::Bag(std::vector<Record> records) : records_{std::move(records)}
{
  std::sort(records_.begin(), records_.end(), record_less);
}

std::size_t Bag::count(const Record& r) const
{
  const auto [lo, hi] = std::equal_range(records_.begin(), records_.end(), r, record_less);
  return static_cast<std::size_t>(hi - lo);
}

Bag contents(const Node& node)
{
  std::vector<Record> all;
  std::vector<NodePtr> pinned;
  std::vector<const Node*> stack{&node};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      const auto recs = n->records();
      all.insert(all.end(), recs.begin(), recs.end());
      continue;
    }
    pinned.push_back(n->right()->load());
    stack.push_back(pinned.back().get());
    pinned.push_back(n->left()->load());
    stack.push_back(pinned.back().get());
  }
  return Bag{std::move(all)};
}

bool logically_equivalent(const Node& a, const Node& b) { return contents(a) == contents(b); }

bool is_structurally_correct(const Node& node) { return summarize(node).ok; }

std::vector<NodePtr> descendants(const NodePtr& node)
{
  std::vector<NodePtr> out;
  std::vector<NodePtr> stack{node};
  while (!stack.empty()) {
    NodePtr n = std::move(stack.back());
    stack.pop_back();
    if (!n->is_leaf()) {
      stack.push_back(n->right()->load());
      stack.push_back(n->left()->load());
    }
    out.push_back(std::move(n));
  }
  return out;
}

std::size_t record_count(const Node& node)
{
  if (node.is_leaf()) return node.records().size();
  return record_count(*node.left()->load()) + record_count(*node.right()->load());
}

std::vector<HandlePtr> reachable_handles(const HandlePtr& root)
{
  std::vector<HandlePtr> out;
  std::vector<HandlePtr> stack{root};
  while (!stack.empty()) {
    HandlePtr h = std::move(stack.back());
    stack.pop_back();
    const NodePtr n = h->load();
    if (!n->is_leaf()) {
      stack.push_back(n->right());
      stack.push_back(n->left());
    }
    out.push_back(std::move(h));
  }
  return out;
}

bool identical(const Node& a, const Node& b)
{
  if (&a == &b) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case NodeKind::kArray:
    case NodeKind::kSorted: {
      const auto ra = a.records();
      const auto rb = b.records();
      return std::equal(ra.begin(), ra.end(), rb.begin(), rb.end());
    }
    case NodeKind::kBinTree:
      if (a.separator() != b.separator()) return false;
      [[fallthrough]];
    case NodeKind::kConcat:
      return identical(*a.left()->load(), *b.left()->load()) &&
             identical(*a.right()->load(), *b.right()->load());
  }
  return false;
}

NodePtr freeze(const NodePtr& node)
{
  switch (node->kind()) {
    case NodeKind::kArray:
    case NodeKind::kSorted:
      return node;
    case NodeKind::kConcat:
      return make_concat(freeze(node->left()->load()), freeze(node->right()->load()));
    case NodeKind::kBinTree:
      return make_bintree(node->separator(), freeze(node->left()->load()),
                          freeze(node->right()->load()));
  }
  return node;
}

}  // namespace adaptidx
