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

#ifndef ADAPTIDX_COG_HPP
#define ADAPTIDX_COG_HPP

#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace adaptidx
{
using Key = std::int64_t;
using Value = std::int64_t;

inline constexpr Key kMinKey = std::numeric_limits<Key>::min();

/// A key/value pair. Ordering and equality for index purposes consider the key only;
/// duplicate keys are allowed.
struct Record {
  Key key{};
  Value value{};

  friend bool operator==(const Record&, const Record&) = default;
};

/// Strict weak ordering on keys.
struct KeyLess {
  bool operator()(const Record& a, const Record& b) const { return a.key < b.key; }
  bool operator()(const Record& a, Key k) const { return a.key < k; }
  bool operator()(Key k, const Record& b) const { return k < b.key; }
};

class Node;
class Handle;

using NodePtr = std::shared_ptr<const Node>;
using HandlePtr = std::shared_ptr<Handle>;
using HandleId = std::uint64_t;

/*######################################################################################
 * Atoms
 *####################################################################################*/

struct ArrayNode {
  std::vector<Record> records;
};

struct SortedNode {
  std::vector<Record> records;
};

struct ConcatNode {
  HandlePtr left;
  HandlePtr right;
};

struct BinTreeNode {
  Key separator{};
  HandlePtr left;
  HandlePtr right;
};

enum class NodeKind : std::uint8_t { kArray, kSorted, kConcat, kBinTree };

/**
 * One of the four grammar atoms. Nodes are physically immutable once built; inner nodes
 * reference their children through handles, whose targets may change (to a logically
 * equivalent node) at any time.
 */
class Node
{
 public:
  using Body = std::variant<ArrayNode, SortedNode, ConcatNode, BinTreeNode>;

  explicit Node(Body body) : body_{std::move(body)} {}

  NodeKind kind() const { return static_cast<NodeKind>(body_.index()); }
  bool is_leaf() const { return kind() == NodeKind::kArray || kind() == NodeKind::kSorted; }

  /// Records of an Array or Sorted leaf; empty for inner nodes.
  std::span<const Record> records() const;

  /// Children of a Concat or BinTree; null for leaves.
  const HandlePtr& left() const;
  const HandlePtr& right() const;

  /// Separator of a BinTree. Undefined for other kinds.
  Key separator() const { return std::get<BinTreeNode>(body_).separator; }

  template <class T>
  const T* as() const
  {
    return std::get_if<T>(&body_);
  }

  const Body& body() const { return body_; }

 private:
  Body body_;
};

/**
 * A mutable indirection cell referencing a node. The target may be swapped for any
 * logically equivalent node; the identity is fixed for the handle's lifetime. Loads and
 * swaps are indivisible with respect to each other.
 */
class Handle
{
 public:
  explicit Handle(NodePtr target);

  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;

  HandleId id() const { return id_; }

  NodePtr load() const { return std::atomic_load_explicit(&target_, std::memory_order_acquire); }

  /// Replaces the target with `desired` iff it still equals `expected`. On failure
  /// `expected` receives the current target.
  bool compare_exchange(NodePtr& expected, NodePtr desired);

  /// Number of successful swaps so far.
  std::uint64_t generation() const { return generation_.load(std::memory_order_acquire); }

 private:
  NodePtr target_;
  const HandleId id_;
  std::atomic<std::uint64_t> generation_{0};
};

/*######################################################################################
 * Construction helpers
 *####################################################################################*/

NodePtr make_array(std::vector<Record> records);
NodePtr make_sorted(std::vector<Record> records);
NodePtr make_concat(HandlePtr left, HandlePtr right);
NodePtr make_bintree(Key separator, HandlePtr left, HandlePtr right);

inline HandlePtr make_handle(NodePtr target) { return std::make_shared<Handle>(std::move(target)); }

// Convenience overloads that wrap each child in a fresh handle.
NodePtr make_concat(NodePtr left, NodePtr right);
NodePtr make_bintree(Key separator, NodePtr left, NodePtr right);

/// Records built from keys, with the value equal to the key.
std::vector<Record> records_from_keys(std::span<const Key> keys);
inline std::vector<Record> records_from_keys(std::initializer_list<Key> keys)
{
  return records_from_keys(std::span<const Key>{keys.begin(), keys.size()});
}

/*######################################################################################
 * Logical contents and predicates
 *####################################################################################*/

/// A multiset of records. Stored sorted by (key, value) so equality is order-insensitive
/// and multiplicity-sensitive.
class Bag
{
 public:
  Bag() = default;
  explicit Bag(std::vector<Record> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::span<const Record> records() const { return records_; }
  std::size_t count(const Record& r) const;

  friend bool operator==(const Bag&, const Bag&) = default;

 private:
  std::vector<Record> records_;
};

Bag contents(const Node& node);
bool logically_equivalent(const Node& a, const Node& b);
bool is_structurally_correct(const Node& node);

/// The node followed by every node reachable from it (pre-order, left before right).
std::vector<NodePtr> descendants(const NodePtr& node);

/// Number of records under a node.
std::size_t record_count(const Node& node);

/// Every handle reachable below `root`, including `root` itself (pre-order).
std::vector<HandlePtr> reachable_handles(const HandlePtr& root);

/// Node-for-node equality: same atoms, same separators, same record sequences. Handle
/// identities are ignored.
bool identical(const Node& a, const Node& b);

/// Deep copy that gives every inner node fresh handles, so later swaps on the original
/// do not show through. Leaves are shared (they are immutable).
NodePtr freeze(const NodePtr& node);

}  // namespace adaptidx

#endif  // ADAPTIDX_COG_HPP
