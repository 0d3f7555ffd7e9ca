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

#ifndef ADAPTIDX_TRANSFORMS_HPP
#define ADAPTIDX_TRANSFORMS_HPP

#include <array>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "adaptidx/cog.hpp"

namespace adaptidx
{
enum class AtomicTransform : std::uint8_t {
  kIdentity,
  kSort,
  kUnSort,
  kDivide,
  kCrack,
  kMerge,
  kPivotLeft,
  kPivotRight,
};

inline constexpr std::array<AtomicTransform, 8> kAtomicTransforms{
    AtomicTransform::kIdentity, AtomicTransform::kSort,  AtomicTransform::kUnSort,
    AtomicTransform::kDivide,   AtomicTransform::kCrack, AtomicTransform::kMerge,
    AtomicTransform::kPivotLeft, AtomicTransform::kPivotRight,
};

std::string_view to_string(AtomicTransform t);

/// Index of the element whose key partitions a Crack.
inline std::size_t crack_pivot_index(std::size_t n) { return n / 2; }

/// True when cracking `records` leaves both partitions nonempty.
bool crack_splits(std::span<const Record> records);

/**
 * Rewrites `node` with one atomic transform. Inputs are never modified. When no case of
 * the transform matches, `node` itself is returned (same pointer), so callers can detect
 * a no-op by pointer comparison.
 *
 * Merge handles, in addition to Array children under Concat/BinTree, BinTree over two
 * Sorted children (concatenation) and Concat over two Sorted children (two-way merge).
 * Crack and Divide are identity on arrays shorter than two records.
 */
NodePtr apply_atomic(AtomicTransform t, const NodePtr& node);

enum class PathStep : std::uint8_t { kLhs, kRhs };
using Path = std::vector<PathStep>;

struct HierarchicalTransform {
  Path path;
  AtomicTransform atomic = AtomicTransform::kIdentity;

  friend bool operator==(const HierarchicalTransform&, const HierarchicalTransform&) = default;
};

/// Follows `path` from `root` through child handles. Null when a leaf is reached first.
HandlePtr follow(const HandlePtr& root, const Path& path);

/**
 * Applies a hierarchical transform in place by swapping the target handle's node. No
 * ancestor is touched. Returns false when the path bottoms out at a leaf or the atomic
 * transform is a no-op on the target.
 */
bool apply_hierarchical(const HierarchicalTransform& t, const HandlePtr& root);

/*######################################################################################
 * Pure transform algebra
 *####################################################################################*/

/// An endomorphism over instances. Never mutates its argument.
using Transform = std::function<NodePtr(const NodePtr&)>;

Transform atomic(AtomicTransform t);

/// Applies `t` to the left (resp. right) child of a Concat/BinTree, copying the parent.
/// Identity on leaves.
Transform lhs(Transform t);
Transform rhs(Transform t);

/// compose(t1, t2)(c) == t2(t1(c)).
Transform compose(Transform t1, Transform t2);

Transform to_transform(const HierarchicalTransform& t);

struct Target {
  NodePtr node;
  AtomicTransform atomic;
};

/// Unrolls the LHS/RHS stack down to the node the atomic transform acts on. nullopt when
/// a leaf is reached with path steps remaining.
std::optional<Target> target(const HierarchicalTransform& t, const NodePtr& root);

}  // namespace adaptidx

#endif  // ADAPTIDX_TRANSFORMS_HPP
