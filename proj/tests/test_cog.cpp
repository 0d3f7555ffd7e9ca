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

#include <doctest.h>

#include <random>

#include "adaptidx/cog.hpp"
#include "oracles.hpp"

using namespace adaptidx;

namespace
{
NodePtr arr(std::initializer_list<Key> keys) { return make_array(records_from_keys(keys)); }
NodePtr srt(std::initializer_list<Key> keys) { return make_sorted(records_from_keys(keys)); }

std::size_t count_inner(const NodePtr& node)
{
  std::size_t inner = 0;
  for (const NodePtr& n : descendants(node)) inner += n->is_leaf() ? 0 : 1;
  return inner;
}
}  // namespace

TEST_CASE("contents of leaves and inner nodes")
{
  const NodePtr a = make_array({{5, 1}, {2, 2}});
  CHECK(contents(*a) == Bag{{{2, 2}, {5, 1}}});

  const NodePtr c = make_concat(make_array({{1, 10}}), make_array({{1, 11}}));
  const Bag bc = contents(*c);
  CHECK(bc.size() == 2);
  CHECK(bc.count({1, 10}) == 1);
  CHECK(bc.count({1, 11}) == 1);

  const NodePtr b = make_bintree(5, make_array({{2, 2}}), make_array({{5, 1}, {8, 3}}));
  CHECK(contents(*b) == Bag{{{2, 2}, {5, 1}, {8, 3}}});
}

TEST_CASE("logical equivalence is bag equality")
{
  CHECK(logically_equivalent(*arr({3, 1}), *srt({1, 3})));
  CHECK_FALSE(logically_equivalent(*arr({1}), *arr({1, 1})));
  const HandlePtr ha = make_handle(arr({1, 2}));
  const HandlePtr hb = make_handle(srt({7}));
  CHECK(logically_equivalent(*make_concat(ha, hb), *make_concat(hb, ha)));
}

TEST_CASE("structural correctness")
{
  CHECK(is_structurally_correct(*srt({1, 2, 3})));
  CHECK_FALSE(is_structurally_correct(*srt({2, 1})));
  CHECK_FALSE(is_structurally_correct(*make_bintree(5, arr({7}), arr({9}))));
  CHECK_FALSE(is_structurally_correct(*make_bintree(5, arr({1}), arr({4}))));
  CHECK(is_structurally_correct(*make_bintree(5, arr({4, 1}), arr({5, 9}))));
  CHECK(is_structurally_correct(*make_bintree(5, arr({}), arr({6}))));
  CHECK(is_structurally_correct(*srt({})));
  CHECK(is_structurally_correct(*srt({2, 2, 2})));

  // Nested violation: the inner BinTree is fine on its own but leaks past the outer
  // separator.
  const NodePtr inner = make_bintree(3, arr({1}), arr({4}));
  CHECK(is_structurally_correct(*inner));
  CHECK_FALSE(is_structurally_correct(*make_bintree(4, inner, arr({8}))));
}

TEST_CASE("arrays are always structurally correct")
{
  std::mt19937_64 rng{11};
  for (int i = 0; i < 200; ++i) {
    auto recs = oracle::random_records(rng, rng() % 50, 20);
    CHECK(is_structurally_correct(*make_array(recs)));
  }
}

TEST_CASE("concat correctness is the conjunction of its children")
{
  const NodePtr good = srt({1, 2});
  const NodePtr bad = srt({2, 1});
  CHECK(is_structurally_correct(*make_concat(good, good)));
  CHECK_FALSE(is_structurally_correct(*make_concat(good, bad)));
  CHECK_FALSE(is_structurally_correct(*make_concat(bad, good)));
  CHECK_FALSE(is_structurally_correct(*make_concat(bad, bad)));
}

TEST_CASE("descendants")
{
  const NodePtr a = arr({1});
  CHECK(descendants(a).size() == 1);
  CHECK(descendants(a).front() == a);

  CHECK(descendants(make_concat(arr({1}), arr({2}))).size() == 3);
  CHECK(descendants(make_bintree(5, make_concat(arr({1}), arr({2})), arr({7}))).size() == 5);
}

TEST_CASE("descendants of random full binary trees")
{
  std::mt19937_64 rng{12};
  for (int i = 0; i < 300; ++i) {
    const NodePtr c = oracle::random_instance(rng, {.max_records = 40, .max_depth = 8});
    const auto all = descendants(c);
    CHECK(all.size() == 2 * count_inner(c) + 1);
    CHECK(record_count(*c) == contents(*c).size());
  }
}

TEST_CASE("contents are invariant under equivalent swaps")
{
  const HandlePtr leaf = make_handle(arr({3, 1, 2}));
  const HandlePtr root = make_handle(make_concat(leaf, make_handle(srt({0}))));
  const Bag before = contents(*root->load());
  const HandleId id = leaf->id();

  NodePtr expected = leaf->load();
  REQUIRE(leaf->compare_exchange(expected, srt({1, 2, 3})));
  CHECK(leaf->id() == id);
  CHECK(leaf->generation() == 1);
  CHECK(contents(*root->load()) == before);
  CHECK(leaf->load()->kind() == NodeKind::kSorted);
}

TEST_CASE("failed compare-exchange reports the current target")
{
  const NodePtr first = arr({1});
  const HandlePtr h = make_handle(first);
  NodePtr stale = arr({1});
  CHECK_FALSE(h->compare_exchange(stale, srt({1})));
  CHECK(stale == first);
  CHECK(h->generation() == 0);
}

TEST_CASE("handle ids are unique")
{
  const HandlePtr a = make_handle(arr({}));
  const HandlePtr b = make_handle(arr({}));
  CHECK(a->id() != b->id());
  CHECK(a->id() != 0);
}

TEST_CASE("identical and freeze")
{
  const HandlePtr leaf = make_handle(arr({2, 1}));
  const HandlePtr root = make_handle(make_bintree(2, make_handle(arr({1})), leaf));
  const NodePtr snapshot = freeze(root->load());
  CHECK(identical(*snapshot, *root->load()));

  NodePtr expected = leaf->load();
  REQUIRE(leaf->compare_exchange(expected, srt({1, 2})));
  CHECK_FALSE(identical(*snapshot, *root->load()));
  CHECK(snapshot->right()->load()->kind() == NodeKind::kArray);

  CHECK(identical(*make_bintree(3, arr({1}), arr({4})), *make_bintree(3, arr({1}), arr({4}))));
  CHECK_FALSE(identical(*make_bintree(3, arr({1}), arr({4})), *make_bintree(2, arr({1}), arr({4}))));
  CHECK_FALSE(identical(*arr({1, 2}), *srt({1, 2})));
}

TEST_CASE("reachable handles")
{
  const NodePtr tree = make_concat(make_bintree(4, arr({1}), arr({5})), arr({9}));
  const HandlePtr root = make_handle(tree);
  const auto hs = reachable_handles(root);
  CHECK(hs.size() == 5);
  CHECK(hs.front() == root);
}

TEST_CASE("bag ignores order and keeps multiplicity")
{
  CHECK(Bag{{{1, 1}, {2, 2}}} == Bag{{{2, 2}, {1, 1}}});
  CHECK_FALSE(Bag{{{1, 1}}} == Bag{{{1, 1}, {1, 1}}});
  CHECK(Bag{{{1, 1}, {1, 1}}}.count({1, 1}) == 2);
}
