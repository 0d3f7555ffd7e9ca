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

#include "adaptidx/policy.hpp"
#include "oracles.hpp"

using namespace adaptidx;

namespace
{
NodePtr arr_n(std::size_t n, Key offset = 0)
{
  std::vector<Record> recs(n);
  for (std::size_t i = 0; i < n; ++i) recs[i] = {offset + static_cast<Key>((i * 7919) % n), static_cast<Value>(i)};
  return make_array(std::move(recs));
}

NodePtr srt_n(std::size_t n)
{
  std::vector<Record> recs(n);
  for (std::size_t i = 0; i < n; ++i) recs[i] = {static_cast<Key>(i), 0};
  return make_sorted(std::move(recs));
}

bool is_single_sorted_of(const NodePtr& root, const Bag& expected)
{
  if (root->kind() != NodeKind::kSorted) return false;
  return is_structurally_correct(*root) && contents(*root) == expected;
}
}  // namespace

TEST_CASE("crack-sort-merge scores")
{
  const auto score = score_crack_sort_merge(1000);
  CHECK(score(AtomicTransform::kSort, *arr_n(500)) == 500);
  CHECK(score(AtomicTransform::kCrack, *arr_n(500)) == 0);
  CHECK(score(AtomicTransform::kCrack, *arr_n(5000)) == 5000);
  CHECK(score(AtomicTransform::kSort, *arr_n(5000)) == 0);
  CHECK(score(AtomicTransform::kSort, *arr_n(1000)) == 1000);
  CHECK(score(AtomicTransform::kCrack, *arr_n(1000)) == 0);
  CHECK(score(AtomicTransform::kCrack, *arr_n(1001)) == 1001);
  CHECK(score(AtomicTransform::kSort, *srt_n(500)) == 0);
  CHECK(score(AtomicTransform::kMerge, *make_bintree(10, srt_n(10), srt_n(20))) == 30);
  CHECK(score(AtomicTransform::kMerge, *make_concat(srt_n(10), arr_n(20))) == 0);
  CHECK(score(AtomicTransform::kDivide, *arr_n(5000)) == 0);
  CHECK(score(AtomicTransform::kPivotLeft, *make_bintree(1, srt_n(1), make_bintree(2, srt_n(1), srt_n(1)))) == 0);

  const auto no_merge = score_crack_sort(1000);
  CHECK(no_merge(AtomicTransform::kMerge, *make_bintree(10, srt_n(10), srt_n(20))) == 0);
  CHECK(no_merge(AtomicTransform::kSort, *arr_n(500)) == 500);

  CHECK_THROWS_AS(score_crack_sort_merge(1), std::invalid_argument);
  CHECK_THROWS_AS(score_crack_sort(0), std::invalid_argument);
}

TEST_CASE("arrays whose crack cannot split are sorted")
{
  const auto score = score_crack_sort_merge(4);
  const NodePtr dupes = make_array(records_from_keys({7, 7, 7, 7, 7, 7}));
  CHECK(score(AtomicTransform::kCrack, *dupes) == 0);
  CHECK(score(AtomicTransform::kSort, *dupes) == 6);

  const HandlePtr root = make_handle(dupes);
  const auto result = run_to_convergence(root, score);
  CHECK(result.converged);
  CHECK(root->load()->kind() == NodeKind::kSorted);
}

TEST_CASE("scores match the rule table")
{
  std::mt19937_64 rng{21};
  for (std::size_t theta : {2, 3, 8, 40}) {
    for (bool merge : {true, false}) {
      const auto score = merge ? score_crack_sort_merge(theta) : score_crack_sort(theta);
      for (int i = 0; i < 200; ++i) {
        const NodePtr inst = oracle::random_instance(rng, {.max_records = 60, .key_range = 20});
        for (const NodePtr& n : descendants(inst)) {
          for (AtomicTransform t : kAtomicTransforms) CHECK(score(t, *n) == oracle::rule_score(t, *n, theta, merge));
        }
      }
    }
  }
}

TEST_CASE("a positive score implies the transform changes the node")
{
  std::mt19937_64 rng{22};
  const auto score = score_crack_sort_merge(8);
  int checked = 0;
  while (checked < 10000) {
    const NodePtr inst = oracle::random_instance(rng, {.max_records = 40, .key_range = 10});
    for (const NodePtr& n : descendants(inst)) {
      const AtomicTransform t = kAtomicTransforms[rng() % kAtomicTransforms.size()];
      if (score(t, *n) > 0) CHECK(apply_atomic(t, n) != n);
      ++checked;
    }
  }
}

TEST_CASE("build_queue")
{
  SUBCASE("large array is cracked")
  {
    const HandlePtr root = make_handle(arr_n(10));
    const auto q = build_queue(root, score_crack_sort_merge(5));
    REQUIRE(q.entries().size() == 1);
    CHECK(q.entries()[0] == TargetEntry{root->id(), AtomicTransform::kCrack, 10});
  }
  SUBCASE("sorted leaf has nothing to do")
  {
    const auto q = build_queue(make_handle(srt_n(10)), score_crack_sort_merge(5));
    CHECK(q.converged());
    CHECK(q.size() == 0);
  }
  SUBCASE("concat of small arrays sorts both")
  {
    const HandlePtr l = make_handle(arr_n(3));
    const HandlePtr r = make_handle(arr_n(4));
    const auto q = build_queue(make_handle(make_concat(l, r)), score_crack_sort_merge(100));
    const std::vector<TargetEntry> expected{{l->id(), AtomicTransform::kSort, 3}, {r->id(), AtomicTransform::kSort, 4}};
    CHECK(q.entries() == expected);
  }
}

TEST_CASE("one step on a crackable array")
{
  const HandlePtr root = make_handle(arr_n(10));
  auto q = build_queue(root, score_crack_sort_merge(5));
  REQUIRE(q.step());
  const NodePtr n = root->load();
  REQUIRE(n->kind() == NodeKind::kBinTree);
  CHECK(q.last_step().atomic == AtomicTransform::kCrack);
  CHECK(q.last_step().records == 10);
  const auto entries = q.entries();
  CHECK(entries == oracle::best_entries(root, score_crack_sort_merge(5)));
  CHECK(entries.size() == 2);
  for (const auto& e : entries) CHECK(e.handle != root->id());
}

TEST_CASE("empty queue does not step")
{
  const NodePtr s = srt_n(4);
  const HandlePtr root = make_handle(s);
  auto q = build_queue(root, score_crack_sort_merge(5));
  CHECK_FALSE(q.step());
  CHECK(root->load() == s);
}

TEST_CASE("ties go to the smaller handle id")
{
  const HandlePtr l = make_handle(arr_n(4));
  const HandlePtr r = make_handle(arr_n(4, 100));
  const HandlePtr root = make_handle(make_concat(l, r));
  auto q = build_queue(root, score_crack_sort_merge(100));
  REQUIRE(q.step());
  CHECK(q.last_step().handle == std::min(l->id(), r->id()));
}

TEST_CASE("queue matches the from-scratch oracle and deltas stay bounded")
{
  std::mt19937_64 rng{23};
  for (int i = 0; i < 150; ++i) {
    const std::size_t theta = 2 + rng() % 30;
    const bool merge = rng() % 4 != 0;
    const auto score = merge ? score_crack_sort_merge(theta) : score_crack_sort(theta);
    const HandlePtr root = make_handle(oracle::random_instance(rng, {.max_records = 200, .key_range = 60}));
    const Bag before = contents(*root->load());
    PolicyQueue q{score, root};
    CHECK(q.entries() == oracle::best_entries(root, score));
    auto targets = oracle::weighted_targets(root, score);
    while (q.step()) {
      const auto next = oracle::weighted_targets(root, score);
      CHECK(oracle::symmetric_difference(targets, next) <= 4 * kAtomicTransforms.size());
      CHECK(q.last_step().insertions + q.last_step().removals <= 4 * kAtomicTransforms.size());
      CHECK(q.entries() == oracle::best_entries(root, score));
      CHECK(contents(*root->load()) == before);
      CHECK(is_structurally_correct(*root->load()));
      targets = next;
    }
    CHECK(oracle::best_entries(root, score).empty());
  }
}

TEST_CASE("run_to_convergence")
{
  SUBCASE("eight distinct keys, theta 4")
  {
    const NodePtr start = make_array(records_from_keys({7, 3, 6, 0, 4, 2, 5, 1}));
    const HandlePtr root = make_handle(start);
    const auto result = run_to_convergence(root, score_crack_sort_merge(4));
    CHECK(result.converged);
    CHECK(result.steps == 4);
    CHECK(is_single_sorted_of(root->load(), contents(*start)));
  }
  SUBCASE("sorted input takes no steps")
  {
    const HandlePtr root = make_handle(srt_n(100));
    const auto result = run_to_convergence(root, score_crack_sort_merge(4));
    CHECK(result.converged);
    CHECK(result.steps == 0);
  }
  SUBCASE("threshold above the size sorts once")
  {
    const HandlePtr root = make_handle(arr_n(100));
    const auto result = run_to_convergence(root, score_crack_sort_merge(101));
    CHECK(result.steps == 1);
    CHECK(root->load()->kind() == NodeKind::kSorted);
  }
  SUBCASE("threshold equal to the size sorts once")
  {
    const HandlePtr root = make_handle(arr_n(100));
    CHECK(run_to_convergence(root, score_crack_sort_merge(100)).steps == 1);
  }
  SUBCASE("step budget")
  {
    const HandlePtr root = make_handle(arr_n(1000));
    const auto result = run_to_convergence(root, score_crack_sort_merge(10), {.max_steps = 3});
    CHECK(result.steps == 3);
    CHECK_FALSE(result.converged);
  }
}

TEST_CASE("crack-sort-merge converges within the bound on random instances")
{
  std::mt19937_64 rng{24};
  for (int i = 0; i < 100; ++i) {
    const std::size_t theta = 2 + rng() % 50;
    const NodePtr start = oracle::random_instance(rng, {.max_records = 2000, .key_range = 500});
    const HandlePtr root = make_handle(start);
    const std::size_t n = record_count(*start);
    const auto result = run_to_convergence(root, score_crack_sort_merge(theta));
    CHECK(result.converged);
    CHECK(result.steps <= oracle::convergence_step_bound(n, theta));
    CHECK(is_single_sorted_of(root->load(), contents(*start)));
  }
}

TEST_CASE("crack-sort without merge converges to sorted leaves")
{
  std::mt19937_64 rng{25};
  const NodePtr start = make_array(oracle::random_records(rng, 5000, 1'000'000));
  const HandlePtr root = make_handle(start);
  CHECK(run_to_convergence(root, score_crack_sort(100)).converged);
  for (const NodePtr& n : descendants(root->load())) CHECK(n->kind() != NodeKind::kArray);
  CHECK(is_structurally_correct(*root->load()));
  CHECK(contents(*root->load()) == contents(*start));
}

TEST_CASE("trace")
{
  const NodePtr start = make_array(records_from_keys({7, 3, 6, 0, 4, 2, 5, 1}));
  const auto score = score_crack_sort_merge(4);

  const auto zero = trace(start, score, 0);
  REQUIRE(zero.size() == 1);
  CHECK(identical(*zero[0], *start));

  const auto steps = trace(start, score, 6);
  REQUIRE(steps.size() == 7);
  for (std::size_t i = 1; i < steps.size(); ++i) CHECK(logically_equivalent(*steps[i - 1], *steps[i]));
  CHECK(steps[1]->kind() == NodeKind::kBinTree);
  CHECK(steps[4]->kind() == NodeKind::kSorted);
  CHECK(identical(*steps[4], *steps[6]));
  CHECK(start->kind() == NodeKind::kArray);

  const NodePtr done = srt_n(5);
  for (const NodePtr& s : trace(done, score, 3)) CHECK(identical(*s, *done));
}

TEST_CASE("adopting a wrapped root keeps existing entries")
{
  const HandlePtr old_root = make_handle(arr_n(50));
  PolicyQueue q{score_crack_sort_merge(10), old_root};
  REQUIRE(q.step());
  const HandlePtr fresh = make_handle(make_concat(old_root, make_handle(arr_n(5, 1000))));
  q.adopt_root(fresh);
  CHECK(q.entries() == oracle::best_entries(fresh, score_crack_sort_merge(10)));
  while (q.step()) {
  }
  CHECK(fresh->load()->kind() == NodeKind::kSorted);
  CHECK(record_count(*fresh->load()) == 55);
}
