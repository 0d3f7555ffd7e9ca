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

#ifndef ADAPTIDX_INDEX_HPP
#define ADAPTIDX_INDEX_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "adaptidx/cog.hpp"
#include "adaptidx/policy.hpp"

namespace adaptidx
{
/// First record with key `key` under `root`, searching Concat children left to right and
/// descending BinTrees by separator.
std::optional<Record> get(const HandlePtr& root, Key key);

/**
 * Visits every record with key >= lower under a pinned root, left to right, in no
 * particular key order. Handles are dereferenced lazily; since a handle's target only
 * ever changes to a logically equivalent node, the visited bag is the one present when
 * the iterator was created.
 */
class UnorderedIterator
{
 public:
  UnorderedIterator(HandlePtr root, Key lower);

  bool valid() const { return leaf_ != nullptr; }
  const Record& get() const { return leaf_->records()[pos_]; }
  void step();

 private:
  void advance();

  Key lower_;
  std::vector<HandlePtr> pending_;
  NodePtr leaf_;
  std::size_t pos_ = 0;
};

/**
 * Visits every record with key >= lower in nondecreasing key order. Array leaves reached
 * by the iterator are sorted first and the sorted node swapped into their handle, so the
 * work benefits later readers. Concat children are merged on the fly; BinTree right
 * children are only loaded once the left side is exhausted.
 */
class OrderedIterator
{
 public:
  class Cursor;

  OrderedIterator(HandlePtr root, Key lower);
  OrderedIterator(OrderedIterator&&) noexcept;
  OrderedIterator& operator=(OrderedIterator&&) noexcept;
  ~OrderedIterator();

  bool valid() const;
  const Record& get() const;
  void step();

  /// Advances to the first record with key >= k. Never moves backwards.
  void seek(Key k);

 private:
  std::unique_ptr<Cursor> cursor_;
};

/**
 * The adaptive index. Readers call get/iterator/ordered_iterator from any thread without
 * blocking. One updater thread may insert. A background worker applies the policy's
 * transforms; it can be paused so that the caller drives reorganization through
 * optimize().
 */
class Index
{
 public:
  using StepObserver = std::function<void(const StepReport&)>;

  explicit Index(ScoringFunction policy, std::vector<Record> initial = {});
  ~Index();

  Index(const Index&) = delete;
  Index& operator=(const Index&) = delete;

  std::optional<Record> get(Key key) const;
  UnorderedIterator iterator(Key lower = kMinKey) const;
  OrderedIterator ordered_iterator(Key lower = kMinKey) const;

  /// Wraps the current root and a new Array leaf holding `batch` under a fresh root
  /// handle. Single updater only. No-op for an empty batch.
  void insert(std::vector<Record> batch);

  void start_worker();
  /// Returns once the worker sits at a step boundary; no swaps happen until resume.
  void pause_worker();
  void resume_worker();
  void stop_worker();

  /// Applies up to `max_steps` transforms on the calling thread. Only valid while the
  /// worker is paused or not running. Returns the number applied.
  std::size_t optimize(std::size_t max_steps, const StepObserver& observer = nullptr);

  bool converged() const;
  bool wait_until_converged(std::chrono::milliseconds timeout) const;

  std::uint64_t transforms_applied() const { return transforms_.load(std::memory_order_relaxed); }
  HandlePtr root() const { return std::atomic_load_explicit(&root_, std::memory_order_acquire); }

 private:
  void worker_loop();
  void publish_state();

  HandlePtr root_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  PolicyQueue queue_;
  std::thread worker_;
  std::atomic<bool> pause_requested_{false};
  std::atomic<bool> stopping_{false};
  bool paused_ = false;
  std::atomic<const Handle*> adopted_{nullptr};
  std::atomic<bool> converged_{false};
  std::atomic<std::uint64_t> transforms_{0};
};

}  // namespace adaptidx

#endif  // ADAPTIDX_INDEX_HPP
