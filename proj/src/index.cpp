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

#include "adaptidx/index.hpp"

#include <algorithm>

namespace adaptidx
{
/*######################################################################################
 * Point lookups
 *####################################################################################*/

std::optional<Record> get(const HandlePtr& root, Key key)
{
  NodePtr node = root->load();
  while (true) {
    switch (node->kind()) {
      case NodeKind::kArray: {
        const auto recs = node->records();
        const auto it = std::find_if(recs.begin(), recs.end(), [key](const Record& r) { return r.key == key; });
        if (it == recs.end()) return std::nullopt;
        return *it;
      }
      case NodeKind::kSorted: {
        const auto recs = node->records();
        const auto it = std::lower_bound(recs.begin(), recs.end(), key, KeyLess{});
        if (it == recs.end() || it->key != key) return std::nullopt;
        return *it;
      }
      case NodeKind::kConcat: {
        if (auto hit = adaptidx::get(node->left(), key)) return hit;
        node = node->right()->load();
        break;
      }
      case NodeKind::kBinTree:
        node = (node->separator() <= key ? node->right() : node->left())->load();
        break;
    }
  }
}

/*######################################################################################
 * Unordered iteration
 *####################################################################################*/

UnorderedIterator::UnorderedIterator(HandlePtr root, Key lower) : lower_{lower}
{
  pending_.push_back(std::move(root));
  advance();
}

void UnorderedIterator::step()
{
  ++pos_;
  advance();
}

void UnorderedIterator::advance()
{
  while (true) {
    if (leaf_) {
      const auto recs = leaf_->records();
      if (leaf_->kind() == NodeKind::kArray) {
        while (pos_ < recs.size() && recs[pos_].key < lower_) ++pos_;
      }
      if (pos_ < recs.size()) return;
      leaf_.reset();
    }
    if (pending_.empty()) return;
    const HandlePtr h = std::move(pending_.back());
    pending_.pop_back();
    NodePtr n = h->load();
    switch (n->kind()) {
      case NodeKind::kArray:
        leaf_ = std::move(n);
        pos_ = 0;
        break;
      case NodeKind::kSorted: {
        const auto recs = n->records();
        pos_ = static_cast<std::size_t>(std::lower_bound(recs.begin(), recs.end(), lower_, KeyLess{}) -
                                        recs.begin());
        leaf_ = std::move(n);
        break;
      }
      case NodeKind::kConcat:
        pending_.push_back(n->right());
        pending_.push_back(n->left());
        break;
      case NodeKind::kBinTree:
        pending_.push_back(n->right());
        // Everything on the left is below the separator.
        if (lower_ < n->separator()) pending_.push_back(n->left());
        break;
    }
  }
}

/*######################################################################################
 * Ordered iteration
 *####################################################################################*/

class OrderedIterator::Cursor
{
 public:
  virtual ~Cursor() = default;
  virtual bool valid() const = 0;
  virtual const Record& get() const = 0;
  virtual void step() = 0;
  virtual void seek(Key k) = 0;
};

namespace
{
using Cursor = OrderedIterator::Cursor;

std::unique_ptr<Cursor> open_cursor(const HandlePtr& h, Key lower);

class LeafCursor final : public Cursor
{
 public:
  LeafCursor(NodePtr sorted, Key lower) : node_{std::move(sorted)}, recs_{node_->records()}
  {
    seek(lower);
  }

  bool valid() const override { return pos_ < recs_.size(); }
  const Record& get() const override { return recs_[pos_]; }
  void step() override { ++pos_; }
  void seek(Key k) override
  {
    if (valid() && !(recs_[pos_].key < k)) return;
    pos_ = static_cast<std::size_t>(std::lower_bound(recs_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                                     recs_.end(), k, KeyLess{}) -
                                    recs_.begin());
  }

 private:
  NodePtr node_;
  std::span<const Record> recs_;
  std::size_t pos_ = 0;
};

// Two-way merge of a Concat's children; ties go left.
class MergeCursor final : public Cursor
{
 public:
  MergeCursor(std::unique_ptr<Cursor> l, std::unique_ptr<Cursor> r) : l_{std::move(l)}, r_{std::move(r)} {}

  bool valid() const override { return l_->valid() || r_->valid(); }
  const Record& get() const override { return current().get(); }
  void step() override { current().step(); }
  void seek(Key k) override
  {
    l_->seek(k);
    r_->seek(k);
  }

 private:
  Cursor& current() const
  {
    if (!r_->valid()) return *l_;
    if (!l_->valid()) return *r_;
    return r_->get().key < l_->get().key ? *r_ : *l_;
  }

  std::unique_ptr<Cursor> l_;
  std::unique_ptr<Cursor> r_;
};

// In-order walk of a BinTree; the right child is opened only when needed.
class BinTreeCursor final : public Cursor
{
 public:
  BinTreeCursor(Key separator, std::unique_ptr<Cursor> left, HandlePtr right, Key lower)
      : separator_{separator}, current_{std::move(left)}, right_{std::move(right)}, lower_{lower}
  {
    settle();
  }

  bool valid() const override { return current_->valid(); }
  const Record& get() const override { return current_->get(); }
  void step() override
  {
    current_->step();
    settle();
  }
  void seek(Key k) override
  {
    lower_ = std::max(lower_, k);
    if (right_ && !(k < separator_)) {
      switch_right();
      return;
    }
    current_->seek(k);
    settle();
  }

 private:
  void settle()
  {
    if (right_ && !current_->valid()) switch_right();
  }

  void switch_right()
  {
    current_ = open_cursor(right_, lower_);
    right_.reset();
  }

  Key separator_;
  std::unique_ptr<Cursor> current_;
  HandlePtr right_;
  Key lower_;
};

NodePtr force_sort(const HandlePtr& h, NodePtr node)
{
  // Swap a sorted copy into the handle. If another thread got there first, retry once
  // against whatever it installed; after that, fall back to a private sorted copy.
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (node->kind() != NodeKind::kArray) return node;
    NodePtr sorted = apply_atomic(AtomicTransform::kSort, node);
    if (h->compare_exchange(node, sorted)) return sorted;
  }
  if (node->kind() != NodeKind::kArray) return node;
  return apply_atomic(AtomicTransform::kSort, node);
}

std::unique_ptr<Cursor> open_cursor(const HandlePtr& h, Key lower)
{
  NodePtr n = h->load();
  if (n->kind() == NodeKind::kArray) n = force_sort(h, std::move(n));

  switch (n->kind()) {
    case NodeKind::kArray:
    case NodeKind::kSorted:
      return std::make_unique<LeafCursor>(std::move(n), lower);
    case NodeKind::kConcat:
      return std::make_unique<MergeCursor>(open_cursor(n->left(), lower), open_cursor(n->right(), lower));
    case NodeKind::kBinTree:
      if (!(lower < n->separator())) return open_cursor(n->right(), lower);
      return std::make_unique<BinTreeCursor>(n->separator(), open_cursor(n->left(), lower), n->right(), lower);
  }
  return nullptr;
}
}  // namespace

OrderedIterator::OrderedIterator(HandlePtr root, Key lower) : cursor_{open_cursor(root, lower)} {}
OrderedIterator::OrderedIterator(OrderedIterator&&) noexcept = default;
OrderedIterator& OrderedIterator::operator=(OrderedIterator&&) noexcept = default;
OrderedIterator::~OrderedIterator() = default;

bool OrderedIterator::valid() const { return cursor_->valid(); }
const Record& OrderedIterator::get() const { return cursor_->get(); }
void OrderedIterator::step() { cursor_->step(); }
void OrderedIterator::seek(Key k) { cursor_->seek(k); }

/*######################################################################################
 * Index
 *####################################################################################*/

Index::Index(ScoringFunction policy, std::vector<Record> initial)
    : root_{make_handle(make_array(std::move(initial)))}, queue_{std::move(policy), root_}
{
  publish_state();
}

Index::~Index() { stop_worker(); }

std::optional<Record> Index::get(Key key) const { return adaptidx::get(root(), key); }

UnorderedIterator Index::iterator(Key lower) const { return UnorderedIterator{root(), lower}; }

OrderedIterator Index::ordered_iterator(Key lower) const { return OrderedIterator{root(), lower}; }

void Index::insert(std::vector<Record> batch)
{
  if (batch.empty()) return;
  HandlePtr next = make_handle(make_concat(root(), make_handle(make_array(std::move(batch)))));
  std::atomic_store_explicit(&root_, std::move(next), std::memory_order_release);
  // The worker also polls, so a notification racing its wait only delays it.
  cv_.notify_all();
}

void Index::start_worker()
{
  std::lock_guard lock{mutex_};
  if (worker_.joinable()) return;
  stopping_ = false;
  worker_ = std::thread{[this] { worker_loop(); }};
}

void Index::pause_worker()
{
  pause_requested_ = true;
  std::unique_lock lock{mutex_};
  if (!worker_.joinable()) return;
  cv_.wait(lock, [this] { return paused_; });
}

void Index::resume_worker()
{
  pause_requested_ = false;
  cv_.notify_all();
}

void Index::stop_worker()
{
  stopping_ = true;
  cv_.notify_all();
  std::thread worker;
  {
    std::lock_guard lock{mutex_};
    worker = std::move(worker_);
  }
  if (worker.joinable()) worker.join();
}

void Index::publish_state()
{
  adopted_.store(queue_.root().get(), std::memory_order_release);
  converged_.store(queue_.converged(), std::memory_order_release);
}

void Index::worker_loop()
{
  // Waits poll as well, since notifications are sent without holding the mutex.
  constexpr auto kPoll = std::chrono::milliseconds{5};
  std::unique_lock lock{mutex_};
  while (!stopping_) {
    if (pause_requested_) {
      paused_ = true;
      cv_.notify_all();
      cv_.wait_for(lock, kPoll, [this] { return stopping_ || !pause_requested_; });
      if (!pause_requested_) paused_ = false;
      continue;
    }
    queue_.adopt_root(root());
    if (queue_.step()) transforms_.fetch_add(1, std::memory_order_relaxed);
    publish_state();
    if (!converged_.load(std::memory_order_relaxed)) continue;
    cv_.wait_for(lock, kPoll, [this] { return stopping_ || pause_requested_ || root() != queue_.root(); });
  }
  paused_ = false;
}

std::size_t Index::optimize(std::size_t max_steps, const StepObserver& observer)
{
  std::lock_guard lock{mutex_};
  queue_.adopt_root(root());
  std::size_t applied = 0;
  while (applied < max_steps && queue_.step()) {
    ++applied;
    transforms_.fetch_add(1, std::memory_order_relaxed);
    if (observer) observer(queue_.last_step());
  }
  publish_state();
  return applied;
}

bool Index::converged() const
{
  return converged_.load(std::memory_order_acquire) &&
         adopted_.load(std::memory_order_acquire) == root().get();
}

bool Index::wait_until_converged(std::chrono::milliseconds timeout) const
{
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!converged()) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds{1});
  }
  return true;
}

}  // namespace adaptidx
