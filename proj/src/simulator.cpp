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

#include "adaptidx/simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace adaptidx
{
namespace
{
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<CostFunction, 5> kCostFunctions{CostFunction::kAlpha, CostFunction::kBeta, CostFunction::kGamma,
                                                     CostFunction::kDelta, CostFunction::kNu};

double log2_or_zero(double n) { return n > 1.0 ? std::log2(n) : 0.0; }

FittedCost fit_one(CostFunction f, const std::vector<const Measurement*>& samples)
{
  const auto mean_of = [&samples] {
    double sum = 0.0;
    for (const auto* m : samples) sum += m->nanoseconds;
    return sum / static_cast<double>(samples.size());
  };

  if (f == CostFunction::kGamma) {
    if (samples.empty()) throw std::invalid_argument{"insufficient measurements for gamma: need at least one sample"};
    return {0.0, std::max(0.0, mean_of())};
  }

  std::set<double> distinct;
  for (const auto* m : samples) distinct.insert(m->n);
  if (distinct.size() < 3) {
    throw std::invalid_argument{"insufficient measurements for " + std::string{to_string(f)} +
                                ": need at least 3 distinct N"};
  }

  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(rows, 2);
  Eigen::VectorXd observed(rows);
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Measurement& m = *samples[static_cast<std::size_t>(i)];
    design(i, 0) = cost_shape(f, m.n);
    design(i, 1) = 1.0;
    observed(i) = m.nanoseconds;
    smallest = std::min(smallest, m.nanoseconds);
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(observed);
  FittedCost out{coef(0), coef(1)};

  // With a nonnegative slope the intercept cannot exceed the cheapest observation. Noise
  // at large N can push it far past that; pin it and refit the slope.
  const double pinned = std::clamp(out.b, 0.0, std::max(0.0, smallest));
  if (pinned != out.b) {
    const Eigen::VectorXd x = design.col(0);
    const double denom = x.squaredNorm();
    const Eigen::VectorXd rest = observed.array() - pinned;
    out = {denom > 0.0 ? x.dot(rest) / denom : 0.0, pinned};
  }
  if (out.a < 0.0) out = {0.0, std::max(0.0, mean_of())};
  return out;
}

LightNodePtr make_light(LightKind kind, std::size_t n, LightNodePtr l, LightNodePtr r)
{
  auto node = std::make_shared<LightNode>();
  node->kind = kind;
  node->n = n;
  node->left = std::move(l);
  node->right = std::move(r);
  return node;
}

LightScoringFunction light_family(std::size_t theta, bool merge)
{
  if (theta < 2) throw std::invalid_argument{"crack threshold must be at least 2"};
  return [theta, merge](AtomicTransform t, const LightView& v) -> Score {
    switch (t) {
      case AtomicTransform::kSort:
        if (v.kind != LightKind::kArray || v.n > theta) return 0;
        return std::max<Score>(v.n, 1);
      case AtomicTransform::kCrack:
        return v.kind == LightKind::kArray && v.n > theta ? v.n : 0;
      case AtomicTransform::kMerge:
        if (!merge || v.left_kind != LightKind::kSorted || v.right_kind != LightKind::kSorted) return 0;
        return std::max<Score>(v.left_n + v.right_n, 1);
      default:
        return 0;
    }
  };
}

/*######################################################################################
 * Arena-based light scheduler
 *####################################################################################*/

class LightScheduler
{
 public:
  LightScheduler(const LightScoringFunction& score, const CostModel& model) : score_{score}, model_{model} {}

  void load(const LightNode& root)
  {
    build(root, -1);
    recompute();
    for (std::size_t i = 0; i < slots_.size(); ++i) rescore(static_cast<int>(i));
  }

  bool empty() const { return ordered_.empty(); }
  double latency() const { return latency_; }

  // Applies the best transform; returns it with its modeled cost.
  std::optional<SimulatedStep> step()
  {
    while (!ordered_.empty()) {
      const int x = ordered_.begin()->second;
      ordered_.erase(ordered_.begin());
      const ScoredTransform chosen = *slots_[x].best;
      slots_[x].best.reset();
      if (auto done = apply(x, chosen.atomic)) return done;
      rescore(x);
    }
    return std::nullopt;
  }

 private:
  struct Slot {
    LightKind kind = LightKind::kArray;
    std::size_t n = 0;
    int left = -1;
    int right = -1;
    int parent = -1;
    std::size_t size = 0;
    double weight = 0.0;
    bool alive = true;
    std::optional<ScoredTransform> best;
  };

  struct Order {
    bool operator()(const std::pair<Score, int>& a, const std::pair<Score, int>& b) const
    {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    }
  };

  int build(const LightNode& node, int parent)
  {
    const int self = add(node.kind, node.n, parent);
    if (node.kind == LightKind::kConcat || node.kind == LightKind::kBinTree) {
      const int l = build(*node.left, self);
      const int r = build(*node.right, self);
      slots_[self].left = l;
      slots_[self].right = r;
      slots_[self].size = slots_[l].size + slots_[r].size;
    }
    return self;
  }

  int add(LightKind kind, std::size_t n, int parent)
  {
    Slot s;
    s.kind = kind;
    s.n = n;
    s.parent = parent;
    s.size = n;
    slots_.push_back(s);
    return static_cast<int>(slots_.size() - 1);
  }

  bool inner(int i) const { return slots_[i].kind == LightKind::kConcat || slots_[i].kind == LightKind::kBinTree; }

  double own_cost(int i) const
  {
    const Slot& s = slots_[i];
    switch (s.kind) {
      case LightKind::kArray: return model_.array_get(static_cast<double>(s.n));
      case LightKind::kSorted: return model_.sorted_get(static_cast<double>(s.n));
      case LightKind::kBinTree: return s.size == 0 ? 0.0 : model_.bintree_descent();
      case LightKind::kConcat: return 0.0;
    }
    return 0.0;
  }

  static double share(std::size_t part, std::size_t whole)
  {
    return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
  }

  void set_child_weights(int i)
  {
    Slot& s = slots_[i];
    if (!inner(i)) return;
    Slot& l = slots_[s.left];
    Slot& r = slots_[s.right];
    l.weight = s.kind == LightKind::kConcat ? s.weight : s.weight * share(l.size, s.size);
    r.weight = s.weight * share(r.size, s.size);
  }

  // Latency is the sum over live nodes of weight * own cost.
  void recompute()
  {
    latency_ = 0.0;
    if (slots_.empty()) return;
    std::vector<int> stack{root_};
    slots_[root_].weight = 1.0;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      set_child_weights(i);
      latency_ += slots_[i].weight * own_cost(i);
      if (inner(i)) {
        stack.push_back(slots_[i].right);
        stack.push_back(slots_[i].left);
      }
    }
  }

  LightView view(int i) const
  {
    const Slot& s = slots_[i];
    LightView v;
    v.kind = s.kind;
    v.n = inner(i) ? 0 : s.n;
    if (inner(i)) {
      const Slot& l = slots_[s.left];
      const Slot& r = slots_[s.right];
      v.left_kind = l.kind;
      v.right_kind = r.kind;
      v.left_n = (l.kind == LightKind::kArray || l.kind == LightKind::kSorted) ? l.n : 0;
      v.right_n = (r.kind == LightKind::kArray || r.kind == LightKind::kSorted) ? r.n : 0;
    }
    return v;
  }

  void rescore(int i)
  {
    if (i < 0) return;
    Slot& s = slots_[i];
    if (s.best) ordered_.erase({s.best->score, i});
    s.best.reset();
    if (!s.alive) return;
    const LightView v = view(i);
    for (AtomicTransform t : kAtomicTransforms) {
      if (t == AtomicTransform::kIdentity) continue;
      const Score sc = score_(t, v);
      if (sc > 0 && (!s.best || sc > s.best->score)) s.best = ScoredTransform{t, sc};
    }
    if (s.best) ordered_.insert({s.best->score, i});
  }

  void kill(int i)
  {
    Slot& s = slots_[i];
    if (s.best) ordered_.erase({s.best->score, i});
    s.best.reset();
    s.alive = false;
  }

  void split(int x, LightKind kind, double cost)
  {
    const std::size_t n = slots_[x].n;
    const int l = add(LightKind::kArray, n / 2, x);
    const int r = add(LightKind::kArray, n - n / 2, x);
    latency_ -= slots_[x].weight * own_cost(x);
    Slot& s = slots_[x];
    s.kind = kind;
    s.n = 0;
    s.left = l;
    s.right = r;
    set_child_weights(x);
    latency_ += s.weight * own_cost(x) + slots_[l].weight * own_cost(l) + slots_[r].weight * own_cost(r);
    rescore(l);
    rescore(r);
    last_cost_ = cost;
  }

  std::optional<SimulatedStep> apply(int x, AtomicTransform t)
  {
    Slot& s = slots_[x];
    const std::size_t records = s.size;
    switch (t) {
      case AtomicTransform::kSort:
      case AtomicTransform::kUnSort: {
        const LightKind from = t == AtomicTransform::kSort ? LightKind::kArray : LightKind::kSorted;
        if (s.kind != from) return std::nullopt;
        latency_ -= s.weight * own_cost(x);
        s.kind = t == AtomicTransform::kSort ? LightKind::kSorted : LightKind::kArray;
        latency_ += s.weight * own_cost(x);
        last_cost_ = t == AtomicTransform::kSort ? model_.sort(static_cast<double>(s.n))
                                                 : model_.crack(static_cast<double>(s.n));
        break;
      }
      case AtomicTransform::kCrack:
      case AtomicTransform::kDivide: {
        if (s.kind != LightKind::kArray || s.n < 2) return std::nullopt;
        split(x, t == AtomicTransform::kCrack ? LightKind::kBinTree : LightKind::kConcat,
              model_.crack(static_cast<double>(s.n)));
        break;
      }
      case AtomicTransform::kMerge: {
        if (!inner(x)) return std::nullopt;
        const LightKind lk = slots_[s.left].kind;
        const LightKind rk = slots_[s.right].kind;
        if (lk != rk || (lk != LightKind::kArray && lk != LightKind::kSorted)) return std::nullopt;
        latency_ -= s.weight * own_cost(x) + slots_[s.left].weight * own_cost(s.left) +
                    slots_[s.right].weight * own_cost(s.right);
        kill(s.left);
        kill(s.right);
        s.kind = lk;
        s.n = s.size;
        s.left = s.right = -1;
        latency_ += s.weight * own_cost(x);
        last_cost_ = model_.merge(static_cast<double>(s.n));
        break;
      }
      case AtomicTransform::kPivotLeft:
      case AtomicTransform::kPivotRight: {
        const bool to_left = t == AtomicTransform::kPivotLeft;
        if (!inner(x)) return std::nullopt;
        const int pivot_child = to_left ? s.right : s.left;
        if (slots_[pivot_child].kind != s.kind) return std::nullopt;
        // The inner child is retired and a fresh node holds the regrouped pair.
        const int c1 = to_left ? s.left : slots_[pivot_child].left;
        const int c2 = to_left ? slots_[pivot_child].left : slots_[pivot_child].right;
        const int c3 = to_left ? slots_[pivot_child].right : s.right;
        kill(pivot_child);
        const int fresh = add(s.kind, 0, x);
        Slot& f = slots_[fresh];
        Slot& self = slots_[x];
        if (to_left) {
          f.left = c1;
          f.right = c2;
          self.left = fresh;
          self.right = c3;
        } else {
          f.left = c2;
          f.right = c3;
          self.left = c1;
          self.right = fresh;
        }
        f.size = slots_[f.left].size + slots_[f.right].size;
        slots_[f.left].parent = slots_[f.right].parent = fresh;
        slots_[self.left].parent = slots_[self.right].parent = x;
        recompute();
        rescore(fresh);
        last_cost_ = model_.bintree_descent();
        break;
      }
      case AtomicTransform::kIdentity:
        return std::nullopt;
    }
    rescore(x);
    rescore(slots_[x].parent);
    return SimulatedStep{t, records, last_cost_};
  }

  const LightScoringFunction& score_;
  const CostModel& model_;
  std::vector<Slot> slots_;
  std::set<std::pair<Score, int>, Order> ordered_;
  int root_ = 0;
  double latency_ = 0.0;
  double last_cost_ = 0.0;
};
}  // namespace

/*######################################################################################
 * Cost model
 *####################################################################################*/

std::string_view to_string(CostFunction f)
{
  switch (f) {
    case CostFunction::kAlpha: return "alpha";
    case CostFunction::kBeta: return "beta";
    case CostFunction::kGamma: return "gamma";
    case CostFunction::kDelta: return "delta";
    case CostFunction::kNu: return "nu";
  }
  return "?";
}

double cost_shape(CostFunction f, double n)
{
  switch (f) {
    case CostFunction::kAlpha:
    case CostFunction::kDelta: return n;
    case CostFunction::kBeta: return log2_or_zero(n);
    case CostFunction::kGamma: return 0.0;
    case CostFunction::kNu: return n * log2_or_zero(n);
  }
  return 0.0;
}

double CostModel::array_get(double n) const { return alpha.a * cost_shape(CostFunction::kAlpha, n) + alpha.b; }
double CostModel::sorted_get(double n) const { return beta.a * cost_shape(CostFunction::kBeta, n) + beta.b; }
double CostModel::crack(double n) const { return delta.a * cost_shape(CostFunction::kDelta, n) + delta.b; }
double CostModel::sort(double n) const { return nu.a * cost_shape(CostFunction::kNu, n) + nu.b; }

const FittedCost& CostModel::operator[](CostFunction f) const
{
  switch (f) {
    case CostFunction::kAlpha: return alpha;
    case CostFunction::kBeta: return beta;
    case CostFunction::kGamma: return gamma;
    case CostFunction::kDelta: return delta;
    case CostFunction::kNu: return nu;
  }
  return alpha;
}

FittedCost& CostModel::operator[](CostFunction f)
{
  return const_cast<FittedCost&>(static_cast<const CostModel&>(*this)[f]);
}

CostModel fit_cost_model(std::span<const Measurement> measurements)
{
  CostModel model;
  for (CostFunction f : kCostFunctions) {
    std::vector<const Measurement*> samples;
    for (const auto& m : measurements) {
      if (m.function == f) samples.push_back(&m);
    }
    model[f] = fit_one(f, samples);
  }
  return model;
}

void write_cost_model(std::ostream& out, const CostModel& model)
{
  const auto old_precision = out.precision(17);
  for (CostFunction f : kCostFunctions) out << to_string(f) << ' ' << model[f].a << ' ' << model[f].b << '\n';
  out.precision(old_precision);
}

CostModel read_cost_model(std::istream& in)
{
  CostModel model;
  std::set<CostFunction> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields{line};
    std::string name;
    FittedCost cost;
    std::string extra;
    if (!(fields >> name >> cost.a >> cost.b) || (fields >> extra)) {
      throw std::runtime_error{"line " + std::to_string(line_no) + ": expected `name a b`"};
    }
    const auto it = std::find_if(kCostFunctions.begin(), kCostFunctions.end(),
                                 [&name](CostFunction f) { return to_string(f) == name; });
    if (it == kCostFunctions.end()) {
      throw std::runtime_error{"line " + std::to_string(line_no) + ": unknown cost function `" + name + "`"};
    }
    if (cost.a < 0.0 || cost.b < 0.0) {
      throw std::runtime_error{"line " + std::to_string(line_no) + ": negative coefficient"};
    }
    model[*it] = cost;
    seen.insert(*it);
  }
  if (seen.size() != kCostFunctions.size()) throw std::runtime_error{"missing cost functions"};
  return model;
}

void save_cost_model(const std::filesystem::path& path, const CostModel& model)
{
  std::ofstream out{path};
  if (!out) throw std::runtime_error{"cannot write cost model " + path.string()};
  write_cost_model(out, model);
  if (!out) throw std::runtime_error{"cannot write cost model " + path.string()};
}

CostModel load_cost_model(const std::filesystem::path& path)
{
  std::ifstream in{path};
  if (!in) throw std::runtime_error{"cannot open cost model " + path.string()};
  try {
    return read_cost_model(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error{"invalid cost model " + path.string() + ": " + e.what()};
  }
}

/*######################################################################################
 * Light grammar
 *####################################################################################*/

std::size_t LightNode::size() const
{
  if (kind == LightKind::kArray || kind == LightKind::kSorted) return n;
  return left->size() + right->size();
}

LightNodePtr light_array(std::size_t n) { return make_light(LightKind::kArray, n, nullptr, nullptr); }
LightNodePtr light_sorted(std::size_t n) { return make_light(LightKind::kSorted, n, nullptr, nullptr); }
LightNodePtr light_concat(LightNodePtr left, LightNodePtr right)
{
  return make_light(LightKind::kConcat, 0, std::move(left), std::move(right));
}
LightNodePtr light_bintree(LightNodePtr left, LightNodePtr right)
{
  return make_light(LightKind::kBinTree, 0, std::move(left), std::move(right));
}

double predicted_latency(const LightNode& node, const CostModel& model)
{
  switch (node.kind) {
    case LightKind::kArray: return model.array_get(static_cast<double>(node.n));
    case LightKind::kSorted: return model.sorted_get(static_cast<double>(node.n));
    case LightKind::kConcat:
    case LightKind::kBinTree: {
      const double total = static_cast<double>(node.size());
      if (total == 0.0) return 0.0;
      const double right_share = static_cast<double>(node.right->size()) / total;
      const double right = right_share * predicted_latency(*node.right, model);
      if (node.kind == LightKind::kConcat) return predicted_latency(*node.left, model) + right;
      const double left_share = static_cast<double>(node.left->size()) / total;
      return model.bintree_descent() + left_share * predicted_latency(*node.left, model) + right;
    }
  }
  return 0.0;
}

LightScoringFunction light_score_crack_sort_merge(std::size_t theta) { return light_family(theta, true); }
LightScoringFunction light_score_crack_sort(std::size_t theta) { return light_family(theta, false); }

/*######################################################################################
 * Simulation
 *####################################################################################*/

double Simulation::time_to_convergence() const
{
  if (!converged || intervals.empty()) return kInf;
  return intervals.back().start_s;
}

Simulation simulate(const LightNode& initial, const LightScoringFunction& score, const CostModel& model,
                    double horizon_s)
{
  LightScheduler scheduler{score, model};
  scheduler.load(initial);

  Simulation out;
  double now = 0.0;
  while (true) {
    const double latency = scheduler.latency();
    if (scheduler.empty()) {
      out.intervals.push_back({now, std::max(now, horizon_s), latency, out.steps.size(), true});
      out.converged = true;
      break;
    }
    const auto applied = scheduler.step();
    if (!applied) continue;
    const double end = now + applied->cost_ns * 1e-9;
    if (end >= horizon_s) {
      out.intervals.push_back({now, horizon_s, latency, out.steps.size(), false});
      break;
    }
    out.intervals.push_back({now, end, latency, out.steps.size(), false});
    out.steps.push_back(*applied);
    now = end;
  }
  return out;
}

/*######################################################################################
 * Utilities and policy selection
 *####################################################################################*/

double evaluate_utility(std::span<const StatusInterval> intervals, const UtilityFunction& utility)
{
  return utility(intervals);
}

UtilityFunction time_until_latency_below(double latency_ns)
{
  return [latency_ns](std::span<const StatusInterval> intervals) {
    for (const auto& iv : intervals) {
      if (iv.latency_ns < latency_ns) return iv.start_s;
    }
    return kInf;
  };
}

UtilityFunction total_workload_time(std::size_t queries, double window_s)
{
  return [queries, window_s](std::span<const StatusInterval> intervals) {
    if (intervals.empty() || window_s <= 0.0) return 0.0;
    double integral_ns_s = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      const auto& iv = intervals[i];
      const double end = i + 1 == intervals.size() ? std::max(window_s, iv.end_s) : iv.end_s;
      const double overlap = std::min(end, window_s) - std::min(iv.start_s, window_s);
      integral_ns_s += std::max(0.0, overlap) * iv.latency_ns;
    }
    return static_cast<double>(queries) / window_s * integral_ns_s * 1e-9;
  };
}

UtilityFunction time_to_convergence()
{
  return [](std::span<const StatusInterval> intervals) {
    if (intervals.empty() || !intervals.back().converged) return kInf;
    return intervals.back().start_s;
  };
}

double evaluate_policy(const PolicySearch& search, std::size_t theta)
{
  const Simulation sim = simulate(*search.initial, search.family(theta), search.model, search.horizon_s);
  return evaluate_utility(sim.intervals, search.utility);
}

std::size_t optimize_policy(const PolicySearch& search, std::span<const std::size_t> candidates)
{
  if (candidates.empty()) throw std::invalid_argument{"no candidate thresholds"};
  std::size_t best = candidates.front();
  double best_utility = kInf;
  bool first = true;
  for (std::size_t theta : candidates) {
    const double u = evaluate_policy(search, theta);
    if (first || u < best_utility || (u == best_utility && theta < best)) {
      best = theta;
      best_utility = u;
      first = false;
    }
  }
  return best;
}

std::size_t optimize_policy(const PolicySearch& search, std::size_t lo, std::size_t hi)
{
  if (lo < 2 || hi < lo) throw std::invalid_argument{"threshold range must satisfy 2 <= lo <= hi"};
  std::vector<std::size_t> grid;
  for (std::size_t t = lo; t <= hi; t *= 2) {
    grid.push_back(t);
    if (t > hi / 2) break;
  }
  if (grid.back() != hi) grid.push_back(hi);

  std::map<std::size_t, double> memo;
  auto at = [&](std::size_t k) {
    auto it = memo.find(k);
    if (it == memo.end()) it = memo.emplace(k, evaluate_policy(search, grid[k])).first;
    return it->second;
  };
  // Ties prefer the smaller index, like the exhaustive search.
  auto better = [&](std::size_t i, std::size_t j) { return at(i) < at(j) || (at(i) == at(j) && i < j); };

  constexpr double kInvPhi = 0.6180339887498949;
  std::size_t a = 0;
  std::size_t b = grid.size() - 1;
  while (b - a > 2) {
    const auto span = static_cast<double>(b - a);
    std::size_t c = b - static_cast<std::size_t>(std::lround(span * kInvPhi));
    std::size_t d = a + static_cast<std::size_t>(std::lround(span * kInvPhi));
    if (c >= d) {
      c = a + (b - a) / 3;
      d = b - (b - a) / 3;
      if (c >= d) d = c + 1;
    }
    if (better(c, d)) {
      b = d;
    } else {
      a = c;
    }
  }
  std::size_t best = a;
  for (std::size_t k = a; k <= b; ++k) {
    if (better(k, best)) best = k;
  }
  // Polish against the immediate grid neighbours.
  while (true) {
    std::size_t next = best;
    if (best > 0 && better(best - 1, next)) next = best - 1;
    if (best + 1 < grid.size() && better(best + 1, next)) next = best + 1;
    if (next == best) break;
    best = next;
  }
  return grid[best];
}

}  // namespace adaptidx
