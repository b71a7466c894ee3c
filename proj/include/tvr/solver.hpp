#pragma once

// Reference solvers over ground-truth scene graphs plus the random sequence
// baseline.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tvr/random.hpp"
#include "tvr/transform.hpp"

namespace tvr {

struct SearchBudget {
  int max_len = 4;
  std::uint64_t node_limit = 5'000'000;
  std::chrono::milliseconds time_limit{30'000};
};

struct SolveResult {
  Transformation sequence;
  bool solved = false;
  std::uint64_t nodes_expanded = 0;
};

namespace detail {

/// All 330 atomics in (object, value) order.
inline const std::vector<AtomicTransformation>& all_atomics() {
  static const std::vector<AtomicTransformation> atomics = [] {
    std::vector<AtomicTransformation> v;
    for (int o = 0; o < kObjectCount; ++o) {
      for (int id = 0; id < kValueCount; ++id) v.push_back({o, ValueId{id}});
    }
    return v;
  }();
  return atomics;
}

}  // namespace detail

/// Exhaustive single-step scan. A step reproducing the whole final scene wins;
/// otherwise the first step with visible distance 0 is returned.
inline SolveResult solve_basic(const Scene& initial, const Scene& final) {
  SolveResult r;
  std::optional<AtomicTransformation> exact, visible_match;
  for (const auto& t : detail::all_atomics()) {
    ++r.nodes_expanded;
    const auto step = apply_atomic(initial, t, SimulationMode::Strict);
    if (step.violation || step.scene == initial) continue;
    if (!exact && step.scene == final) exact = t;
    if (!visible_match && scene_distance(step.scene, final) == 0) visible_match = t;
  }
  if (exact) visible_match = exact;
  if (visible_match) {
    r.sequence = {*visible_match};
    r.solved = judge(initial, final, 1, r.sequence).correct;
  }
  return r;
}

namespace detail {

class EventSearch {
public:
  EventSearch(const Scene& final, const SearchBudget& budget)
      : final_(final), budget_(budget), start_(std::chrono::steady_clock::now()) {}

  SolveResult run(const Scene& initial) {
    const int h0 = full_difference(initial, final_);
    best_h_ = h0;
    if (h0 == 0) {
      result_.solved = true;
      return result_;
    }
    for (int bound = h0; bound <= budget_.max_len && !exhausted_; ++bound) {
      path_.clear();
      if (dfs(initial, 0, h0, bound)) {
        result_.sequence = path_;
        result_.solved = true;
        return result_;
      }
    }
    result_.sequence = best_path_;
    return result_;
  }

private:
  struct Child {
    AtomicTransformation step;
    Scene scene;
    int h;
  };

  bool out_of_budget() {
    if (result_.nodes_expanded >= budget_.node_limit) return true;
    if ((result_.nodes_expanded & 0x3ff) == 0 &&
        std::chrono::steady_clock::now() - start_ >= budget_.time_limit) {
      return true;
    }
    return false;
  }

  bool dfs(const Scene& scene, int g, int h, int bound) {
    if (h == 0) return true;
    if (g + h > bound) return false;
    if (out_of_budget()) {
      exhausted_ = true;
      return false;
    }
    ++result_.nodes_expanded;

    std::vector<Child> reducing, others;
    for (const auto& t : all_atomics()) {
      const auto& cur = scene[t.object];
      if (t.kind() != AttributeKind::Position && cur.attribute(t.kind()) == t.value) continue;
      auto step = apply_atomic(scene, t, SimulationMode::Strict);
      if (step.violation) continue;
      const int before = slot_differences(cur, final_[t.object]);
      const int after = slot_differences(step.scene[t.object], final_[t.object]);
      const int child_h = h - before + after;
      if (g + 1 + child_h > bound) continue;
      (after < before ? reducing : others).push_back({t, std::move(step.scene), child_h});
    }
    for (auto* group : {&reducing, &others}) {
      for (auto& c : *group) {
        path_.push_back(c.step);
        if (c.h < best_h_) {
          best_h_ = c.h;
          best_path_ = path_;
        }
        if (dfs(c.scene, g + 1, c.h, bound)) return true;
        path_.pop_back();
        if (exhausted_) return false;
      }
    }
    return false;
  }

  const Scene& final_;
  SearchBudget budget_;
  std::chrono::steady_clock::time_point start_;
  SolveResult result_;
  Transformation path_;
  Transformation best_path_;
  int best_h_ = 0;
  bool exhausted_ = false;
};

}  // namespace detail

/// Iterative-deepening search for a Strict-valid sequence turning `initial`
/// into exactly `final` (invisible objects included). Children that bring a
/// slot to its target are tried first, in (object, value) order. On budget
/// exhaustion the closest partial sequence is returned with solved = false.
inline SolveResult solve_event(const Scene& initial, const Scene& final, const SearchBudget& budget = {}) {
  if (budget.max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  detail::check_comparable(initial, final);
  detail::EventSearch search(final, budget);
  auto r = search.run(initial);
  if (r.solved) {
    // never trust the search state alone
    r.solved = !r.sequence.empty() && judge(initial, final, static_cast<int>(r.sequence.size()), r.sequence).correct;
  }
  return r;
}

/// Non-repeating random pick of uniform length in [lo, hi].
template <class T>
std::vector<T> random_baseline(std::span<const T> candidates, int lo, int hi, Rng& rng) {
  if (lo < 0 || lo > hi) throw std::invalid_argument("invalid length range");
  if (candidates.size() < static_cast<std::size_t>(hi)) {
    throw std::invalid_argument("candidate pool of " + std::to_string(candidates.size()) +
                                " is smaller than maximum length " + std::to_string(hi));
  }
  const auto n = static_cast<std::size_t>(rng.between(lo, hi));
  // partial Fisher-Yates over an index permutation
  std::vector<std::size_t> idx(candidates.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(candidates[idx[i]]);
  }
  return out;
}

using BigInt = boost::multiprecision::cpp_int;

/// Sum over i = 1..max_len of (objects * values)^i.
inline BigInt search_space_size(int max_len, int objects, int values) {
  if (max_len < 1 || objects < 1 || values < 1) throw std::invalid_argument("arguments must be at least 1");
  const BigInt base = BigInt(objects) * values;
  BigInt term = 1, sum = 0;
  for (int i = 1; i <= max_len; ++i) {
    term *= base;
    sum += term;
  }
  return sum;
}

/// Decimal rendering with comma thousands separators.
inline std::string group_thousands(const BigInt& v) {
  std::string digits = v.str();
  std::string sign;
  if (!digits.empty() && digits.front() == '-') {
    sign = "-";
    digits.erase(0, 1);
  }
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return sign + out;
}

}  // namespace tvr
