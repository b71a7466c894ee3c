#pragma once

// Count-table driven balanced sampling: each option is drawn with
// probability proportional to its deficit against the most frequent option,
// plus a small tolerance so saturated options stay reachable.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvr/random.hpp"
#include "tvr/scene.hpp"

namespace tvr {

inline constexpr double kDefaultTolerance = 0.1;

template <class Key = std::string>
class CountTable {
public:
  std::uint64_t count(const Key& key) const {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }

  void increment(const Key& key, std::uint64_t n = 1) { counts_[key] += n; }

  void merge(const CountTable& other) {
    for (const auto& [k, n] : other.counts_) counts_[k] += n;
  }

  std::uint64_t total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0},
                           [](std::uint64_t s, const auto& kv) { return s + kv.second; });
  }

  const std::map<Key, std::uint64_t>& entries() const { return counts_; }

  friend bool operator==(const CountTable&, const CountTable&) = default;

private:
  std::map<Key, std::uint64_t> counts_;
};

/// c_i = max(n) - n_i + tolerance over the given counts.
inline std::vector<double> deficit_weights(std::span<const std::uint64_t> counts, double tolerance) {
  if (counts.empty()) throw std::invalid_argument("balanced choice needs at least one option");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const auto max_count = *std::max_element(counts.begin(), counts.end());
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = static_cast<double>(max_count - counts[i]) + tolerance;
  }
  return w;
}

/// Index drawn with probability w_i / sum(w).
inline std::size_t sample_weighted(std::span<const double> weights, Rng& rng) {
  if (weights.empty()) throw std::invalid_argument("cannot sample from zero options");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double r = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (r < acc) return i;
  }
  return weights.size() - 1;
}

/// Selection probabilities of `balanced_choice` for the given options.
template <class Key>
std::vector<double> balanced_probabilities(std::span<const Key> options, const CountTable<Key>& table,
                                           double tolerance) {
  std::vector<std::uint64_t> counts;
  counts.reserve(options.size());
  for (const auto& o : options) counts.push_back(table.count(o));
  auto w = deficit_weights(counts, tolerance);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

/// Draws one option. Incrementing the chosen option's count is the caller's
/// responsibility.
template <class Key>
Key balanced_choice(std::span<const Key> options, const CountTable<Key>& table, double tolerance,
                    Rng& rng) {
  std::vector<std::uint64_t> counts;
  counts.reserve(options.size());
  for (const auto& o : options) counts.push_back(table.count(o));
  const auto w = deficit_weights(counts, tolerance);
  return options[sample_weighted(w, rng)];
}

/// Key of an n-gram over value ids: canonical value names joined by spaces.
inline std::string ngram_key(std::span<const ValueId> values) {
  std::string key;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) key += ' ';
    key += value_name(values[i]);
  }
  return key;
}

/// All count tables consulted or maintained while generating one shard.
struct BalanceState {
  CountTable<> shape;
  CountTable<> size;
  CountTable<> color;
  CountTable<> material;
  CountTable<> visible_count;
  CountTable<> length;
  CountTable<> object;
  CountTable<> move_type;
  // ngram[n - 1] counts n-grams of value ids; 3- and 4-grams are tracked for
  // reporting only.
  std::array<CountTable<>, 4> ngram;

  CountTable<>& attribute(AttributeKind kind) {
    switch (kind) {
    case AttributeKind::Shape: return shape;
    case AttributeKind::Size: return size;
    case AttributeKind::Color: return color;
    case AttributeKind::Material: return material;
    case AttributeKind::Position: break;
    }
    throw std::invalid_argument("position values are not balanced per scene");
  }

  void merge(const BalanceState& o) {
    shape.merge(o.shape);
    size.merge(o.size);
    color.merge(o.color);
    material.merge(o.material);
    visible_count.merge(o.visible_count);
    length.merge(o.length);
    object.merge(o.object);
    move_type.merge(o.move_type);
    for (std::size_t n = 0; n < ngram.size(); ++n) ngram[n].merge(o.ngram[n]);
  }

  /// Records every n-gram (n = 1..4) of a committed reference sequence.
  void record_ngrams(std::span<const ValueId> values) {
    for (std::size_t n = 1; n <= ngram.size(); ++n) {
      for (std::size_t i = 0; i + n <= values.size(); ++i) {
        ngram[n - 1].increment(ngram_key(values.subspan(i, n)));
      }
    }
  }

  friend bool operator==(const BalanceState&, const BalanceState&) = default;
};

}  // namespace tvr
