#pragma once

// Balance audit of a generated dataset: n-gram option statistics over the
// reference sequences and histograms of every balanced factor.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tvr/balance.hpp"
#include "tvr/dataset_io.hpp"
#include "tvr/generator.hpp"

namespace tvr {

struct OptionStats {
  std::uint64_t options = 0;
  std::uint64_t observed = 0;  // options with a nonzero count
  std::uint64_t min = 0;
  std::uint64_t max = 0;
  double median = 0;
  double mean = 0;
  double std = 0;  // population standard deviation
};

using Histogram = std::map<std::string, std::uint64_t>;

struct BalanceReport {
  std::size_t samples = 0;
  std::size_t steps = 0;
  std::array<OptionStats, 4> ngram{};
  std::array<CountTable<>, 4> ngram_counts{};
  Histogram lengths;
  Histogram visible_counts;
  Histogram object_usage;
  Histogram distinct_objects;
  Histogram move_types;
  Histogram step_attributes;
  std::map<std::string, Histogram> initial_attributes;
};

/// Statistics over all `options` keys, counting absent keys as zero.
inline OptionStats option_stats(const CountTable<>& table, std::uint64_t options) {
  std::vector<std::uint64_t> counts;
  counts.reserve(options);
  for (const auto& [k, n] : table.entries()) counts.push_back(n);
  OptionStats s;
  s.options = options;
  s.observed = counts.size();
  counts.resize(std::max<std::size_t>(counts.size(), options), 0);
  if (counts.empty()) return s;
  std::sort(counts.begin(), counts.end());
  s.min = counts.front();
  s.max = counts.back();
  const auto n = counts.size();
  s.median = n % 2 ? static_cast<double>(counts[n / 2])
                   : (static_cast<double>(counts[n / 2 - 1]) + static_cast<double>(counts[n / 2])) / 2.0;
  double sum = 0;
  for (auto c : counts) sum += static_cast<double>(c);
  s.mean = sum / static_cast<double>(n);
  double var = 0;
  for (auto c : counts) var += (static_cast<double>(c) - s.mean) * (static_cast<double>(c) - s.mean);
  s.std = std::sqrt(var / static_cast<double>(n));
  return s;
}

inline BalanceReport balance_report(std::span<const Sample> samples) {
  BalanceReport r;
  r.samples = samples.size();
  for (const auto& s : samples) {
    r.lengths[std::to_string(s.reference.size())]++;
    r.visible_counts[std::to_string(s.initial.visible_count())]++;
    for (const auto& o : s.initial.objects) {
      for (auto kind : {AttributeKind::Shape, AttributeKind::Size, AttributeKind::Color, AttributeKind::Material}) {
        r.initial_attributes[std::string(attribute_name(kind))][std::string(value_name(o.attribute(kind)))]++;
      }
    }
    std::vector<ValueId> values;
    std::set<int> distinct;
    Scene cur = s.initial;
    for (const auto& t : s.reference) {
      values.push_back(t.value);
      distinct.insert(t.object);
      r.object_usage[std::to_string(t.object)]++;
      r.step_attributes[std::string(attribute_name(t.kind()))]++;
      if (t.kind() == AttributeKind::Position) {
        const auto from = cur[t.object].position;
        const auto to = from + displacement(t.value);
        const auto mt = classify_move(from, to);
        r.move_types[mt ? std::string(move_type_name(*mt)) : "hidden"]++;
      }
      cur = apply_atomic(cur, t, SimulationMode::Loose).scene;
    }
    r.distinct_objects[std::to_string(distinct.size())]++;
    r.steps += values.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      for (std::size_t i = 0; i + n <= values.size(); ++i) {
        r.ngram_counts[n - 1].increment(ngram_key(std::span<const ValueId>(values).subspan(i, n)));
      }
    }
  }
  std::uint64_t options = 1;
  for (std::size_t n = 0; n < 4; ++n) {
    options *= kValueCount;
    r.ngram[n] = option_stats(r.ngram_counts[n], options);
  }
  return r;
}

inline json balance_report_to_json(const BalanceReport& r) {
  json j;
  j["samples"] = r.samples;
  j["steps"] = r.steps;
  json grams = json::object();
  for (std::size_t n = 0; n < 4; ++n) {
    const auto& s = r.ngram[n];
    grams[std::to_string(n + 1) + "-gram"] = {{"options", s.options}, {"observed", s.observed},
                                                {"min", s.min},         {"max", s.max},
                                                {"median", s.median},   {"mean", s.mean},
                                                {"std", s.std}};
  }
  j["ngrams"] = grams;
  j["lengths"] = r.lengths;
  j["visible_counts"] = r.visible_counts;
  j["object_usage"] = r.object_usage;
  j["distinct_objects"] = r.distinct_objects;
  j["move_types"] = r.move_types;
  j["step_attributes"] = r.step_attributes;
  j["initial_attributes"] = r.initial_attributes;
  j["unigram_counts"] = r.ngram_counts[0].entries();
  return j;
}

inline std::string balance_report_to_text(const BalanceReport& r) {
  std::ostringstream out;
  out << "samples " << r.samples << ", steps " << r.steps << "\n\n";
  out << "n-gram     options   observed        min        max     median         mean        std\n";
  for (std::size_t n = 0; n < 4; ++n) {
    const auto& s = r.ngram[n];
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu-gram %10llu %10llu %10llu %10llu %10.1f %12.4f %10.4f\n", n + 1,
                  static_cast<unsigned long long>(s.options), static_cast<unsigned long long>(s.observed),
                  static_cast<unsigned long long>(s.min), static_cast<unsigned long long>(s.max), s.median,
                  s.mean, s.std);
    out << buf;
  }
  auto hist = [&](const char* title, const Histogram& h) {
    out << '\n' << title << '\n';
    std::uint64_t total = 0;
    for (const auto& [k, n] : h) total += n;
    for (const auto& [k, n] : h) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "  %-10s %8llu  %6.2f%%\n", k.c_str(), static_cast<unsigned long long>(n),
                    total ? 100.0 * static_cast<double>(n) / static_cast<double>(total) : 0.0);
      out << buf;
    }
  };
  hist("transformation length", r.lengths);
  hist("visible objects (initial)", r.visible_counts);
  hist("object index usage", r.object_usage);
  hist("distinct objects per sequence", r.distinct_objects);
  hist("move type", r.move_types);
  hist("step attribute", r.step_attributes);
  for (const auto& [kind, h] : r.initial_attributes) hist(("initial " + kind).c_str(), h);
  return out.str();
}

}  // namespace tvr
