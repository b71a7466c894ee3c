#pragma once

// Balanced sampling of initial scenes and reference transformations, and
// assembly of Basic / Event / View splits.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tvr/balance.hpp"
#include "tvr/random.hpp"
#include "tvr/scene.hpp"
#include "tvr/transform.hpp"

namespace tvr {

enum class Setting { Basic, Event, View };
enum class Split { Train, Val, Test };
enum class ViewTag { Left, Center, Right };
enum class MoveType { Inside, MoveIn, MoveOut };

inline constexpr std::array<Split, 3> kSplits = {Split::Train, Split::Val, Split::Test};

inline constexpr std::string_view setting_name(Setting s) {
  switch (s) {
  case Setting::Basic: return "basic";
  case Setting::Event: return "event";
  case Setting::View: return "view";
  }
  return "?";
}

inline std::optional<Setting> parse_setting(std::string_view s) {
  for (auto v : {Setting::Basic, Setting::Event, Setting::View}) {
    if (setting_name(v) == s) return v;
  }
  return std::nullopt;
}

inline constexpr std::string_view split_name(Split s) {
  switch (s) {
  case Split::Train: return "train";
  case Split::Val: return "val";
  case Split::Test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  for (auto v : kSplits) {
    if (split_name(v) == s) return v;
  }
  return std::nullopt;
}

inline constexpr std::string_view view_name(ViewTag v) {
  switch (v) {
  case ViewTag::Left: return "left";
  case ViewTag::Center: return "center";
  case ViewTag::Right: return "right";
  }
  return "?";
}

inline std::optional<ViewTag> parse_view(std::string_view s) {
  for (auto v : {ViewTag::Left, ViewTag::Center, ViewTag::Right}) {
    if (view_name(v) == s) return v;
  }
  return std::nullopt;
}

/// Camera azimuth used when rendering a view; scene coordinates never change.
inline constexpr double azimuth_degrees(ViewTag v) {
  switch (v) {
  case ViewTag::Left: return -30.0;
  case ViewTag::Center: return 0.0;
  case ViewTag::Right: return 30.0;
  }
  return 0.0;
}

inline constexpr std::string_view move_type_name(MoveType m) {
  switch (m) {
  case MoveType::Inside: return "inside";
  case MoveType::MoveIn: return "move-in";
  case MoveType::MoveOut: return "move-out";
  }
  return "?";
}

/// Label of a position step; nullopt for a move that starts and ends hidden.
inline std::optional<MoveType> classify_move(Position from, Position to) {
  const bool a = is_visible(from);
  const bool b = is_visible(to);
  if (a && b) return MoveType::Inside;
  if (!a && b) return MoveType::MoveIn;
  if (a && !b) return MoveType::MoveOut;
  return std::nullopt;
}

struct Sample {
  std::string id;
  Setting setting = Setting::Event;
  Split split = Split::Train;
  std::uint64_t seed = 0;
  Scene initial;
  Scene final;
  Transformation reference;
  std::vector<ViewTag> views;

  friend bool operator==(const Sample&, const Sample&) = default;
};

inline std::vector<ViewTag> default_views(Setting s) {
  if (s == Setting::View) return {ViewTag::Left, ViewTag::Center, ViewTag::Right};
  return {ViewTag::Center};
}

/// Empty string when the sample satisfies its invariants, otherwise the
/// first violated one.
inline std::string check_sample(const Sample& s) {
  if (!is_valid(s.initial)) return "initial scene invalid";
  if (!is_valid(s.final)) return "final scene invalid";
  const auto n = s.reference.size();
  if (s.setting == Setting::Basic && n != 1) return "basic reference must have one step";
  if (s.setting != Setting::Basic && (n < 1 || n > 4)) return "reference length outside 1..4";
  if (s.views != default_views(s.setting)) return "unexpected view tags";
  const auto sim = simulate(s.initial, s.reference, SimulationMode::Strict);
  if (!sim.violations.empty()) return "reference violates a constraint";
  if (!(sim.final == s.final)) return "reference does not reproduce the final scene";
  return {};
}

struct GeneratorOptions {
  double tolerance = kDefaultTolerance;
  int min_visible = 4;
  int max_visible = 9;
  int min_length = 1;
  int max_length = 4;
  /// Restarts of a single sequence before giving up on its scene.
  int sequence_restarts = 50;
};

namespace detail {

inline const std::vector<Position>& lattice_cells(bool visible) {
  static const auto cells = [] {
    std::array<std::vector<Position>, 2> out;
    for (int x = -kPlaneBound; x <= kPlaneBound; x += kStepUnit) {
      for (int y = -kPlaneBound; y <= kPlaneBound; y += kStepUnit) {
        out[is_visible({x, y}) ? 1 : 0].push_back({x, y});
      }
    }
    return out;
  }();
  return cells[visible ? 1 : 0];
}

inline std::vector<std::string> int_keys(int lo, int hi) {
  std::vector<std::string> keys;
  for (int i = lo; i <= hi; ++i) keys.push_back(std::to_string(i));
  return keys;
}

template <class Range>
std::vector<std::string> value_keys(const Range& values) {
  std::vector<std::string> keys;
  for (auto v : values) keys.emplace_back(value_name(v));
  return keys;
}

template <class T>
void take_prefix(std::vector<T>& v, std::size_t n, Rng& rng) {
  // partial Fisher-Yates: the first n entries become a uniform sample
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(v.size() - i));
    std::swap(v[i], v[j]);
  }
  v.resize(n);
}

}  // namespace detail

/// Draws a valid 10-object scene. The visible-object count and every
/// categorical attribute are drawn with balanced_choice; the matching counts
/// in `bal` are incremented.
inline Scene sample_initial_scene(BalanceState& bal, Rng& rng, const GeneratorOptions& opt = {}) {
  const auto vis_keys = detail::int_keys(opt.min_visible, opt.max_visible);
  const auto k_key = balanced_choice<std::string>(vis_keys, bal.visible_count, opt.tolerance, rng);
  bal.visible_count.increment(k_key);
  const auto k = static_cast<std::size_t>(std::stoi(k_key));

  auto visible = detail::lattice_cells(true);
  auto hidden = detail::lattice_cells(false);
  if (k > visible.size() || kObjectCount - k > hidden.size()) {
    throw std::invalid_argument("visible count does not fit the lattice");
  }
  detail::take_prefix(visible, k, rng);
  detail::take_prefix(hidden, kObjectCount - k, rng);
  std::vector<Position> cells = visible;
  cells.insert(cells.end(), hidden.begin(), hidden.end());
  rng.shuffle(std::span<Position>(cells));

  Scene s;
  constexpr std::array<AttributeKind, 4> kinds = {AttributeKind::Shape, AttributeKind::Size,
                                                  AttributeKind::Color, AttributeKind::Material};
  for (int i = 0; i < kObjectCount; ++i) {
    auto& o = s[i];
    o.index = i;
    o.position = cells[static_cast<std::size_t>(i)];
    for (auto kind : kinds) {
      const auto values = values_of(kind);
      const auto keys = detail::value_keys(values);
      auto& table = bal.attribute(kind);
      const auto key = balanced_choice<std::string>(keys, table, opt.tolerance, rng);
      table.increment(key);
      o.set_attribute(value_by_name(key));
    }
  }
  if (!is_valid(s)) throw std::logic_error("sampled scene is invalid");
  return s;
}

namespace detail {

/// Bookkeeping for one in-progress reference sequence.
struct SequenceDraft {
  Scene scene;
  Transformation steps;
  std::vector<ValueId> values;
  std::array<std::array<bool, 5>, kObjectCount> used{};
  std::array<bool, kObjectCount> recolored{};  // any non-position change
  std::map<std::string, std::uint64_t> pending;  // in-flight counts, keyed "<table>:<key>"

  std::uint64_t count(const CountTable<>& table, std::string_view tag, const std::string& key) const {
    auto it = pending.find(std::string(tag) + ':' + key);
    return table.count(key) + (it == pending.end() ? 0 : it->second);
  }
};

struct StepCheck {
  bool allowed = false;
  std::optional<MoveType> move;  // set for position steps
};

/// Whether (object, value) may be appended to the draft. A step must be
/// Strict-valid, must change its slot, may not touch a slot already changed
/// in this sequence and must be observable: categorical changes only on
/// visible objects, no hidden-to-hidden moves, and no moving out an object
/// whose categorical change would then be hidden.
inline StepCheck check_step(const SequenceDraft& d, int o, ValueId v) {
  const auto kind = value_kind(v);
  const auto& obj = d.scene[o];
  if (d.used[static_cast<std::size_t>(o)][static_cast<std::size_t>(kind)]) return {};
  ObjectState moved = obj;
  std::optional<MoveType> mt;
  if (kind != AttributeKind::Position) {
    if (!obj.visible() || obj.attribute(kind) == v) return {};
    moved.set_attribute(v);
  } else {
    moved.position = obj.position + displacement(v);
    if (!in_plane(moved.position)) return {};
    mt = classify_move(obj.position, moved.position);
    if (!mt) return {};
    if (*mt == MoveType::MoveOut && d.recolored[static_cast<std::size_t>(o)]) return {};
  }
  for (int j = 0; j < kObjectCount; ++j) {
    if (j != o && overlaps(moved, d.scene[j])) return {};
  }
  return {true, mt};
}

}  // namespace detail

/// Draws a reference sequence of balanced length whose every step replays
/// without violations. Values are drawn from the currently available ones by
/// the summed deficits of the 1-gram table and the 2-gram table conditioned
/// on the previous value; the object is then drawn from the objects able to
/// take that value, by object-usage deficit plus (for moves) move-type
/// deficit. Counts are committed to `bal` only for the emitted sequence.
///
/// Throws std::runtime_error when no sequence could be completed within the
/// restart budget; callers resample the scene.
inline Transformation sample_reference_transformation(const Scene& scene, BalanceState& bal, Rng& rng,
                                                      const GeneratorOptions& opt = {}) {
  const auto len_keys = detail::int_keys(opt.min_length, opt.max_length);
  const auto len_key = balanced_choice<std::string>(len_keys, bal.length, opt.tolerance, rng);
  const auto length = static_cast<std::size_t>(std::stoi(len_key));

  for (int attempt = 0; attempt <= opt.sequence_restarts; ++attempt) {
    detail::SequenceDraft d;
    d.scene = scene;
    bool complete = true;

    for (std::size_t step = 0; step < length; ++step) {
      std::vector<ValueId> avail;
      std::vector<std::vector<int>> objects_for;
      std::vector<std::vector<std::optional<MoveType>>> types_for;
      for (int id = 0; id < kValueCount; ++id) {
        const ValueId v{id};
        std::vector<int> objs;
        std::vector<std::optional<MoveType>> types;
        for (int o = 0; o < kObjectCount; ++o) {
          const auto check = detail::check_step(d, o, v);
          if (check.allowed) {
            objs.push_back(o);
            types.push_back(check.move);
          }
        }
        if (!objs.empty()) {
          avail.push_back(v);
          objects_for.push_back(std::move(objs));
          types_for.push_back(std::move(types));
        }
      }
      if (avail.empty()) {
        complete = false;
        break;
      }

      std::vector<std::uint64_t> c1;
      for (auto v : avail) c1.push_back(d.count(bal.ngram[0], "1", std::string(value_name(v))));
      auto w = deficit_weights(c1, opt.tolerance);
      if (step > 0) {
        const auto prev = std::string(value_name(d.values.back()));
        std::vector<std::uint64_t> c2;
        for (auto v : avail) {
          c2.push_back(d.count(bal.ngram[1], "2", prev + ' ' + std::string(value_name(v))));
        }
        const auto w2 = deficit_weights(c2, opt.tolerance);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += w2[i];
      }
      const auto vi = sample_weighted(w, rng);
      const auto value = avail[vi];
      const auto& objs = objects_for[vi];
      const auto& types = types_for[vi];

      std::vector<std::uint64_t> co;
      for (int o : objs) co.push_back(d.count(bal.object, "o", std::to_string(o)));
      auto wo = deficit_weights(co, opt.tolerance);
      if (value_kind(value) == AttributeKind::Position) {
        std::vector<std::uint64_t> cm;
        for (const auto& t : types) {
          cm.push_back(d.count(bal.move_type, "m", std::string(move_type_name(*t))));
        }
        const auto wm = deficit_weights(cm, opt.tolerance);
        for (std::size_t i = 0; i < wo.size(); ++i) wo[i] += wm[i];
      }
      const auto oi = sample_weighted(wo, rng);
      const int object = objs[oi];

      const std::string vname(value_name(value));
      d.pending["1:" + vname] += 1;
      if (step > 0) d.pending["2:" + std::string(value_name(d.values.back())) + ' ' + vname] += 1;
      d.pending["o:" + std::to_string(object)] += 1;
      if (types[oi]) d.pending["m:" + std::string(move_type_name(*types[oi]))] += 1;

      const auto kind = value_kind(value);
      d.used[static_cast<std::size_t>(object)][static_cast<std::size_t>(kind)] = true;
      if (kind != AttributeKind::Position) d.recolored[static_cast<std::size_t>(object)] = true;
      d.scene[object].set_attribute(value);
      d.steps.push_back({object, value});
      d.values.push_back(value);
    }

    if (!complete) continue;

    bal.length.increment(len_key);
    bal.record_ngrams(d.values);
    for (const auto& [tagged, n] : d.pending) {
      const auto tag = tagged.substr(0, tagged.find(':'));
      const auto key = tagged.substr(tagged.find(':') + 1);
      if (tag == "o") bal.object.increment(key, n);
      if (tag == "m") bal.move_type.increment(key, n);
    }
    return d.steps;
  }
  throw std::runtime_error("no reference transformation found within the restart budget");
}

inline std::string sample_id(Setting setting, Split split, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(setting_name(setting)) + '-' + std::string(split_name(split)) + '-' + buf;
}

inline std::uint64_t sample_seed(std::uint64_t seed, Setting setting, Split split, std::size_t index) {
  return mix_seed(seed, static_cast<std::uint64_t>(setting) + 1, static_cast<std::uint64_t>(split) + 1,
                  index);
}

/// Produces sample `index` and updates the shard's balance state.
inline Sample generate_sample(Setting setting, Split split, std::size_t index, std::uint64_t seed,
                              BalanceState& bal, GeneratorOptions opt = {}) {
  if (setting == Setting::Basic) opt.min_length = opt.max_length = 1;
  Sample s;
  s.id = sample_id(setting, split, index);
  s.setting = setting;
  s.split = split;
  s.seed = sample_seed(seed, setting, split, index);
  s.views = default_views(setting);
  Rng rng(s.seed);
  for (;;) {
    s.initial = sample_initial_scene(bal, rng, opt);
    try {
      s.reference = sample_reference_transformation(s.initial, bal, rng, opt);
      break;
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  s.final = simulate(s.initial, s.reference, SimulationMode::Strict).final;
  return s;
}

struct GeneratorConfig {
  Setting setting = Setting::Event;
  std::size_t train = 20000;
  std::size_t val = 1000;
  std::size_t test = 2000;
  std::uint64_t seed = 0;
  /// Balance-state shards per split. Output depends on this value but never
  /// on the number of worker threads.
  std::size_t shards = 1;
  GeneratorOptions options{};

  std::size_t size(Split s) const {
    switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
    }
    return 0;
  }

  static GeneratorConfig defaults(Setting s) {
    GeneratorConfig c;
    c.setting = s;
    if (s == Setting::Basic) c.train = 8000;
    return c;
  }
};

struct SplitResult {
  std::vector<Sample> samples;
  BalanceState balance;  // shard tables summed
};

/// Sample index range [first, last) handled by `shard`.
inline std::pair<std::size_t, std::size_t> shard_range(std::size_t n, std::size_t shards, std::size_t shard) {
  return {n * shard / shards, n * (shard + 1) / shards};
}

inline SplitResult generate_range(const GeneratorConfig& cfg, Split split, std::size_t first, std::size_t last) {
  SplitResult r;
  r.samples.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) {
    r.samples.push_back(generate_sample(cfg.setting, split, i, cfg.seed, r.balance, cfg.options));
  }
  return r;
}

inline SplitResult generate_split(const GeneratorConfig& cfg, Split split, unsigned jobs = 1) {
  const auto n = cfg.size(split);
  const auto shards = std::max<std::size_t>(1, std::min(cfg.shards, std::max<std::size_t>(n, 1)));
  std::vector<SplitResult> parts(shards);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s; (s = next.fetch_add(1)) < shards;) {
      const auto [a, b] = shard_range(n, shards, s);
      parts[s] = generate_range(cfg, split, a, b);
    }
  };
  const auto threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(shards)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  SplitResult out;
  out.samples.reserve(n);
  for (auto& p : parts) {
    out.balance.merge(p.balance);
    std::move(p.samples.begin(), p.samples.end(), std::back_inserter(out.samples));
  }
  return out;
}

}  // namespace tvr
