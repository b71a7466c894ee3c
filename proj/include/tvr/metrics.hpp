#pragma once

// Evaluation protocols: direct triplet comparison (Basic), simulation-based
// judging (Event / View) and reference-comparison sequence metrics.
//
// Aggregates are accumulated as exact rationals, so a report does not depend
// on sample order or on how work was split across threads.

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tvr/dataset_io.hpp"
#include "tvr/generator.hpp"
#include "tvr/transform.hpp"

namespace tvr {

/// Prediction set does not line up with the evaluated samples.
class EvalError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string to_string(const Rational& r) {
  std::ostringstream ss;
  ss << r;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Basic

struct BasicVerdict {
  bool obj_correct = false;
  bool attr_correct = false;
  bool val_correct = false;
  bool all_correct = false;
  friend bool operator==(const BasicVerdict&, const BasicVerdict&) = default;
};

inline BasicVerdict eval_basic(const AtomicTransformation& pred, const AtomicTransformation& ref) {
  BasicVerdict v;
  v.obj_correct = pred.object == ref.object;
  v.attr_correct = pred.kind() == ref.kind();
  v.val_correct = pred.value == ref.value;
  v.all_correct = v.obj_correct && v.val_correct;
  return v;
}

/// A Basic answer must be exactly one step; anything else scores all-false.
inline BasicVerdict eval_basic(std::span<const AtomicTransformation> pred, const AtomicTransformation& ref) {
  if (pred.size() != 1) return {};
  return eval_basic(pred.front(), ref);
}

// ---------------------------------------------------------------------------
// simulation protocol

struct SampleVerdict {
  std::string id;
  int ref_len = 0;
  Verdict verdict;
  std::optional<BasicVerdict> basic;
};

struct SimulationReport {
  std::string setting;
  std::size_t m = 0;
  Rational acc, lacc, ad, and_, eo;
  // Basic only: fine-grained and overall triplet accuracy
  bool has_basic = false;
  Rational obj_acc, attr_acc, val_acc, basic_acc;
  std::vector<SampleVerdict> samples;
};

namespace detail {

/// Index of each sample's prediction; rejects duplicates, unknown and missing
/// ids.
template <class Ref, class Pred>
std::vector<std::size_t> match_predictions(std::span<const Ref> refs, std::span<const Pred> preds) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!by_id.emplace(preds[i].id, i).second) {
      throw EvalError("duplicate prediction for id '" + preds[i].id + "'");
    }
  }
  std::set<std::string> known;
  std::vector<std::size_t> idx;
  std::vector<std::string> missing;
  for (const auto& r : refs) {
    known.insert(r.id);
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      missing.push_back(r.id);
      continue;
    }
    idx.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " sample(s) without prediction, first '" + missing.front() + "'";
    throw EvalError(msg);
  }
  for (const auto& p : preds) {
    if (!known.count(p.id)) throw EvalError("prediction for unknown id '" + p.id + "'");
  }
  return idx;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += jobs) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Error of order: share of loose-correct predictions that are not correct.
/// Zero when nothing is loose-correct.
inline Rational error_of_order(const Rational& acc, const Rational& lacc) {
  if (lacc == 0) return Rational(0);
  return (lacc - acc) / lacc;
}

/// Simulation protocol over a sample set. For Basic samples the triplet
/// accuracies are filled as well.
inline SimulationReport eval_event(std::span<const Sample> samples, std::span<const Prediction> preds,
                                   unsigned jobs = 1) {
  const auto idx = detail::match_predictions(samples, preds);
  SimulationReport r;
  r.m = samples.size();
  r.samples.resize(samples.size());
  r.has_basic = !samples.empty() && std::all_of(samples.begin(), samples.end(),
                                                [](const Sample& s) { return s.setting == Setting::Basic; });
  r.setting = samples.empty() ? "" : std::string(setting_name(samples.front().setting));
  detail::parallel_for(samples.size(), jobs, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto& p = preds[idx[i]];
    auto& out = r.samples[i];
    out.id = s.id;
    out.ref_len = static_cast<int>(s.reference.size());
    out.verdict = judge(s.initial, s.final, out.ref_len, p.steps);
    if (r.has_basic) out.basic = eval_basic(p.steps, s.reference.front());
  });
  if (r.m == 0) return r;

  std::uint64_t correct = 0, loose = 0, dist = 0;
  std::uint64_t obj = 0, attr = 0, val = 0, all = 0;
  Rational nd(0);
  for (const auto& v : r.samples) {
    correct += v.verdict.correct;
    loose += v.verdict.loose_correct;
    dist += static_cast<std::uint64_t>(v.verdict.distance);
    nd += v.verdict.normalized_distance;
    if (v.basic) {
      obj += v.basic->obj_correct;
      attr += v.basic->attr_correct;
      val += v.basic->val_correct;
      all += v.basic->all_correct;
    }
  }
  const Rational m(static_cast<std::int64_t>(r.m));
  r.acc = Rational(correct) / m;
  r.lacc = Rational(loose) / m;
  r.ad = Rational(dist) / m;
  r.and_ = nd / m;
  r.eo = error_of_order(r.acc, r.lacc);
  if (r.has_basic) {
    r.obj_acc = Rational(obj) / m;
    r.attr_acc = Rational(attr) / m;
    r.val_acc = Rational(val) / m;
    r.basic_acc = Rational(all) / m;
  }
  return r;
}

/// Report document. Basic sets report the triplet metrics with Acc as the
/// overall triplet accuracy; Event / View sets report Acc, LAcc, AD, AND, EO.
inline json report_to_json(const SimulationReport& r, bool per_sample = true) {
  json j;
  j["protocol"] = "simulation";
  j["setting"] = r.setting;
  j["m"] = r.m;
  json exact = json::object();
  auto put = [&](const char* name, const Rational& v) {
    j[name] = to_double(v);
    exact[name] = to_string(v);
  };
  if (r.has_basic) {
    put("ObjAcc", r.obj_acc);
    put("AttrAcc", r.attr_acc);
    put("ValAcc", r.val_acc);
    put("Acc", r.basic_acc);
  } else {
    put("Acc", r.acc);
    put("LAcc", r.lacc);
    put("AD", r.ad);
    put("AND", r.and_);
    put("EO", r.eo);
  }
  j["exact"] = exact;
  if (per_sample) {
    json arr = json::array();
    for (const auto& s : r.samples) {
      json e = {{"id", s.id},
                {"correct", s.verdict.correct},
                {"loose_correct", s.verdict.loose_correct},
                {"distance", s.verdict.distance},
                {"normalized_distance", to_string(s.verdict.normalized_distance)},
                {"violations", s.verdict.violations.size()}};
      if (s.basic) {
        e["obj_correct"] = s.basic->obj_correct;
        e["attr_correct"] = s.basic->attr_correct;
        e["val_correct"] = s.basic->val_correct;
        e["all_correct"] = s.basic->all_correct;
      }
      arr.push_back(std::move(e));
    }
    j["samples"] = arr;
  }
  return j;
}

/// Samples that have a prediction, in dataset order. Predictions for ids not
/// in `samples` are still an error.
inline std::vector<Sample> select_predicted(std::span<const Sample> samples, std::span<const Prediction> preds) {
  std::set<std::string_view> wanted;
  for (const auto& p : preds) wanted.insert(p.id);
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (wanted.count(s.id)) out.push_back(s);
  }
  return out;
}

/// Simulation-protocol report document; the single path used by both the CLI
/// and the service.
inline json evaluate_simulation(std::span<const Sample> samples, std::span<const Prediction> preds,
                                bool only_predicted = false, unsigned jobs = 1, bool per_sample = true) {
  if (!only_predicted) return report_to_json(eval_event(samples, preds, jobs), per_sample);
  const auto subset = select_predicted(samples, preds);
  return report_to_json(eval_event(subset, preds, jobs), per_sample);
}

/// True when some ordering of the reference fails under Strict simulation.
inline bool is_order_sensitive(const Sample& s) {
  const auto n = s.reference.size();
  if (n <= 1) return false;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Transformation perm(n);
  do {
    for (std::size_t i = 0; i < n; ++i) perm[i] = s.reference[order[i]];
    if (!judge(s.initial, s.final, static_cast<int>(n), perm).correct) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

// ---------------------------------------------------------------------------
// sequence protocol

using IdSequence = std::vector<std::string>;

/// Multiset intersection size.
inline std::size_t common_count(std::span<const std::string> a, std::span<const std::string> b) {
  std::map<std::string_view, long> remaining;
  for (const auto& x : b) ++remaining[x];
  std::size_t n = 0;
  for (const auto& x : a) {
    auto it = remaining.find(x);
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++n;
    }
  }
  return n;
}

/// (recall, precision). Precision of an empty prediction is 0; so is recall
/// against an empty reference.
inline std::pair<Rational, Rational> seq_recall_precision(std::span<const std::string> pred,
                                                          std::span<const std::string> ref) {
  const auto c = static_cast<std::int64_t>(common_count(pred, ref));
  const Rational recall = ref.empty() ? Rational(0) : Rational(c, static_cast<std::int64_t>(ref.size()));
  const Rational precision = pred.empty() ? Rational(0) : Rational(c, static_cast<std::int64_t>(pred.size()));
  return {recall, precision};
}

/// Normalised Kendall tau distance over the ids present in both sequences,
/// each ranked by its first occurrence. 1 when nothing is shared, 0 when a
/// single id is shared.
inline Rational ktd(std::span<const std::string> pred, std::span<const std::string> ref) {
  std::map<std::string_view, std::size_t> pred_rank;
  for (std::size_t i = 0; i < pred.size(); ++i) pred_rank.emplace(pred[i], i);
  std::vector<std::size_t> ranks;  // pred ranks of common ids, in reference order
  std::set<std::string_view> seen;
  for (const auto& id : ref) {
    if (!seen.insert(id).second) continue;
    auto it = pred_rank.find(id);
    if (it != pred_rank.end()) ranks.push_back(it->second);
  }
  const auto k = static_cast<std::int64_t>(ranks.size());
  if (k == 0) return Rational(1);
  if (k == 1) return Rational(0);
  std::int64_t discordant = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    for (std::size_t j = i + 1; j < ranks.size(); ++j) discordant += ranks[i] > ranks[j];
  }
  return Rational(discordant, k * (k - 1) / 2);
}

struct StepMatch {
  bool exact_match = false;
  std::int64_t sd = 0;
  Rational nsd{0};
};

inline StepMatch emr_sd_nsd(std::span<const std::string> pred, std::span<const std::string> ref) {
  if (ref.empty()) throw std::invalid_argument("reference sequence must be non-empty");
  StepMatch m;
  m.exact_match = std::equal(pred.begin(), pred.end(), ref.begin(), ref.end());
  m.sd = std::abs(static_cast<std::int64_t>(pred.size()) - static_cast<std::int64_t>(ref.size()));
  m.nsd = Rational(m.sd, static_cast<std::int64_t>(ref.size()));
  return m;
}

struct SequenceScores {
  bool exact_match = false;
  Rational recall, precision, ktd;
  std::int64_t sd = 0;
  Rational nsd;
  friend bool operator==(const SequenceScores&, const SequenceScores&) = default;
};

inline SequenceScores score_sequence(std::span<const std::string> pred, std::span<const std::string> ref) {
  SequenceScores s;
  std::tie(s.recall, s.precision) = seq_recall_precision(pred, ref);
  s.ktd = ktd(pred, ref);
  const auto m = emr_sd_nsd(pred, ref);
  s.exact_match = m.exact_match;
  s.sd = m.sd;
  s.nsd = m.nsd;
  return s;
}

struct SequenceReport {
  std::size_t m = 0;
  Rational emr, recall, precision, ktd, sd, nsd;
  std::vector<std::pair<std::string, SequenceScores>> samples;
};

inline SequenceReport eval_sequences(std::span<const SequencePrediction> refs,
                                     std::span<const SequencePrediction> preds) {
  const auto idx = detail::match_predictions(refs, preds);
  SequenceReport r;
  r.m = refs.size();
  Rational emr(0), rec(0), prec(0), k(0), sd(0), nsd(0);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    auto s = score_sequence(preds[idx[i]].sequence, refs[i].sequence);
    emr += s.exact_match ? 1 : 0;
    rec += s.recall;
    prec += s.precision;
    k += s.ktd;
    sd += s.sd;
    nsd += s.nsd;
    r.samples.emplace_back(refs[i].id, std::move(s));
  }
  if (r.m == 0) return r;
  const Rational m(static_cast<std::int64_t>(r.m));
  r.emr = emr / m;
  r.recall = rec / m;
  r.precision = prec / m;
  r.ktd = k / m;
  r.sd = sd / m;
  r.nsd = nsd / m;
  return r;
}

inline json report_to_json(const SequenceReport& r, bool per_sample = true) {
  json j;
  j["protocol"] = "sequence";
  j["m"] = r.m;
  json exact = json::object();
  auto put = [&](const char* name, const Rational& v) {
    j[name] = to_double(v);
    exact[name] = to_string(v);
  };
  put("EMR", r.emr);
  put("Recall", r.recall);
  put("Precision", r.precision);
  put("KTD", r.ktd);
  put("SD", r.sd);
  put("NSD", r.nsd);
  j["exact"] = exact;
  if (per_sample) {
    json arr = json::array();
    for (const auto& [id, s] : r.samples) {
      arr.push_back({{"id", id},
                     {"exact_match", s.exact_match},
                     {"recall", to_string(s.recall)},
                     {"precision", to_string(s.precision)},
                     {"ktd", to_string(s.ktd)},
                     {"sd", s.sd},
                     {"nsd", to_string(s.nsd)}});
    }
    j["samples"] = arr;
  }
  return j;
}

}  // namespace tvr
