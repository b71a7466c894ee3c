// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "../oracles.hpp"
#include "tvr/tvr.hpp"

using namespace tvr;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Proc {
  int code;
  std::string out;
};

/// Runs the CLI binary; stderr is captured to `err_file` when given.
Proc cli(const std::string& args, const std::string& err_file = "/dev/null") {
  const std::string cmd = std::string(TVR_CLI_PATH) + " " + args + " 2>" + err_file;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

class ScratchDir {
public:
  ScratchDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "tvr-acceptance-XXXXXX").string();
    if (!::mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

std::vector<Sample> event_set(std::size_t n, std::uint64_t seed) {
  auto cfg = GeneratorConfig::defaults(Setting::Event);
  cfg.seed = seed;
  cfg.train = n;
  cfg.val = 0;
  cfg.test = 0;
  return generate_split(cfg, Split::Train).samples;
}

void round_trip() {
  const auto t0 = Clock::now();
  const auto samples = event_set(20000, 2024);
  std::size_t ok = 0, violations = 0;
  for (const auto& s : samples) {
    const auto r = simulate(s.initial, s.reference, SimulationMode::Strict);
    violations += r.violations.size();
    ok += r.violations.empty() && r.final == s.final;
  }
  const double secs = seconds_since(t0);
  verdict(ok == samples.size() && violations == 0 && secs < 120, "round-trip soundness",
          std::to_string(ok) + "/" + std::to_string(samples.size()) + " reproduced, " + std::to_string(violations) +
              " violations, " + fmt(secs, 1) + " s (limit 120 s)");
}

void oracle_basic(const ScratchDir& dir) {
  const auto data = dir / "basic-data";
  if (cli("generate --setting basic --train 0 --val 0 --test 2000 --seed 7 --out " + data).code != 0) {
    verdict(false, "oracle-basic closure", "generate failed");
    return;
  }
  const auto preds = dir / "basic-preds.ndjson";
  const auto solve = cli("solve --dataset " + data + "/basic --method oracle-basic --out " + preds);
  const auto eval = cli("eval --dataset " + data + "/basic --predictions " + preds + " --format json");
  if (solve.code != 0 || eval.code != 0) {
    verdict(false, "oracle-basic closure", "solve/eval exit " + std::to_string(solve.code) + "/" +
                                               std::to_string(eval.code));
    return;
  }
  const auto r = json::parse(eval.out);
  bool all = r["m"] == 2000;
  std::string detail = "m = " + std::to_string(r["m"].get<int>());
  for (const char* k : {"Acc", "ObjAcc", "AttrAcc", "ValAcc"}) {
    all = all && r["exact"][k] == "1";
    detail += std::string(", ") + k + " = " + r["exact"][k].get<std::string>();
  }
  verdict(all, "oracle-basic closure", detail + " (required exactly 1)");
}

void oracle_event(const ScratchDir& dir) {
  const auto data = dir / "event-data";
  if (cli("generate --setting event --train 0 --val 0 --test 200 --seed 8 --out " + data).code != 0) {
    verdict(false, "oracle-event closure", "generate failed");
    return;
  }
  const auto preds = dir / "event-preds.ndjson";
  const auto err = dir / "event-solve.err";
  const auto t0 = Clock::now();
  const auto solve = cli("solve --dataset " + data + "/event --method oracle-event --time-limit-ms 3000 --out " + preds,
                         err);
  const double secs = seconds_since(t0);
  const auto eval = cli("eval --dataset " + data + "/event --predictions " + preds + " --format json --per-sample");
  if (solve.code != 0 || eval.code != 0) {
    verdict(false, "oracle-event closure", "solve/eval exit " + std::to_string(solve.code) + "/" +
                                               std::to_string(eval.code));
    return;
  }
  std::set<std::string> unsolved;
  std::ifstream in(err);
  for (std::string line; std::getline(in, line);) {
    const std::string tag = "unsolved within budget: ";
    if (line.rfind(tag, 0) == 0) unsolved.insert(line.substr(tag.size()));
  }
  const auto r = json::parse(eval.out);
  // every sample the solver claims must be judged correct
  std::size_t misjudged = 0;
  for (const auto& s : r["samples"]) {
    if (!unsolved.count(s["id"].get<std::string>()) && !s["correct"].get<bool>()) ++misjudged;
  }
  const double acc = r["Acc"].get<double>();
  std::string detail = "Acc = " + fmt(acc) + " (>= 0.99) on " + std::to_string(r["m"].get<int>()) + " samples, " +
                       std::to_string(unsolved.size()) + " unsolved within budget, " + std::to_string(misjudged) +
                       " misjudged, " + fmt(secs, 1) + " s (limit 600 s)";
  for (const auto& id : unsolved) detail += "\n    unsolved: " + id;
  verdict(acc >= 0.99 && misjudged == 0 && secs < 600, "oracle-event closure", detail);
}

void balance() {
  const auto samples = event_set(20000, 2025);
  const auto r = balance_report(samples);
  const auto& g1 = r.ngram[0];
  const double spread = static_cast<double>(g1.max - g1.min) / g1.mean;
  verdict(g1.observed == 33 && spread <= 0.02, "balance: 1-gram spread",
          "min " + std::to_string(g1.min) + ", max " + std::to_string(g1.max) + ", mean " + fmt(g1.mean, 1) +
              ", (max-min)/mean = " + fmt(100 * spread, 3) + "% (<= 2%)");

  const double n = static_cast<double>(samples.size());
  double worst = 0;
  std::string hist;
  for (int len = 1; len <= 4; ++len) {
    const auto it = r.lengths.find(std::to_string(len));
    const double f = it == r.lengths.end() ? 0 : it->second / n;
    worst = std::max(worst, std::abs(f - 0.25));
    hist += " " + std::to_string(len) + ":" + fmt(f);
  }
  verdict(worst <= 0.01, "balance: transformation lengths",
          "fractions" + hist + ", max deviation " + fmt(100 * worst, 3) + " pts (<= 1)");

  worst = 0;
  hist.clear();
  for (int k = 4; k <= 9; ++k) {
    const auto it = r.visible_counts.find(std::to_string(k));
    const double f = it == r.visible_counts.end() ? 0 : it->second / n;
    worst = std::max(worst, std::abs(f - 1.0 / 6));
    hist += " " + std::to_string(k) + ":" + fmt(f);
  }
  std::size_t outside = 0;
  for (const auto& [k, c] : r.visible_counts) {
    const int kk = std::stoi(k);
    if (kk < 4 || kk > 9) outside += c;
  }
  verdict(worst <= 0.02 && outside == 0, "balance: visible counts",
          "fractions" + hist + ", max deviation " + fmt(100 * worst, 3) + " pts (<= 2)");
}

void order_permutation() {
  std::vector<Sample> sensitive;
  std::uint64_t seed = 30;
  std::size_t scanned = 0;
  while (sensitive.size() < 200) {
    for (const auto& s : event_set(2000, seed++)) {
      if (sensitive.size() >= 200) break;
      ++scanned;
      if (is_order_sensitive(s)) {
        sensitive.push_back(s);
        sensitive.back().id = "seed" + std::to_string(seed - 1) + "-" + s.id;  // ids repeat across seeds
      }
    }
  }
  Rng rng(mix_seed(31, 0x0e0));
  std::vector<Prediction> preds;
  for (const auto& s : sensitive) {
    auto p = s.reference;
    rng.shuffle(std::span<AtomicTransformation>(p));
    preds.push_back({s.id, p});
  }
  const auto r = eval_event(sensitive, preds);
  const double eo = to_double(r.eo);
  verdict(r.lacc == 1 && eo >= 0.40 && eo <= 0.60, "order-permutation EO",
          std::to_string(sensitive.size()) + " order-sensitive samples (" + std::to_string(sensitive.size()) + " of " +
              std::to_string(scanned) + " scanned), LAcc = " + to_string(r.lacc) +
              ", Acc = " + fmt(to_double(r.acc)) + ", EO = " + fmt(eo) + " (in [0.40, 0.60])");
}

void sequence_oracle() {
  const auto seqs = oracles::all_sequences({"a", "b", "c", "d"}, 4);
  std::size_t pairs = 0, mismatches = 0;
  for (const auto& ref : seqs) {
    if (ref.empty()) continue;
    for (const auto& pred : seqs) {
      ++pairs;
      const auto s = score_sequence(pred, ref);
      const bool same = s.recall == oracles::brute_recall(pred, ref) &&
                        s.precision == oracles::brute_precision(pred, ref) &&
                        s.ktd == oracles::brute_ktd(pred, ref) && s.exact_match == oracles::brute_exact(pred, ref) &&
                        s.sd == oracles::brute_sd(pred, ref) && s.nsd == oracles::brute_nsd(pred, ref);
      mismatches += !same;
    }
  }
  verdict(mismatches == 0 && pairs == 340u * 341u, "sequence-metric oracle",
          std::to_string(pairs) + " pairs, " + std::to_string(mismatches) + " mismatches");
}

void answer_space() {
  const auto r = cli("spacesize --max-len 4 --objects 10 --values 33");
  const BigInt lead = BigInt(330) * 330 * 330 * 330;
  verdict(r.code == 0 && r.out == "11,895,256,230\n", "answer-space size",
          "printed '" + r.out.substr(0, r.out.find('\n')) + "', leading term 330^4 = " + group_thousands(lead));
}

void random_baseline_check(const ScratchDir& dir) {
  const std::size_t pool_size = 4918, refs_count = 1430;
  std::vector<std::string> pool;
  std::string candidates;
  for (std::size_t i = 0; i < pool_size; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%05zu", i);
    pool.push_back(buf);
    candidates += pool.back() + "\n";
  }
  Rng rng(77);
  std::vector<SequencePrediction> refs;
  for (std::size_t i = 0; i < refs_count; ++i) {
    refs.push_back({"q" + std::to_string(i), random_baseline(std::span<const std::string>(pool), 2, 7, rng)});
  }
  write_file_atomic(dir / "candidates.txt", candidates);
  write_file_atomic(dir / "refs.ndjson", records_to_ndjson(std::span<const SequencePrediction>(refs), sequence_to_json));
  const auto preds = dir / "random.ndjson";
  const auto solve = cli("solve --method random --references " + (dir / "refs.ndjson") + " --candidates " +
                         (dir / "candidates.txt") + " --min-len 2 --max-len 7 --seed 1 --out " + preds);
  const auto eval = cli("eval --protocol sequence --references " + (dir / "refs.ndjson") + " --predictions " + preds +
                        " --format json");
  if (solve.code != 0 || eval.code != 0) {
    verdict(false, "random baseline", "solve/eval exit " + std::to_string(solve.code) + "/" +
                                          std::to_string(eval.code));
    return;
  }
  const auto r = json::parse(eval.out);
  const double recall = r["Recall"].get<double>();
  verdict(r["m"] == refs_count && r["exact"]["EMR"] == "0" && recall <= 0.005, "random baseline",
          std::to_string(r["m"].get<int>()) + " predictions, pool " + std::to_string(pool_size) + ", EMR = " +
              r["exact"]["EMR"].get<std::string>() + ", mean recall = " + fmt(recall, 5) + " (<= 0.005)");
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  ScratchDir dir;
  const std::pair<const char*, std::function<void()>> checks[] = {
      {"round-trip soundness", round_trip},
      {"oracle-basic closure", [&] { oracle_basic(dir); }},
      {"oracle-event closure", [&] { oracle_event(dir); }},
      {"balance", balance},
      {"order-permutation EO", order_permutation},
      {"sequence-metric oracle", sequence_oracle},
      {"answer-space size", answer_space},
      {"random baseline", [&] { random_baseline_check(dir); }},
  };
  for (const auto& [name, fn] : checks) {
    try {
      fn();
    } catch (const std::exception& e) {
      verdict(false, name, std::string("exception: ") + e.what());
    }
  }
  std::cout << "N/A  neural-model results: not reproducible at desk scale, covered by the property checks above"
            << std::endl;
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all passed")
            << std::endl;
  return failures ? 1 : 0;
}
