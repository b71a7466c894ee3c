#pragma once

// `tvr` command line: generate, eval, stats, solve, serve, spacesize.
//
// Every option can also come from the environment (TVR_<NAME>) or from a
// config file given by --config / TVR_CONFIG, with flag > env > file.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvr/dataset.hpp"
#include "tvr/dataset_io.hpp"
#include "tvr/http.hpp"
#include "tvr/metrics.hpp"
#include "tvr/service.hpp"
#include "tvr/solver.hpp"
#include "tvr/stats.hpp"

namespace tvr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Bad flag values or combinations detected after parsing.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const auto up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::vector<std::string> long_names(const CLI::App& app) {
  std::vector<std::string> names;
  for (const auto* opt : app.get_options()) {
    for (const auto& n : opt->get_lnames()) names.push_back("--" + n);
  }
  return names;
}

/// "unknown option --sede (did you mean --seed?)" for every leftover token
/// that looks like a flag.
inline std::string describe_unknown(const std::vector<std::string>& extras, const CLI::App& app) {
  std::string msg;
  const auto names = long_names(app);
  for (const auto& raw : extras) {
    if (raw.rfind("-", 0) != 0) {
      msg += "unexpected argument '" + raw + "'\n";
      continue;
    }
    const auto flag = raw.substr(0, raw.find('='));
    std::vector<std::pair<std::size_t, std::string>> ranked;
    for (const auto& n : names) {
      const auto d = edit_distance(flag, n);
      if (d <= std::max<std::size_t>(2, flag.size() / 3)) ranked.emplace_back(d, n);
    }
    std::sort(ranked.begin(), ranked.end());
    msg += "unknown option '" + flag + "'";
    if (!ranked.empty()) {
      msg += " (did you mean";
      for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) msg += (i ? ", " : " ") + ranked[i].second;
      msg += "?)";
    }
    msg += '\n';
  }
  return msg;
}

inline std::string env_name(const std::string& option) {
  std::string env = "TVR_";
  for (char c : option) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return env;
}

inline std::string config_path(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  if (const char* env = std::getenv("TVR_CONFIG")) return env;
  return {};
}

/// Config-file values become option defaults so that the command line and the
/// environment still take precedence. Keys in a [<subcommand>] section apply
/// to that subcommand only; top-level keys apply to every subcommand.
inline void apply_config(CLI::App& app, const std::vector<CLI::ConfigItem>& items) {
  for (auto* sub : app.get_subcommands({})) {
    for (auto* opt : sub->get_options()) {
      const auto names = opt->get_lnames();
      if (names.empty() || names.front() == "help") continue;
      const auto& name = names.front();
      const CLI::ConfigItem* hit = nullptr;
      for (const auto& item : items) {
        if (item.name != name && item.name != opt->get_single_name()) continue;
        if (item.parents.empty() && !hit) hit = &item;
        if (item.parents.size() == 1 && item.parents.front() == sub->get_name()) hit = &item;
      }
      if (!hit || hit->inputs.empty()) continue;
      std::string value = hit->inputs.front();
      for (std::size_t i = 1; i < hit->inputs.size(); ++i) value += " " + hit->inputs[i];
      if (opt->get_expected_min() == 0) {
        // flags ignore default_val, so set the target directly and reset the count
        opt->add_result(value);
        opt->run_callback();
        opt->clear();
        continue;
      }
      opt->default_str(value);
      opt->default_val(value);
    }
  }
}

inline void set_env_names(CLI::App& app) {
  for (auto* sub : app.get_subcommands({})) {
    for (auto* opt : sub->get_options()) {
      const auto names = opt->get_lnames();
      if (names.empty() || names.front() == "help") continue;
      opt->envname(env_name(names.front()));
    }
  }
}

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string report_text(const json& report) {
  std::ostringstream out;
  out << "protocol " << report.at("protocol").get<std::string>();
  if (report.contains("setting")) out << ", setting " << report["setting"].get<std::string>();
  out << ", m = " << report.at("m").get<std::size_t>() << '\n';
  for (const auto& [k, v] : report.at("exact").items()) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-10s %s  (%s)\n", k.c_str(), format_metric(report.at(k).get<double>()).c_str(),
                  v.get<std::string>().c_str());
    out << buf;
  }
  return out.str();
}

inline void need(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

inline Split split_arg(const std::string& s) {
  const auto split = parse_split(s);
  if (!split) throw UsageError("unknown split '" + s + "' (train, val, test)");
  return *split;
}

inline std::vector<std::string> read_candidates(const std::filesystem::path& path) {
  std::vector<std::string> ids;
  std::istringstream in(tvr::detail::read_file(path));
  std::string line;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    const auto t = tvr::detail::trim(line);
    if (t.empty()) continue;
    if (seen.insert(std::string(t)).second) ids.emplace_back(t);
  }
  return ids;
}

}  // namespace detail

struct GenerateArgs {
  std::string setting;
  std::size_t train = 0, val = 0, test = 0;
  bool train_set = false, val_set = false, test_set = false;
  std::uint64_t seed = 0;
  std::size_t shards = 1;
  double tolerance = kDefaultTolerance;
  std::string out;
  unsigned jobs = 1;
  bool render = false;
};

struct EvalArgs {
  std::string dataset, split = "test", predictions, references, protocol = "simulation", out, format = "text";
  bool only_predicted = false, per_sample = false;
  unsigned jobs = 1;
};

struct StatsArgs {
  std::string dataset, split = "train", out, format = "text";
};

struct SolveArgs {
  std::string dataset, split = "test", method, out, references, candidates;
  unsigned jobs = 1;
  int max_len = 4, min_len = 2;
  bool max_len_set = false;
  std::uint64_t node_limit = SearchBudget{}.node_limit;
  std::int64_t time_limit_ms = SearchBudget{}.time_limit.count();
  std::uint64_t seed = 0;
};

struct ServeArgs {
  std::string data, host = "127.0.0.1", log = "tvr-sessions.ndjson", static_dir;
  int port = 8080;
};

struct SpaceArgs {
  int max_len = 4, objects = kObjectCount, values = kValueCount;
  bool raw = false;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  detail::need(a.setting, "--setting");
  detail::need(a.out, "--out");
  const auto setting = parse_setting(a.setting);
  if (!setting) throw UsageError("unknown setting '" + a.setting + "' (basic, event, view)");
  auto cfg = GeneratorConfig::defaults(*setting);
  if (a.train_set) cfg.train = a.train;
  if (a.val_set) cfg.val = a.val;
  if (a.test_set) cfg.test = a.test;
  cfg.seed = a.seed;
  cfg.shards = a.shards;
  cfg.options.tolerance = a.tolerance;
  const auto r = generate_dataset(cfg, a.out, a.jobs, a.render);
  out << "wrote " << r.directory.string() << ": train " << cfg.train << ", val " << cfg.val << ", test " << cfg.test
      << "\ndigest " << r.manifest["digest"].get<std::string>() << '\n';
  return kExitOk;
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
  detail::need(a.predictions, "--predictions");
  json report;
  if (a.protocol == "simulation") {
    detail::need(a.dataset, "--dataset");
    const auto samples = load_samples(split_file(a.dataset, detail::split_arg(a.split)));
    const auto preds = parse_predictions(tvr::detail::read_file(a.predictions), a.predictions);
    report = evaluate_simulation(samples, preds, a.only_predicted, a.jobs, true);
  } else if (a.protocol == "sequence") {
    detail::need(a.references, "--references");
    const auto refs = parse_sequences(tvr::detail::read_file(a.references), a.references);
    if (refs.empty()) throw UsageError(a.references + ": no records");
    auto preds = parse_sequences(tvr::detail::read_file(a.predictions), a.predictions);
    std::vector<SequencePrediction> subset;
    if (a.only_predicted) {
      std::set<std::string> wanted;
      for (const auto& p : preds) wanted.insert(p.id);
      for (const auto& r : refs) {
        if (wanted.count(r.id)) subset.push_back(r);
      }
    }
    report = report_to_json(eval_sequences(a.only_predicted ? subset : refs, preds), true);
  } else {
    throw UsageError("unknown protocol '" + a.protocol + "' (simulation, sequence)");
  }
  if (!a.out.empty()) write_file_atomic(a.out, report.dump(2) + "\n");
  if (a.format == "json") {
    if (!a.per_sample) report.erase("samples");
    out << report.dump(2) << '\n';
  } else if (a.format == "text") {
    out << detail::report_text(report);
  } else {
    throw UsageError("unknown format '" + a.format + "' (text, json)");
  }
  return kExitOk;
}

inline int cmd_stats(const StatsArgs& a, std::ostream& out) {
  detail::need(a.dataset, "--dataset");
  const auto samples = load_samples(split_file(a.dataset, detail::split_arg(a.split)));
  const auto r = balance_report(samples);
  const auto j = balance_report_to_json(r);
  if (!a.out.empty()) write_file_atomic(a.out, j.dump(2) + "\n");
  if (a.format == "json") {
    out << j.dump(2) << '\n';
  } else if (a.format == "text") {
    out << balance_report_to_text(r);
  } else {
    throw UsageError("unknown format '" + a.format + "' (text, json)");
  }
  return kExitOk;
}

inline int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  detail::need(a.method, "--method");
  detail::need(a.out, "--out");
  if (a.method == "random") {
    detail::need(a.references, "--references");
    const int hi = a.max_len_set ? a.max_len : 7;
    const auto refs = parse_sequences(tvr::detail::read_file(a.references), a.references);
    if (refs.empty()) throw UsageError(a.references + ": no records");
    std::vector<std::string> pool;
    if (!a.candidates.empty()) {
      pool = detail::read_candidates(a.candidates);
    } else {
      std::set<std::string> ids;
      for (const auto& r : refs) ids.insert(r.sequence.begin(), r.sequence.end());
      pool.assign(ids.begin(), ids.end());
    }
    std::vector<SequencePrediction> preds;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      Rng rng(mix_seed(a.seed, i));
      preds.push_back({refs[i].id, random_baseline(std::span<const std::string>(pool), a.min_len, hi, rng)});
    }
    write_file_atomic(a.out, records_to_ndjson(std::span<const SequencePrediction>(preds), sequence_to_json));
    out << "random: " << preds.size() << " predictions from a pool of " << pool.size() << " ids, lengths "
        << a.min_len << ".." << hi << '\n';
    return kExitOk;
  }

  const bool basic = a.method == "oracle-basic";
  if (!basic && a.method != "oracle-event") {
    throw UsageError("unknown method '" + a.method + "' (oracle-basic, oracle-event, random)");
  }
  detail::need(a.dataset, "--dataset");
  const auto samples = load_samples(split_file(a.dataset, detail::split_arg(a.split)));
  for (const auto& s : samples) {
    if (basic != (s.setting == Setting::Basic)) {
      throw UsageError(a.method + " cannot solve " + std::string(setting_name(s.setting)) + " sample '" + s.id + "'");
    }
  }
  SearchBudget budget;
  budget.max_len = a.max_len;
  budget.node_limit = a.node_limit;
  budget.time_limit = std::chrono::milliseconds(a.time_limit_ms);
  if (budget.max_len < 1) throw UsageError("--max-len must be at least 1");

  std::vector<SolveResult> results(samples.size());
  tvr::detail::parallel_for(samples.size(), a.jobs, [&](std::size_t i) {
    results[i] = basic ? solve_basic(samples[i].initial, samples[i].final)
                       : solve_event(samples[i].initial, samples[i].final, budget);
  });
  std::vector<Prediction> preds;
  std::vector<std::string> unsolved;
  std::uint64_t nodes = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    preds.push_back({samples[i].id, results[i].sequence});
    nodes += results[i].nodes_expanded;
    if (!results[i].solved) unsolved.push_back(samples[i].id);
  }
  write_file_atomic(a.out, records_to_ndjson(std::span<const Prediction>(preds), prediction_to_json));
  out << a.method << ": solved " << samples.size() - unsolved.size() << "/" << samples.size() << ", nodes expanded "
      << nodes << '\n';
  for (const auto& id : unsolved) err << "unsolved within budget: " << id << '\n';
  return kExitOk;
}

inline int cmd_serve(const ServeArgs& a, std::ostream& out) {
  detail::need(a.data, "--data");
  std::map<Setting, std::vector<Sample>> datasets;
  for (auto s : {Setting::Basic, Setting::Event, Setting::View}) {
    const auto file = std::filesystem::path(a.data) / std::string(setting_name(s)) / "test.ndjson";
    if (std::filesystem::exists(file)) datasets[s] = load_samples(file);
  }
  if (datasets.empty()) throw UsageError("no <setting>/test.ndjson found under " + a.data);
  Service service(std::move(datasets), a.log, static_cast<std::uint64_t>(now_ms()));
  httplib::Server server;
  mount(server, service, a.static_dir);
  out << "serving on http://" << a.host << ':' << a.port << " (log " << a.log << ")" << std::endl;
  if (!server.listen(a.host, a.port)) throw IoError("cannot listen on " + a.host + ":" + std::to_string(a.port));
  return kExitOk;
}

inline int cmd_spacesize(const SpaceArgs& a, std::ostream& out) {
  const auto n = search_space_size(a.max_len, a.objects, a.values);
  out << (a.raw ? n.str() : group_thousands(n)) << '\n';
  return kExitOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Transformation-driven visual reasoning toolkit", "tvr"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "INI/TOML file with option defaults (also TVR_CONFIG)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a balanced dataset");
  g->add_option("--setting", gen.setting, "basic, event or view");
  auto* g_train = g->add_option("--train", gen.train, "Train split size");
  auto* g_val = g->add_option("--val", gen.val, "Validation split size");
  auto* g_test = g->add_option("--test", gen.test, "Test split size");
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--shards", gen.shards, "Independent balance shards per split");
  g->add_option("--tolerance", gen.tolerance, "Balanced-choice tolerance t");
  g->add_option("--out", gen.out, "Output root directory");
  g->add_option("--jobs", gen.jobs, "Worker threads");
  g->add_flag("--render", gen.render, "Also write SVG views per sample");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a prediction file");
  e->add_option("--dataset", ev.dataset, "Dataset directory or ndjson file");
  e->add_option("--split", ev.split, "Split used when --dataset is a directory");
  e->add_option("--predictions", ev.predictions, "Prediction file");
  e->add_option("--references", ev.references, "Reference sequences (sequence protocol)");
  e->add_option("--protocol", ev.protocol, "simulation or sequence");
  e->add_option("--out", ev.out, "Write the full JSON report here");
  e->add_option("--format", ev.format, "text or json");
  e->add_flag("--only-predicted", ev.only_predicted, "Score only samples that have a prediction");
  e->add_flag("--per-sample", ev.per_sample, "Include per-sample verdicts in JSON output");
  e->add_option("--jobs", ev.jobs, "Worker threads");

  StatsArgs st;
  auto* s = app.add_subcommand("stats", "Balance statistics of a dataset");
  s->add_option("--dataset", st.dataset, "Dataset directory or ndjson file");
  s->add_option("--split", st.split, "Split used when --dataset is a directory");
  s->add_option("--out", st.out, "Write the JSON report here");
  s->add_option("--format", st.format, "text or json");

  SolveArgs so;
  auto* v = app.add_subcommand("solve", "Run a reference solver or the random baseline");
  v->add_option("--dataset", so.dataset, "Dataset directory or ndjson file");
  v->add_option("--split", so.split, "Split used when --dataset is a directory");
  v->add_option("--method", so.method, "oracle-basic, oracle-event or random");
  v->add_option("--out", so.out, "Prediction file to write");
  v->add_option("--references", so.references, "Reference sequences (random)");
  v->add_option("--candidates", so.candidates, "Candidate ids, one per line (random)");
  auto* v_max = v->add_option("--max-len", so.max_len, "Search depth, or maximum random length");
  v->add_option("--min-len", so.min_len, "Minimum random length");
  v->add_option("--node-limit", so.node_limit, "Node budget per sample");
  v->add_option("--time-limit-ms", so.time_limit_ms, "Time budget per sample");
  v->add_option("--seed", so.seed, "Random baseline seed");
  v->add_option("--jobs", so.jobs, "Worker threads");

  ServeArgs sv;
  auto* w = app.add_subcommand("serve", "Run the human test service");
  w->add_option("--data", sv.data, "Dataset root holding <setting>/test.ndjson");
  w->add_option("--host", sv.host, "Bind address");
  w->add_option("--port", sv.port, "Port");
  w->add_option("--log", sv.log, "Append-only session log");
  w->add_option("--static", sv.static_dir, "Static web UI directory");

  SpaceArgs sp;
  auto* z = app.add_subcommand("spacesize", "Size of the answer space");
  z->add_option("--max-len", sp.max_len, "Maximum sequence length");
  z->add_option("--objects", sp.objects, "Number of objects");
  z->add_option("--values", sp.values, "Number of values");
  z->add_flag("--raw", sp.raw, "Print without digit grouping");

  for (auto* sub : app.get_subcommands({})) sub->allow_extras();

  try {
    const auto cfg = detail::config_path(argc, argv);
    if (!cfg.empty()) {
      if (!std::filesystem::exists(cfg)) throw IoError("cannot read config " + cfg);
      detail::apply_config(app, CLI::ConfigINI().from_file(cfg));
    }
    detail::set_env_names(app);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? kExitOk : kExitValidation;
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitValidation;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (!chosen->remaining().empty()) {
    err << "error: " << detail::describe_unknown(chosen->remaining(), *chosen);
    return kExitValidation;
  }
  gen.train_set = g_train->count() > 0 || !g_train->get_default_str().empty() || std::getenv("TVR_TRAIN");
  gen.val_set = g_val->count() > 0 || !g_val->get_default_str().empty() || std::getenv("TVR_VAL");
  gen.test_set = g_test->count() > 0 || !g_test->get_default_str().empty() || std::getenv("TVR_TEST");
  so.max_len_set = v_max->count() > 0 || !v_max->get_default_str().empty() || std::getenv("TVR_MAX_LEN");

  try {
    if (chosen == g) return cmd_generate(gen, out);
    if (chosen == e) return cmd_eval(ev, out);
    if (chosen == s) return cmd_stats(st, out);
    if (chosen == v) return cmd_solve(so, out, err);
    if (chosen == w) return cmd_serve(sv, out);
    return cmd_spacesize(sp, out);
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace tvr::cli
