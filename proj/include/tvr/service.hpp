#pragma once

// Human test service: sessions over the test split, reference-free sample
// payloads, answer collection and end-of-session reports. State is persisted
// in an append-only ndjson log and rebuilt by replaying it.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tvr/dataset_io.hpp"
#include "tvr/generator.hpp"
#include "tvr/metrics.hpp"
#include "tvr/random.hpp"
#include "tvr/render.hpp"

namespace tvr {

/// Rejected request; `status` is the HTTP status to answer with.
class ServiceError : public std::runtime_error {
public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  json to_json() const { return {{"error", {{"code", code_}, {"message", what()}}}}; }

private:
  int status_;
  std::string code_;
};

/// One-writer append-only line log. Each record goes out in a single write()
/// on an O_APPEND descriptor.
class RecordLog {
public:
  RecordLog() = default;
  explicit RecordLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open log " + path_.string());
  }
  RecordLog(const RecordLog&) = delete;
  RecordLog& operator=(const RecordLog&) = delete;
  ~RecordLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  bool enabled() const { return fd_ >= 0; }
  const std::filesystem::path& path() const { return path_; }

  void append(const json& record) {
    if (fd_ < 0) return;
    const auto line = record.dump() + "\n";
    std::lock_guard lock(mu_);
    const auto n = ::write(fd_, line.data(), line.size());
    if (n != static_cast<ssize_t>(line.size())) throw IoError("short write to " + path_.string());
    ::fdatasync(fd_);
  }

  static std::vector<json> read(const std::filesystem::path& path) {
    std::vector<json> out;
    if (!std::filesystem::exists(path)) return out;
    detail::for_each_record(detail::read_file(path), path.string(),
                            [&](const json& j, std::size_t) { out.push_back(j); });
    return out;
  }

private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex mu_;
};

struct AnswerRecord {
  std::string sample_id;
  Transformation transformation;
  std::int64_t timestamp_ms = 0;
};

struct Session {
  std::string id;
  std::string name;
  Setting setting = Setting::Event;
  std::uint64_t seed = 0;
  std::vector<std::string> sample_ids;
  std::vector<ViewTag> views;  // final view per sample
  std::vector<AnswerRecord> answers;
  std::int64_t created_ms = 0;
  std::mutex mu;

  std::size_t cursor() const { return answers.size(); }
  bool complete() const { return answers.size() == sample_ids.size(); }
};

inline std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

/// Catalog of the 33 values grouped by attribute, as shown to testers.
inline json value_catalog() {
  json j = json::object();
  for (auto kind : kAttributeKinds) {
    json names = json::array();
    for (auto v : values_of(kind)) names.push_back(value_name(v));
    j[std::string(attribute_name(kind))] = names;
  }
  return j;
}

class Service {
public:
  /// `datasets` holds the test split per setting. An empty `log_path` keeps
  /// state in memory only; otherwise the log is replayed first.
  explicit Service(std::map<Setting, std::vector<Sample>> datasets, std::filesystem::path log_path = {},
                   std::uint64_t id_seed = 0)
      : datasets_(std::move(datasets)), id_seed_(id_seed) {
    for (const auto& [setting, samples] : datasets_) {
      for (std::size_t i = 0; i < samples.size(); ++i) index_[samples[i].id] = {setting, i};
    }
    if (!log_path.empty()) {
      for (const auto& rec : RecordLog::read(log_path)) replay(rec);
      log_ = std::make_unique<RecordLog>(log_path);
    }
  }

  json health() const {
    json counts = json::object();
    for (const auto& [s, v] : datasets_) counts[std::string(setting_name(s))] = v.size();
    std::shared_lock lock(sessions_mu_);
    return {{"status", "ok"}, {"datasets", counts}, {"sessions", sessions_.size()}};
  }

  json create_session(const std::string& name, const std::string& setting_text, std::int64_t count,
                      std::optional<std::uint64_t> seed = std::nullopt) {
    const auto setting = parse_setting(setting_text);
    if (!setting) throw ServiceError(400, "unknown_setting", "unknown setting '" + setting_text + "'");
    auto it = datasets_.find(*setting);
    if (it == datasets_.end()) {
      throw ServiceError(404, "dataset_unavailable", "no " + setting_text + " dataset loaded");
    }
    const auto& samples = it->second;
    if (samples.empty()) throw ServiceError(409, "empty_dataset", "the " + setting_text + " dataset is empty");
    if (count < 1 || static_cast<std::size_t>(count) > samples.size()) {
      throw ServiceError(400, "invalid_count",
                         "count must be in 1.." + std::to_string(samples.size()) + ", got " + std::to_string(count));
    }
    const std::uint64_t s = seed ? *seed : static_cast<std::uint64_t>(now_ms());

    auto session = std::make_shared<Session>();
    session->name = name;
    session->setting = *setting;
    session->seed = s;
    session->created_ms = now_ms();
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(s, 0x5e55));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::int64_t i = 0; i < count; ++i) {
      const auto& sample = samples[order[static_cast<std::size_t>(i)]];
      session->sample_ids.push_back(sample.id);
      session->views.push_back(final_view(sample, rng));
    }

    std::unique_lock lock(sessions_mu_);
    session->id = next_session_id();
    json rec = {{"type", "session"},
                {"id", session->id},
                {"name", session->name},
                {"setting", setting_name(session->setting)},
                {"seed", session->seed},
                {"sample_ids", session->sample_ids},
                {"views", views_json(session->views)},
                {"timestamp", session->created_ms}};
    if (log_) log_->append(rec);
    sessions_[session->id] = session;
    return describe(*session);
  }

  json describe(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return describe(*s);
  }

  /// Payload for the current sample, or {"end": true} once every sample has
  /// been answered. Never carries the reference transformation.
  json next_sample(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (s->complete()) {
      return {{"end", true}, {"session", s->id}, {"count", s->sample_ids.size()}};
    }
    const auto cursor = s->cursor();
    const auto& sample = sample_by_id(s->sample_ids[cursor]);
    json objects = json::array();
    for (const auto& o : sample.initial.objects) {
      auto row = object_to_json(o);
      row["visible"] = o.visible();
      objects.push_back(row);
    }
    const auto view = s->views[cursor];
    return {{"end", false},
            {"session", s->id},
            {"setting", setting_name(s->setting)},
            {"index", cursor},
            {"count", s->sample_ids.size()},
            {"sample_id", sample.id},
            {"view", view_name(view)},
            {"initial_svg", render_svg(sample.initial, ViewTag::Center)},
            {"final_svg", render_svg(sample.final, view)},
            {"objects", objects},
            {"catalog", value_catalog()},
            {"max_steps", s->setting == Setting::Basic ? 1 : 4}};
  }

  /// Accepts {sample_id, transformation}. The verdict is withheld.
  json submit_answer(const std::string& id, const json& body) {
    if (!body.is_object() || !body.contains("sample_id") || !body["sample_id"].is_string() ||
        !body.contains("transformation")) {
      throw ServiceError(400, "invalid_body", "expected {sample_id, transformation}");
    }
    const auto sample_id = body["sample_id"].get<std::string>();
    Transformation steps;
    try {
      steps = transformation_from_json(body["transformation"]);
    } catch (const ParseError& e) {
      throw ServiceError(400, "parse_error", std::string(e.what()) + " (token '" + e.token() + "', step " +
                                                std::to_string(e.position()) + ")");
    }
    auto s = find(id);
    std::lock_guard lock(s->mu);
    check_answer(*s, sample_id);
    AnswerRecord a{sample_id, std::move(steps), now_ms()};
    if (log_) {
      log_->append({{"type", "answer"},
                    {"session", s->id},
                    {"sample_id", a.sample_id},
                    {"transformation", transformation_to_json(a.transformation, false)},
                    {"timestamp", a.timestamp_ms}});
    }
    s->answers.push_back(std::move(a));
    return {{"ok", true},
            {"session", s->id},
            {"sample_id", sample_id},
            {"answered", s->answers.size()},
            {"remaining", s->sample_ids.size() - s->answers.size()}};
  }

  /// Same evaluation path as the offline `eval --only-predicted` over the
  /// exported answers.
  json report(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (!s->complete()) {
      throw ServiceError(409, "incomplete_session", std::to_string(s->answers.size()) + " of " +
                                                        std::to_string(s->sample_ids.size()) +
                                                        " samples answered");
    }
    const auto preds = predictions(*s);
    auto r = evaluate_simulation(datasets_.at(s->setting), preds, true);
    r["session"] = s->id;
    r["name"] = s->name;
    return r;
  }

  /// Answers as a prediction file.
  std::string export_answers(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    const auto preds = predictions(*s);
    return records_to_ndjson(std::span<const Prediction>(preds), prediction_to_json);
  }

  std::vector<std::string> session_ids() const {
    std::shared_lock lock(sessions_mu_);
    std::vector<std::string> ids;
    for (const auto& [k, v] : sessions_) ids.push_back(k);
    return ids;
  }

  /// Canonical dump of all session state, used to compare replayed state.
  json snapshot() const {
    std::shared_lock lock(sessions_mu_);
    json out = json::array();
    for (const auto& [k, s] : sessions_) {
      std::lock_guard l(s->mu);
      json answers = json::array();
      for (const auto& a : s->answers) {
        answers.push_back({{"sample_id", a.sample_id},
                           {"transformation", transformation_to_json(a.transformation, false)},
                           {"timestamp", a.timestamp_ms}});
      }
      out.push_back({{"id", s->id},
                     {"name", s->name},
                     {"setting", setting_name(s->setting)},
                     {"seed", s->seed},
                     {"sample_ids", s->sample_ids},
                     {"views", views_json(s->views)},
                     {"answers", answers}});
    }
    return out;
  }

private:
  static ViewTag final_view(const Sample& sample, Rng& rng) {
    std::vector<ViewTag> choices;
    for (auto v : sample.views) {
      if (v != ViewTag::Center) choices.push_back(v);
    }
    if (choices.empty()) return ViewTag::Center;
    return choices[rng.below(choices.size())];
  }

  static json views_json(const std::vector<ViewTag>& views) {
    json j = json::array();
    for (auto v : views) j.push_back(view_name(v));
    return j;
  }

  static json describe(const Session& s) {
    return {{"id", s.id},
            {"name", s.name},
            {"setting", setting_name(s.setting)},
            {"seed", s.seed},
            {"count", s.sample_ids.size()},
            {"answered", s.answers.size()},
            {"sample_ids", s.sample_ids}};
  }

  std::string next_session_id() {
    for (;;) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(mix_seed(id_seed_, 0x1d, ++id_counter_)));
      if (!sessions_.count(buf)) return buf;
    }
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session '" + id + "'");
    return it->second;
  }

  const Sample& sample_by_id(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ServiceError(404, "unknown_sample", "no sample '" + id + "'");
    return datasets_.at(it->second.first)[it->second.second];
  }

  static void check_answer(const Session& s, const std::string& sample_id) {
    for (const auto& a : s.answers) {
      if (a.sample_id == sample_id) {
        throw ServiceError(409, "already_answered", "sample '" + sample_id + "' was already answered");
      }
    }
    if (s.complete()) throw ServiceError(409, "session_complete", "all samples have been answered");
    const auto& expected = s.sample_ids[s.cursor()];
    if (sample_id != expected) {
      throw ServiceError(409, "out_of_order",
                         "expected an answer for '" + expected + "', got '" + sample_id + "'");
    }
  }

  static std::vector<Prediction> predictions(const Session& s) {
    std::vector<Prediction> out;
    for (const auto& a : s.answers) out.push_back({a.sample_id, a.transformation});
    return out;
  }

  void replay(const json& rec) {
    const auto type = rec.at("type").get<std::string>();
    if (type == "session") {
      auto s = std::make_shared<Session>();
      s->id = rec.at("id").get<std::string>();
      s->name = rec.at("name").get<std::string>();
      const auto setting = parse_setting(rec.at("setting").get<std::string>());
      if (!setting) throw std::runtime_error("log: unknown setting in session " + s->id);
      s->setting = *setting;
      s->seed = rec.at("seed").get<std::uint64_t>();
      s->sample_ids = rec.at("sample_ids").get<std::vector<std::string>>();
      for (const auto& v : rec.at("views")) {
        const auto tag = parse_view(v.get<std::string>());
        if (!tag) throw std::runtime_error("log: unknown view in session " + s->id);
        s->views.push_back(*tag);
      }
      s->created_ms = rec.at("timestamp").get<std::int64_t>();
      for (const auto& id : s->sample_ids) sample_by_id(id);
      sessions_[s->id] = s;
      ++id_counter_;
    } else if (type == "answer") {
      auto s = find(rec.at("session").get<std::string>());
      const auto sample_id = rec.at("sample_id").get<std::string>();
      check_answer(*s, sample_id);
      s->answers.push_back(
          {sample_id, transformation_from_json(rec.at("transformation")), rec.at("timestamp").get<std::int64_t>()});
    } else {
      throw std::runtime_error("log: unknown record type '" + type + "'");
    }
  }

  std::map<Setting, std::vector<Sample>> datasets_;
  std::map<std::string, std::pair<Setting, std::size_t>> index_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  mutable std::shared_mutex sessions_mu_;
  std::unique_ptr<RecordLog> log_;
  std::uint64_t id_seed_ = 0;
  std::uint64_t id_counter_ = 0;
};

}  // namespace tvr
