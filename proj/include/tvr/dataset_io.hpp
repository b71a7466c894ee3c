#pragma once

// Newline-delimited JSON records for samples, predictions and sequence
// references, plus manifest and atomic file output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "tvr/generator.hpp"
#include "tvr/scene.hpp"

namespace tvr {

using json = nlohmann::ordered_json;

/// Filesystem failure (unreadable input, unwritable output).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed record in a line-oriented file; `line` is 1-based.
class RecordError : public std::runtime_error {
public:
  RecordError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// scenes and transformations

inline json object_to_json(const ObjectState& o) {
  return {{"index", o.index},
          {"shape", value_name(o.shape)},
          {"size", value_name(o.size)},
          {"color", value_name(o.color)},
          {"material", value_name(o.material)},
          {"x", o.position.x},
          {"y", o.position.y}};
}

inline json scene_to_json(const Scene& s) {
  json arr = json::array();
  for (const auto& o : s.objects) arr.push_back(object_to_json(o));
  return arr;
}

namespace detail {

inline ValueId json_value_of_kind(const json& j, const char* field, AttributeKind kind) {
  const auto name = j.at(field).get<std::string>();
  const auto v = parse_value(name);
  if (!v || value_kind(*v) != kind) {
    throw ParseError("invalid " + std::string(field) + " '" + name + "'", name, 0);
  }
  return *v;
}

}  // namespace detail

inline Scene scene_from_json(const json& arr) {
  if (!arr.is_array() || arr.size() != kObjectCount) {
    throw std::invalid_argument("scene must list exactly 10 objects");
  }
  Scene s;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& j = arr[i];
    const int idx = j.at("index").get<int>();
    if (idx != static_cast<int>(i)) throw std::invalid_argument("objects must be listed in index order");
    auto& o = s[idx];
    o.index = idx;
    o.shape = detail::json_value_of_kind(j, "shape", AttributeKind::Shape);
    o.size = detail::json_value_of_kind(j, "size", AttributeKind::Size);
    o.color = detail::json_value_of_kind(j, "color", AttributeKind::Color);
    o.material = detail::json_value_of_kind(j, "material", AttributeKind::Material);
    o.position = {j.at("x").get<int>(), j.at("y").get<int>()};
  }
  return s;
}

inline json atomic_to_json(const AtomicTransformation& t, bool with_attr = true) {
  json j = {{"obj", t.object}};
  if (with_attr) j["attr"] = attribute_name(t.kind());
  j["value"] = value_name(t.value);
  return j;
}

inline json transformation_to_json(std::span<const AtomicTransformation> steps, bool with_attr = true) {
  json arr = json::array();
  for (const auto& t : steps) arr.push_back(atomic_to_json(t, with_attr));
  return arr;
}

/// Parses [{obj, value[, attr]} | "(o, attr, value)", ...]. ParseError
/// positions are list indices.
inline Transformation transformation_from_json(const json& arr) {
  if (!arr.is_array()) throw ParseError("transformation must be an array", arr.dump(), 0);
  Transformation out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& j = arr[i];
    if (j.is_string()) {
      try {
        out.push_back(parse_atomic(j.get<std::string>()));
      } catch (const ParseError& e) {
        throw ParseError("step " + std::to_string(i) + ": " + e.what(), e.token(), i);
      }
      continue;
    }
    if (!j.is_object() || !j.contains("obj") || !j.contains("value")) {
      throw ParseError("step " + std::to_string(i) + ": expected {obj, value}", j.dump(), i);
    }
    int obj = -1;
    if (j["obj"].is_number_integer()) {
      obj = j["obj"].get<int>();
      if (obj < 0 || obj >= kObjectCount) {
        throw ParseError("step " + std::to_string(i) + ": object index out of range",
                         j["obj"].dump(), i);
      }
    } else if (j["obj"].is_string()) {
      try {
        obj = parse_object_index(j["obj"].get<std::string>(), i);
      } catch (const ParseError& e) {
        throw ParseError("step " + std::to_string(i) + ": " + e.what(), e.token(), i);
      }
    } else {
      throw ParseError("step " + std::to_string(i) + ": invalid object index", j["obj"].dump(), i);
    }
    if (!j["value"].is_string()) {
      throw ParseError("step " + std::to_string(i) + ": value must be a string", j["value"].dump(), i);
    }
    const auto vtok = j["value"].get<std::string>();
    const auto v = parse_value(vtok);
    if (!v) throw ParseError("step " + std::to_string(i) + ": unknown value '" + vtok + "'", vtok, i);
    if (j.contains("attr")) {
      const auto atok = j["attr"].is_string() ? j["attr"].get<std::string>() : j["attr"].dump();
      const auto a = parse_attribute(atok);
      if (!a) throw ParseError("step " + std::to_string(i) + ": unknown attribute '" + atok + "'", atok, i);
      if (*a != value_kind(*v)) {
        throw ParseError("step " + std::to_string(i) + ": value '" + vtok + "' is not a " + atok, vtok, i);
      }
    }
    out.push_back({obj, *v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// samples

inline json sample_to_json(const Sample& s) {
  json views = json::array();
  for (auto v : s.views) views.push_back(view_name(v));
  return {{"id", s.id},
          {"setting", setting_name(s.setting)},
          {"split", split_name(s.split)},
          {"seed", s.seed},
          {"objects", scene_to_json(s.initial)},
          {"final_objects", scene_to_json(s.final)},
          {"transformation", transformation_to_json(s.reference)},
          {"views", views}};
}

inline Sample sample_from_json(const json& j) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  const auto setting = parse_setting(j.at("setting").get<std::string>());
  const auto split = parse_split(j.at("split").get<std::string>());
  if (!setting) throw std::invalid_argument("unknown setting");
  if (!split) throw std::invalid_argument("unknown split");
  s.setting = *setting;
  s.split = *split;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.initial = scene_from_json(j.at("objects"));
  s.final = scene_from_json(j.at("final_objects"));
  s.reference = transformation_from_json(j.at("transformation"));
  for (const auto& v : j.at("views")) {
    const auto tag = parse_view(v.get<std::string>());
    if (!tag) throw std::invalid_argument("unknown view tag");
    s.views.push_back(*tag);
  }
  return s;
}

inline std::string samples_to_ndjson(std::span<const Sample> samples) {
  std::string out;
  for (const auto& s : samples) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Calls `fn(json, line_number)` for every non-blank line; wraps failures in
/// RecordError.
template <class Fn>
void for_each_record(const std::string& text, const std::string& name, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line), n);
    } catch (const RecordError&) {
      throw;
    } catch (const std::exception& e) {
      throw RecordError(name, n, e.what());
    }
  }
}

}  // namespace detail

inline std::vector<Sample> parse_samples(const std::string& text, const std::string& name = "<input>") {
  std::vector<Sample> out;
  std::set<std::string> ids;
  detail::for_each_record(text, name, [&](const json& j, std::size_t line) {
    auto s = sample_from_json(j);
    if (!ids.insert(s.id).second) throw RecordError(name, line, "duplicate sample id '" + s.id + "'");
    out.push_back(std::move(s));
  });
  return out;
}

/// `path` is either an ndjson file or a dataset directory holding
/// `<split>.ndjson`.
inline std::filesystem::path split_file(const std::filesystem::path& path, Split split) {
  if (std::filesystem::is_directory(path)) return path / (std::string(split_name(split)) + ".ndjson");
  return path;
}

inline std::vector<Sample> load_samples(const std::filesystem::path& file) {
  auto samples = parse_samples(detail::read_file(file), file.string());
  if (samples.empty()) throw std::invalid_argument(file.string() + ": no records");
  return samples;
}

// ---------------------------------------------------------------------------
// predictions

struct Prediction {
  std::string id;
  Transformation steps;
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct SequencePrediction {
  std::string id;
  std::vector<std::string> sequence;
  friend bool operator==(const SequencePrediction&, const SequencePrediction&) = default;
};

inline json prediction_to_json(const Prediction& p) {
  return {{"id", p.id}, {"transformation", transformation_to_json(p.steps, false)}};
}

inline json sequence_to_json(const SequencePrediction& p) {
  return {{"id", p.id}, {"sequence", p.sequence}};
}

inline std::vector<Prediction> parse_predictions(const std::string& text, const std::string& name = "<input>") {
  std::vector<Prediction> out;
  std::set<std::string> ids;
  detail::for_each_record(text, name, [&](const json& j, std::size_t line) {
    Prediction p{j.at("id").get<std::string>(), transformation_from_json(j.at("transformation"))};
    if (!ids.insert(p.id).second) throw RecordError(name, line, "duplicate prediction id '" + p.id + "'");
    out.push_back(std::move(p));
  });
  return out;
}

/// Sequence-protocol records {id, sequence}; used for both references and
/// predictions.
inline std::vector<SequencePrediction> parse_sequences(const std::string& text,
                                                       const std::string& name = "<input>") {
  std::vector<SequencePrediction> out;
  std::set<std::string> ids;
  detail::for_each_record(text, name, [&](const json& j, std::size_t line) {
    SequencePrediction p{j.at("id").get<std::string>(), j.at("sequence").get<std::vector<std::string>>()};
    if (!ids.insert(p.id).second) throw RecordError(name, line, "duplicate id '" + p.id + "'");
    out.push_back(std::move(p));
  });
  return out;
}

template <class Record, class ToJson>
std::string records_to_ndjson(std::span<const Record> records, ToJson&& to_json) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// files

/// Writes `content` to a sibling temporary and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream ss;
  for (unsigned i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

inline json config_to_json(const GeneratorConfig& c) {
  return {{"setting", setting_name(c.setting)},
          {"train", c.train},
          {"val", c.val},
          {"test", c.test},
          {"seed", c.seed},
          {"shards", c.shards},
          {"tolerance", c.options.tolerance},
          {"min_visible", c.options.min_visible},
          {"max_visible", c.options.max_visible}};
}

}  // namespace tvr
