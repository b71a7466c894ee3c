#pragma once

#include <filesystem>
#include <string>

#include "tvr/dataset_io.hpp"
#include "tvr/generator.hpp"
#include "tvr/render.hpp"

namespace tvr {

struct GenerateResult {
  std::filesystem::path directory;
  json manifest;
};

/// Writes `<out>/<setting>/{train,val,test}.ndjson` and `manifest.json`.
/// Output is a function of `cfg` alone; `jobs` only changes wall time.
inline GenerateResult generate_dataset(const GeneratorConfig& cfg, const std::filesystem::path& out,
                                       unsigned jobs = 1, bool render = false) {
  if (cfg.train + cfg.val + cfg.test == 0) throw std::invalid_argument("all split sizes are zero");
  if (cfg.shards == 0) throw std::invalid_argument("shards must be at least 1");
  if (cfg.options.min_visible < 0 || cfg.options.max_visible > kObjectCount ||
      cfg.options.min_visible > cfg.options.max_visible) {
    throw std::invalid_argument("invalid visible-object range");
  }
  if (!(cfg.options.tolerance > 0)) throw std::invalid_argument("tolerance must be positive");

  const auto dir = out / std::string(setting_name(cfg.setting));
  json files = json::object();
  json counts = json::object();
  std::string digest_input;
  for (auto split : kSplits) {
    const auto name = std::string(split_name(split)) + ".ndjson";
    const auto result = generate_split(cfg, split, jobs);
    const auto text = samples_to_ndjson(result.samples);
    write_file_atomic(dir / name, text);
    const auto sha = sha256_hex(text);
    files[name] = {{"records", result.samples.size()}, {"sha256", sha}};
    counts[std::string(split_name(split))] = result.samples.size();
    digest_input += name + ':' + sha + '\n';
    if (render) {
      for (const auto& s : result.samples) {
        const auto sdir = dir / "render" / s.id;
        write_file_atomic(sdir / "initial.svg", render_svg(s.initial, ViewTag::Center));
        for (auto v : s.views) {
          write_file_atomic(sdir / ("final_" + std::string(view_name(v)) + ".svg"), render_svg(s.final, v));
        }
      }
    }
  }
  json manifest = {{"format", "tvr-dataset/1"},
                   {"config", config_to_json(cfg)},
                   {"counts", counts},
                   {"files", files},
                   {"digest", sha256_hex(digest_input)}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return {dir, manifest};
}

}  // namespace tvr
