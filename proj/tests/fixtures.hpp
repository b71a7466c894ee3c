#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "tvr/tvr.hpp"

namespace fixtures {

using namespace tvr;

inline ValueId v(std::string_view name) { return value_by_name(name); }

inline AtomicTransformation step(int obj, std::string_view value) { return {obj, v(value)}; }

/// Objects 0-4 visible along y = -20, objects 5-9 hidden along y = 40.
inline Scene row_scene() {
  Scene s;
  for (int i = 0; i < kObjectCount; ++i) {
    auto& o = s[i];
    o.index = i;
    o.shape = ValueId{8 + i % 3};
    o.size = ValueId{11 + i % 3};
    o.color = ValueId{i % 8};
    o.material = ValueId{14 + i % 3};
    o.position = i < 5 ? Position{-20 + 10 * i, -20} : Position{-20 + 10 * (i - 5), 40};
  }
  return s;
}

inline Scene with_position(Scene s, int obj, int x, int y) {
  s[obj].position = {x, y};
  return s;
}

/// Small generated set; cached per (setting, count, seed).
inline std::vector<Sample> generated(Setting setting, std::size_t count, std::uint64_t seed = 11) {
  GeneratorConfig cfg = GeneratorConfig::defaults(setting);
  cfg.seed = seed;
  cfg.train = count;
  cfg.val = 0;
  cfg.test = 0;
  return generate_split(cfg, Split::Train).samples;
}

/// Fresh scratch directory removed on destruction.
class TempDir {
public:
  TempDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "tvr-test-XXXXXX").string();
    char* p = ::mkdtemp(templ.data());
    if (!p) throw std::runtime_error("mkdtemp failed");
    path_ = p;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

}  // namespace fixtures
