#pragma once

// World model: attribute vocabularies, lattice geometry, objects, scenes and
// atomic transformations, plus their canonical string encodings.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tvr {

inline constexpr int kObjectCount = 10;
inline constexpr int kValueCount = 33;
inline constexpr int kStepUnit = 10;
inline constexpr int kPlaneBound = 40;
inline constexpr int kVisibleBound = 20;

/// Raised when a canonical encoding cannot be parsed. `token` holds the
/// offending text and `position` its character offset (or list index, when
/// the caller parses structured records).
class ParseError : public std::runtime_error {
public:
  ParseError(std::string message, std::string token, std::size_t position)
      : std::runtime_error(std::move(message)), token_(std::move(token)), position_(position) {}

  const std::string& token() const noexcept { return token_; }
  std::size_t position() const noexcept { return position_; }

private:
  std::string token_;
  std::size_t position_;
};

enum class AttributeKind : std::uint8_t { Shape, Size, Color, Material, Position };

inline constexpr std::array<AttributeKind, 5> kAttributeKinds = {
    AttributeKind::Shape, AttributeKind::Size, AttributeKind::Color, AttributeKind::Material,
    AttributeKind::Position};

inline constexpr std::string_view attribute_name(AttributeKind kind) {
  switch (kind) {
  case AttributeKind::Shape: return "shape";
  case AttributeKind::Size: return "size";
  case AttributeKind::Color: return "color";
  case AttributeKind::Material: return "material";
  case AttributeKind::Position: return "position";
  }
  return "?";
}

inline std::optional<AttributeKind> parse_attribute(std::string_view name) {
  for (auto kind : kAttributeKinds) {
    if (attribute_name(kind) == name) return kind;
  }
  return std::nullopt;
}

enum class Direction : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array<Direction, 8> kDirections = {
    Direction::N, Direction::NE, Direction::E, Direction::SE,
    Direction::S, Direction::SW, Direction::W, Direction::NW};

struct Offset {
  int dx = 0;
  int dy = 0;
  friend constexpr bool operator==(Offset, Offset) = default;
};

/// Per-axis unit displacement; +y is north.
inline constexpr Offset unit_offset(Direction d) {
  switch (d) {
  case Direction::N: return {0, 1};
  case Direction::NE: return {1, 1};
  case Direction::E: return {1, 0};
  case Direction::SE: return {1, -1};
  case Direction::S: return {0, -1};
  case Direction::SW: return {-1, -1};
  case Direction::W: return {-1, 0};
  case Direction::NW: return {-1, 1};
  }
  return {0, 0};
}

inline constexpr std::string_view direction_name(Direction d) {
  constexpr std::array<std::string_view, 8> names = {"n", "ne", "e", "se", "s", "sw", "w", "nw"};
  return names[static_cast<std::size_t>(d)];
}

/// Coordinate displacement of a move. Diagonal moves displace both axes by
/// the full step length.
inline Offset displacement(Direction d, int step) {
  if (step != 1 && step != 2) {
    throw std::invalid_argument("move step must be 1 or 2, got " + std::to_string(step));
  }
  const auto u = unit_offset(d);
  return {u.dx * step * kStepUnit, u.dy * step * kStepUnit};
}

/// Index into the 33-entry value catalog.
///
/// Layout: colors 0..7, shapes 8..10, sizes 11..13, materials 14..16, moves
/// 17..32 (direction-major, step-minor).
struct ValueId {
  std::uint8_t raw = 0;

  constexpr ValueId() = default;
  constexpr explicit ValueId(int id) : raw(static_cast<std::uint8_t>(id)) {}

  constexpr int get() const { return raw; }
  friend constexpr auto operator<=>(ValueId, ValueId) = default;
};

namespace detail {

struct KindRange {
  AttributeKind kind;
  int first;
  int count;
};

inline constexpr std::array<KindRange, 5> kKindRanges = {{
    {AttributeKind::Color, 0, 8},
    {AttributeKind::Shape, 8, 3},
    {AttributeKind::Size, 11, 3},
    {AttributeKind::Material, 14, 3},
    {AttributeKind::Position, 17, 16},
}};

inline constexpr std::array<std::string_view, 17> kCategoricalNames = {
    "gray", "red",  "blue",   "green",    "brown",  "purple", "cyan",  "yellow", "cube",
    "sphere", "cylinder", "small", "medium", "large", "rubber", "metal", "glass"};

inline constexpr std::array<std::string_view, 16> kMoveNames = {
    "n,1",  "n,2",  "ne,1", "ne,2", "e,1",  "e,2",  "se,1", "se,2",
    "s,1",  "s,2",  "sw,1", "sw,2", "w,1",  "w,2",  "nw,1", "nw,2"};

inline void check_value(ValueId v) {
  if (v.get() >= kValueCount) {
    throw std::out_of_range("value id " + std::to_string(v.get()) + " outside catalog");
  }
}

}  // namespace detail

inline AttributeKind value_kind(ValueId v) {
  detail::check_value(v);
  for (const auto& r : detail::kKindRanges) {
    if (v.get() < r.first + r.count) return r.kind;
  }
  throw std::out_of_range("value id outside catalog");
}

/// All value ids owned by `kind`, in catalog order.
inline std::vector<ValueId> values_of(AttributeKind kind) {
  for (const auto& r : detail::kKindRanges) {
    if (r.kind == kind) {
      std::vector<ValueId> out;
      out.reserve(static_cast<std::size_t>(r.count));
      for (int i = 0; i < r.count; ++i) out.emplace_back(r.first + i);
      return out;
    }
  }
  return {};
}

inline std::string_view value_name(ValueId v) {
  detail::check_value(v);
  if (v.get() < 17) return detail::kCategoricalNames[static_cast<std::size_t>(v.get())];
  return detail::kMoveNames[static_cast<std::size_t>(v.get() - 17)];
}

inline std::optional<ValueId> parse_value(std::string_view name) {
  for (int i = 0; i < kValueCount; ++i) {
    if (value_name(ValueId{i}) == name) return ValueId{i};
  }
  return std::nullopt;
}

inline ValueId value_by_name(std::string_view name) {
  auto v = parse_value(name);
  if (!v) throw ParseError("unknown value '" + std::string(name) + "'", std::string(name), 0);
  return *v;
}

struct Move {
  Direction direction;
  int step;
};

inline ValueId move_value(Direction d, int step) {
  if (step != 1 && step != 2) throw std::invalid_argument("move step must be 1 or 2");
  return ValueId{17 + static_cast<int>(d) * 2 + (step - 1)};
}

inline Move move_of(ValueId v) {
  if (value_kind(v) != AttributeKind::Position) {
    throw std::invalid_argument("value '" + std::string(value_name(v)) + "' is not a move");
  }
  const int k = v.get() - 17;
  return {static_cast<Direction>(k / 2), k % 2 + 1};
}

inline Offset displacement(ValueId move) {
  const auto m = move_of(move);
  return displacement(m.direction, m.step);
}

inline int footprint_radius(ValueId size) {
  if (value_kind(size) != AttributeKind::Size) {
    throw std::invalid_argument("value '" + std::string(value_name(size)) + "' is not a size");
  }
  return 3 + (size.get() - 11);
}

struct Position {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(Position, Position) = default;
};

inline constexpr Position operator+(Position p, Offset o) { return {p.x + o.dx, p.y + o.dy}; }

inline constexpr bool in_plane(Position p) {
  return std::abs(p.x) <= kPlaneBound && std::abs(p.y) <= kPlaneBound;
}

inline constexpr bool on_lattice(Position p) { return p.x % kStepUnit == 0 && p.y % kStepUnit == 0; }

inline constexpr bool is_visible(Position p) {
  return std::abs(p.x) <= kVisibleBound && std::abs(p.y) <= kVisibleBound;
}

struct ObjectState {
  int index = 0;
  ValueId shape{8};
  ValueId size{11};
  ValueId color{0};
  ValueId material{14};
  Position position{};

  /// Categorical slot for `kind`; Position has no value id.
  ValueId attribute(AttributeKind kind) const {
    switch (kind) {
    case AttributeKind::Shape: return shape;
    case AttributeKind::Size: return size;
    case AttributeKind::Color: return color;
    case AttributeKind::Material: return material;
    case AttributeKind::Position: break;
    }
    throw std::invalid_argument("position is not a categorical attribute");
  }

  void set_attribute(ValueId v) {
    switch (value_kind(v)) {
    case AttributeKind::Shape: shape = v; return;
    case AttributeKind::Size: size = v; return;
    case AttributeKind::Color: color = v; return;
    case AttributeKind::Material: material = v; return;
    case AttributeKind::Position: position = position + displacement(v); return;
    }
  }

  bool visible() const { return is_visible(position); }

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

/// Strict overlap of circular footprints. On the 10-unit lattice this is the
/// same as sharing a cell.
inline bool overlaps(const ObjectState& a, const ObjectState& b) {
  const long dx = a.position.x - b.position.x;
  const long dy = a.position.y - b.position.y;
  const long r = footprint_radius(a.size) + footprint_radius(b.size);
  return dx * dx + dy * dy < r * r;
}

struct Scene {
  std::array<ObjectState, kObjectCount> objects{};

  const ObjectState& operator[](int i) const { return objects.at(static_cast<std::size_t>(i)); }
  ObjectState& operator[](int i) { return objects.at(static_cast<std::size_t>(i)); }

  int visible_count() const {
    return static_cast<int>(
        std::count_if(objects.begin(), objects.end(), [](const auto& o) { return o.visible(); }));
  }

  friend bool operator==(const Scene&, const Scene&) = default;
};

inline bool has_canonical_indices(const Scene& s) {
  for (int i = 0; i < kObjectCount; ++i) {
    if (s[i].index != i) return false;
  }
  return true;
}

/// True when `object` overlaps any other object of the scene.
inline bool collides(const Scene& s, int object) {
  for (int j = 0; j < kObjectCount; ++j) {
    if (j != object && overlaps(s[object], s[j])) return true;
  }
  return false;
}

inline bool is_valid(const Scene& s) {
  if (!has_canonical_indices(s)) return false;
  for (int i = 0; i < kObjectCount; ++i) {
    const auto& o = s[i];
    if (!in_plane(o.position) || !on_lattice(o.position)) return false;
    if (value_kind(o.shape) != AttributeKind::Shape || value_kind(o.size) != AttributeKind::Size ||
        value_kind(o.color) != AttributeKind::Color ||
        value_kind(o.material) != AttributeKind::Material) {
      return false;
    }
    for (int j = i + 1; j < kObjectCount; ++j) {
      if (overlaps(o, s[j])) return false;
    }
  }
  return true;
}

struct AtomicTransformation {
  int object = 0;
  ValueId value{};

  AttributeKind kind() const { return value_kind(value); }
  friend bool operator==(const AtomicTransformation&, const AtomicTransformation&) = default;
};

using Transformation = std::vector<AtomicTransformation>;

/// "(3, color, red)"
inline std::string format_atomic(const AtomicTransformation& t) {
  std::string out = "(";
  out += std::to_string(t.object);
  out += ", ";
  out += attribute_name(t.kind());
  out += ", ";
  out += value_name(t.value);
  out += ')';
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline int parse_object_index(std::string_view text, std::size_t position = 0) {
  int value = 0;
  if (text.empty() || text.size() > 2) {
    throw ParseError("invalid object index '" + std::string(text) + "'", std::string(text), position);
  }
  for (char c : text) {
    if (c < '0' || c > '9') {
      throw ParseError("invalid object index '" + std::string(text) + "'", std::string(text),
                       position);
    }
    value = value * 10 + (c - '0');
  }
  if (value >= kObjectCount) {
    throw ParseError("object index " + std::string(text) + " out of range", std::string(text),
                     position);
  }
  return value;
}

/// Parses "(<object>, <attribute>, <value>)". Moves contain a comma of their
/// own ("ne,2"), so the value is everything after the second separator.
inline AtomicTransformation parse_atomic(std::string_view text) {
  const auto body = detail::trim(text);
  if (body.size() < 2 || body.front() != '(' || body.back() != ')') {
    throw ParseError("atomic transformation must be parenthesised", std::string(text), 0);
  }
  const auto inner = body.substr(1, body.size() - 2);
  const auto c1 = inner.find(',');
  const auto c2 = c1 == std::string_view::npos ? c1 : inner.find(',', c1 + 1);
  if (c2 == std::string_view::npos) {
    throw ParseError("expected '(object, attribute, value)'", std::string(text), 0);
  }
  const auto obj_tok = detail::trim(inner.substr(0, c1));
  const auto attr_tok = detail::trim(inner.substr(c1 + 1, c2 - c1 - 1));
  auto value_tok = std::string(detail::trim(inner.substr(c2 + 1)));
  value_tok.erase(std::remove(value_tok.begin(), value_tok.end(), ' '), value_tok.end());

  const int obj = parse_object_index(obj_tok, 1);
  const auto attr = parse_attribute(attr_tok);
  if (!attr) {
    throw ParseError("unknown attribute '" + std::string(attr_tok) + "'", std::string(attr_tok),
                     c1 + 2);
  }
  const auto value = parse_value(value_tok);
  if (!value) {
    throw ParseError("unknown value '" + value_tok + "'", value_tok, c2 + 2);
  }
  if (value_kind(*value) != *attr) {
    throw ParseError("value '" + value_tok + "' does not belong to attribute '" +
                         std::string(attr_tok) + "'",
                     value_tok, c2 + 2);
  }
  return {obj, *value};
}

}  // namespace tvr
