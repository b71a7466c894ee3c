#pragma once

// Applying atomic transformations, sequence simulation and the state
// distance behind the simulation-based evaluation protocol.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tvr/scene.hpp"

namespace tvr {

using Rational = boost::multiprecision::cpp_rational;

enum class SimulationMode { Strict, Loose };

enum class ViolationKind { Overlap, OutOfPlane };

inline constexpr std::string_view violation_name(ViolationKind k) {
  return k == ViolationKind::Overlap ? "overlap" : "out-of-plane";
}

struct Violation {
  std::size_t step = 0;
  ViolationKind kind = ViolationKind::Overlap;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct StepResult {
  Scene scene;
  std::optional<ViolationKind> violation;
};

/// Applies one atomic transformation.
///
/// Strict: a result that leaves the plane or overlaps another object is
/// reported and the input scene is returned unchanged. Loose: coordinates are
/// clamped to the plane per axis and overlap is ignored.
inline StepResult apply_atomic(const Scene& scene, const AtomicTransformation& t,
                               SimulationMode mode) {
  if (t.object < 0 || t.object >= kObjectCount) {
    throw std::out_of_range("object index " + std::to_string(t.object) + " out of range");
  }
  detail::check_value(t.value);

  StepResult out{scene, std::nullopt};
  auto& obj = out.scene[t.object];
  obj.set_attribute(t.value);

  if (mode == SimulationMode::Loose) {
    obj.position.x = std::clamp(obj.position.x, -kPlaneBound, kPlaneBound);
    obj.position.y = std::clamp(obj.position.y, -kPlaneBound, kPlaneBound);
    return out;
  }
  if (!in_plane(obj.position)) {
    return {scene, ViolationKind::OutOfPlane};
  }
  if (collides(out.scene, t.object)) {
    return {scene, ViolationKind::Overlap};
  }
  return out;
}

struct SimulationResult {
  Scene final;
  std::vector<Violation> violations;
  std::size_t applied_count = 0;
};

/// Applies `steps` in order. Violating steps in Strict mode are recorded and
/// skipped; simulation continues with the next step.
inline SimulationResult simulate(const Scene& scene, std::span<const AtomicTransformation> steps,
                                 SimulationMode mode) {
  SimulationResult r{scene, {}, 0};
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto step = apply_atomic(r.final, steps[i], mode);
    if (step.violation) {
      r.violations.push_back({i, *step.violation});
      continue;
    }
    r.final = step.scene;
    ++r.applied_count;
  }
  return r;
}

namespace detail {

inline void check_comparable(const Scene& a, const Scene& b) {
  if (!has_canonical_indices(a) || !has_canonical_indices(b)) {
    throw std::invalid_argument("scenes must hold objects 0..9 in index order");
  }
}

inline int slot_differences(const ObjectState& a, const ObjectState& b) {
  return (a.shape != b.shape) + (a.size != b.size) + (a.color != b.color) +
         (a.material != b.material) + (a.position != b.position);
}

}  // namespace detail

/// Visible-only slot distance. Objects hidden in both scenes contribute 0, an
/// object visible in exactly one contributes 1, otherwise every differing slot
/// counts once.
inline int scene_distance(const Scene& a, const Scene& b) {
  detail::check_comparable(a, b);
  int d = 0;
  for (int i = 0; i < kObjectCount; ++i) {
    const bool va = a[i].visible();
    const bool vb = b[i].visible();
    if (!va && !vb) continue;
    if (va != vb) {
      d += 1;
      continue;
    }
    d += detail::slot_differences(a[i], b[i]);
  }
  return d;
}

/// Number of differing (object, slot) pairs over all objects, visible or not.
/// Every atomic transformation changes at most one pair.
inline int full_difference(const Scene& a, const Scene& b) {
  detail::check_comparable(a, b);
  int d = 0;
  for (int i = 0; i < kObjectCount; ++i) d += detail::slot_differences(a[i], b[i]);
  return d;
}

struct Verdict {
  bool correct = false;
  bool loose_correct = false;
  int distance = 0;
  Rational normalized_distance{0};
  std::vector<Violation> violations;
};

inline Verdict judge(const Scene& initial, const Scene& final, int ref_len,
                     std::span<const AtomicTransformation> pred) {
  if (ref_len < 1) throw std::invalid_argument("reference length must be positive");
  const auto strict = simulate(initial, pred, SimulationMode::Strict);
  const auto loose = simulate(initial, pred, SimulationMode::Loose);
  Verdict v;
  v.distance = scene_distance(strict.final, final);
  v.correct = strict.violations.empty() && v.distance == 0;
  v.loose_correct = scene_distance(loose.final, final) == 0;
  v.normalized_distance = Rational(v.distance, ref_len);
  v.violations = strict.violations;
  return v;
}

}  // namespace tvr
