#pragma once

// Schematic top-down SVG views of a scene. Only visible-area objects are
// drawn; the hidden ring is greyed out beyond the frame line.

#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "tvr/generator.hpp"
#include "tvr/scene.hpp"

namespace tvr {

namespace detail {

inline constexpr int kCanvas = 480;
inline constexpr double kPixelsPerUnit = 5.0;

inline std::string_view color_hex(ValueId color) {
  constexpr std::array<std::string_view, 8> hex = {"#575757", "#ad2323", "#2a4bd7", "#1d6914",
                                                   "#814a19", "#8126c0", "#29d0d0", "#ffee33"};
  return hex[static_cast<std::size_t>(color.get())];
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
  return buf;
}

struct Point {
  double x;
  double y;
};

/// Scene coordinates to canvas pixels after rotating by the view azimuth.
inline Point project(double x, double y, double azimuth_deg) {
  const double a = azimuth_deg * M_PI / 180.0;
  const double rx = x * std::cos(a) - y * std::sin(a);
  const double ry = x * std::sin(a) + y * std::cos(a);
  return {kCanvas / 2.0 + rx * kPixelsPerUnit, kCanvas / 2.0 - ry * kPixelsPerUnit};
}

}  // namespace detail

inline std::string render_svg(const Scene& scene, ViewTag view) {
  using detail::fmt2;
  const double az = azimuth_degrees(view);
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
         "viewBox=\"0 0 480 480\" data-view=\"";
  svg += view_name(view);
  svg += "\">\n";

  std::set<int> hatched;
  for (const auto& o : scene.objects) {
    if (o.visible() && value_name(o.material) == "metal") hatched.insert(o.color.get());
  }
  if (!hatched.empty()) {
    svg += "<defs>\n";
    for (int c : hatched) {
      const auto hex = detail::color_hex(ValueId{c});
      svg += "<pattern id=\"hatch-" + std::string(value_name(ValueId{c})) +
             "\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
             "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
             "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"" +
             std::string(hex) + "\" stroke-width=\"4\"/></pattern>\n";
    }
    svg += "</defs>\n";
  }

  svg += "<rect class=\"hidden-area\" x=\"0\" y=\"0\" width=\"480\" height=\"480\" fill=\"#c8c8c8\"/>\n";
  // frame sits half a cell outside the outermost visible lattice points
  const double f = kVisibleBound + kStepUnit / 2.0;
  svg += "<polygon class=\"frame\" points=\"";
  const std::array<detail::Point, 4> corners = {detail::project(-f, -f, az), detail::project(f, -f, az),
                                                detail::project(f, f, az), detail::project(-f, f, az)};
  for (std::size_t i = 0; i < corners.size(); ++i) {
    if (i) svg += ' ';
    svg += fmt2(corners[i].x) + ',' + fmt2(corners[i].y);
  }
  svg += "\" fill=\"#f4f4f0\" stroke=\"#333333\" stroke-width=\"2\"/>\n";

  for (const auto& o : scene.objects) {
    if (!o.visible()) continue;
    const auto c = detail::project(o.position.x, o.position.y, az);
    const double r = footprint_radius(o.size) * detail::kPixelsPerUnit;
    const auto color = std::string(value_name(o.color));
    const auto material = value_name(o.material);
    std::string style;
    if (material == "metal") {
      style = "fill=\"url(#hatch-" + color + ")\" stroke=\"" + std::string(detail::color_hex(o.color)) +
              "\" stroke-width=\"2\"";
    } else if (material == "glass") {
      style = "fill=\"" + std::string(detail::color_hex(o.color)) + "\" fill-opacity=\"0.5\"";
    } else {
      style = "fill=\"" + std::string(detail::color_hex(o.color)) + "\"";
    }
    const auto shape = value_name(o.shape);
    if (shape == "cube") {
      svg += "<rect class=\"obj\" x=\"" + fmt2(c.x - r) + "\" y=\"" + fmt2(c.y - r) + "\" width=\"" +
             fmt2(2 * r) + "\" height=\"" + fmt2(2 * r) + "\" transform=\"rotate(" + fmt2(-az) + ' ' +
             fmt2(c.x) + ' ' + fmt2(c.y) + ")\" " + style + "/>\n";
    } else if (shape == "sphere") {
      svg += "<circle class=\"obj\" cx=\"" + fmt2(c.x) + "\" cy=\"" + fmt2(c.y) + "\" r=\"" + fmt2(r) +
             "\" " + style + "/>\n";
    } else {
      svg += "<polygon class=\"obj\" points=\"" + fmt2(c.x) + ',' + fmt2(c.y - r) + ' ' +
             fmt2(c.x - r * 0.866) + ',' + fmt2(c.y + r * 0.5) + ' ' + fmt2(c.x + r * 0.866) + ',' +
             fmt2(c.y + r * 0.5) + "\" " + style + "/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace tvr
