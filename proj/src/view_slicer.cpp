#include "s2m/view_slicer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "s2m/error.hpp"

namespace s2m {

namespace {

constexpr double kUnitTolerance = 1e-9;

Vec3 orthogonal_component(const Vec3& v, const Vec3& unit_axis) { return v - unit_axis * dot(v, unit_axis); }

}  // namespace

std::string_view to_string(ViewName v) {
  switch (v) {
    case ViewName::A4C: return "A4C";
    case ViewName::A2C: return "A2C";
    case ViewName::A3C: return "A3C";
    case ViewName::Basal: return "Basal";
    case ViewName::MidCavity: return "MidCavity";
    case ViewName::Apical: return "Apical";
  }
  return "?";
}

ViewName parse_view_name(std::string_view s) {
  for (ViewName v : kAllViews) {
    if (to_string(v) == s) return v;
  }
  throw InvalidArgument("unknown view name '" + std::string(s) + "'");
}

bool is_apical_long_axis(ViewName v) { return v == ViewName::A4C || v == ViewName::A2C || v == ViewName::A3C; }

void ViewDefinition::validate() const {
  const std::string n(to_string(name));
  if (!is_finite(origin) || !is_finite(axis) || !is_finite(up)) throw InvalidArgument(n + ": non-finite vectors");
  if (std::abs(norm(axis) - 1.0) > kUnitTolerance) throw InvalidArgument(n + ": axis is not a unit vector");
  if (std::abs(norm(up) - 1.0) > kUnitTolerance) throw InvalidArgument(n + ": up is not a unit vector");
  if (std::abs(dot(axis, up)) > kUnitTolerance) throw InvalidArgument(n + ": axis and up are not orthogonal");
  if (!(half_angle_deg > 0.0 && half_angle_deg < 90.0)) throw InvalidArgument(n + ": half_angle must be in (0, 90)");
  if (!(depth_mm > 0.0) || !std::isfinite(depth_mm)) throw InvalidArgument(n + ": depth must be > 0");
  if (!(slab_half_thickness_mm > 0.0) || !std::isfinite(slab_half_thickness_mm)) {
    throw InvalidArgument(n + ": slab half thickness must be > 0");
  }
}

std::vector<ViewDefinition> builtin_views() {
  using namespace sector_origins;
  const Vec3 long_axis = normalized(kBasalOrigin - kApicalShortAxisOrigin);  // apex -> base
  const Vec3 beam = normalized(kBasalOrigin - kApicalLongAxisOrigin);
  const Vec3 a4c_up = normalized(orthogonal_component(long_axis, beam));

  std::vector<ViewDefinition> views;
  const std::array<std::pair<ViewName, double>, 3> apical = {
      {{ViewName::A4C, 0.0}, {ViewName::A2C, 60.0}, {ViewName::A3C, 120.0}}};
  for (const auto& [name, turn_deg] : apical) {
    ViewDefinition v;
    v.name = name;
    v.origin = kApicalLongAxisOrigin;
    v.axis = beam;
    v.up = normalized(rotation_about_axis(beam, deg_to_rad(turn_deg)).apply(a4c_up));
    views.push_back(v);
  }

  // Short-axis sectors lie in planes normal to the long axis; the beam is the
  // part of the apical beam direction orthogonal to it.
  const Vec3 sax_axis = normalized(orthogonal_component(beam, long_axis));
  const Vec3 sax_up = normalized(cross(long_axis, sax_axis));
  const std::array<std::pair<ViewName, Vec3>, 3> sax = {{{ViewName::Basal, kBasalOrigin},
                                                         {ViewName::MidCavity, kMidCavityOrigin},
                                                         {ViewName::Apical, kApicalShortAxisOrigin}}};
  for (const auto& [name, origin] : sax) {
    ViewDefinition v;
    v.name = name;
    v.origin = origin;
    v.axis = sax_axis;
    v.up = sax_up;
    views.push_back(v);
  }
  return views;
}

std::vector<ViewDefinition> aim_apical_views(std::span<const ViewDefinition> views, const LabeledCloud& cloud,
                                             std::span<const int> atria_labels) {
  if (!cloud.has_labels()) throw InvalidArgument("aim_apical_views needs a labeled cloud");
  std::vector<Vec3> atria;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::find(atria_labels.begin(), atria_labels.end(), cloud.label(i)) != atria_labels.end()) {
      atria.push_back(cloud.point(i));
    }
  }
  if (atria.empty()) throw InvalidArgument("no point carries an atria label");
  const Vec3 target = centroid(atria);

  std::vector<ViewDefinition> out(views.begin(), views.end());
  for (ViewDefinition& v : out) {
    if (!is_apical_long_axis(v.name)) continue;
    v.axis = normalized(target - v.origin);
    Vec3 up = orthogonal_component(v.up, v.axis);
    if (norm(up) < 1e-6) up = orthogonal_component(Vec3{0, 0, 1}, v.axis);
    if (norm(up) < 1e-6) up = orthogonal_component(Vec3{1, 0, 0}, v.axis);
    v.up = normalized(up);
  }
  return out;
}

ViewDefinition transform_view(const ViewDefinition& v, const RotationMatrix& r, const Vec3& delta) {
  ViewDefinition out = v;
  out.origin = r.apply(v.origin) + delta;
  out.axis = r.apply(v.axis);
  out.up = r.apply(v.up);
  return out;
}

PlanarSlice slice_cloud(const LabeledCloud& cloud, const ViewDefinition& view) {
  view.validate();
  if (cloud.empty()) throw InvalidArgument("slice_cloud: empty cloud");
  const Vec3 n = view.normal();
  const double max_angle = deg_to_rad(view.half_angle_deg);
  PlanarSlice out;
  const auto pts = cloud.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 d = pts[i] - view.origin;
    if (std::abs(dot(d, n)) > view.slab_half_thickness_mm) continue;
    const double u = dot(d, view.axis);
    const double v = dot(d, view.up);
    const double r = std::hypot(u, v);
    if (r > view.depth_mm) continue;
    if (r > 0.0 && std::atan2(std::abs(v), u) > max_angle) continue;
    out.points.push_back({u, v});
    if (cloud.has_labels()) out.labels.push_back(cloud.label(i));
  }
  return out;
}

void RasterSpec::validate() const {
  if (width == 0 || height == 0) throw InvalidArgument("raster dimensions must be > 0");
  if (!(pixel_size_mm > 0.0) || !std::isfinite(pixel_size_mm)) throw InvalidArgument("pixel size must be > 0");
}

std::size_t BinaryMask::count_on() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{255}));
}

PixelIndex pixel_of(const Vec2& p, const RasterSpec& spec) {
  return {static_cast<long>(std::floor(p.u / spec.pixel_size_mm)),
          static_cast<long>(std::floor(p.v / spec.pixel_size_mm)) + static_cast<long>(spec.width / 2)};
}

Rasterized rasterize(const PlanarSlice& slice, const RasterSpec& spec) {
  spec.validate();
  Rasterized out;
  out.mask.width = spec.width;
  out.mask.height = spec.height;
  out.mask.pixel_size_mm = spec.pixel_size_mm;
  out.mask.pixels.assign(spec.width * spec.height, 0);
  for (const Vec2& p : slice.points) {
    const PixelIndex px = pixel_of(p, spec);
    if (px.row < 0 || px.col < 0 || px.row >= static_cast<long>(spec.height) ||
        px.col >= static_cast<long>(spec.width)) {
      ++out.dropped;
      continue;
    }
    out.mask.pixels[static_cast<std::size_t>(px.row) * spec.width + static_cast<std::size_t>(px.col)] = 255;
  }
  return out;
}

double overlay_coverage(const BinaryMask& mask, const BinaryMask& image_mask) {
  if (mask.width != image_mask.width || mask.height != image_mask.height) {
    throw InvalidArgument("overlay_coverage: mask dimensions differ");
  }
  std::size_t image_on = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < image_mask.pixels.size(); ++i) {
    if (image_mask.pixels[i] == 0) continue;
    ++image_on;
    if (mask.pixels[i] != 0) ++both;
  }
  if (image_on == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(image_on);
}

}  // namespace s2m
