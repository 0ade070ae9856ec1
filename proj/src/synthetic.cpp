#include "s2m/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "s2m/error.hpp"
#include "s2m/view_slicer.hpp"

namespace s2m {

void HeartShape::validate() const {
  for (double v : {lv_length_mm, lv_radius_mm, wall_mm, long_contraction, radial_contraction}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("heart shape parameters must be finite and > 0");
  }
}

double HeartShape::lv_volume_mm3() const {
  const double a = lv_length_mm * long_contraction;
  const double b = lv_radius_mm * radial_contraction;
  return 2.0 / 3.0 * std::numbers::pi * a * b * b;
}

HeartFrame heart_frame() {
  const Vec3 base = sector_origins::kBasalOrigin;
  const Vec3 axis = normalized(sector_origins::kApicalShortAxisOrigin - base);
  const Vec3 helper = std::abs(axis.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  const Vec3 e1 = normalized(cross(axis, helper));
  return {base, axis, e1, cross(axis, e1)};
}

namespace {

Vec3 unit_direction(std::mt19937_64& gen) {
  std::normal_distribution<double> n01(0.0, 1.0);
  while (true) {
    const Vec3 d{n01(gen), n01(gen), n01(gen)};
    const double len = norm(d);
    if (len > 1e-12) return (1.0 / len) * d;
  }
}

struct Part {
  int label;
  double share;
};

}  // namespace

LabeledCloud synthetic_heart(const HeartShape& shape, std::size_t n, std::uint64_t seed) {
  shape.validate();
  if (n < 5) throw InvalidArgument("synthetic_heart needs at least 5 points");
  const HeartFrame f = heart_frame();
  const double a = shape.lv_length_mm * shape.long_contraction;
  const double b = shape.lv_radius_mm * shape.radial_contraction;
  const double w = shape.wall_mm;

  // Half-ellipsoid shell: d.x along the long axis (folded to the apex side).
  auto bullet = [&](const Vec3& centre, double len, double rad, const Vec3& d) {
    return centre + (std::abs(d.x) * len) * f.long_axis + (d.y * rad) * f.e1 + (d.z * rad) * f.e2;
  };
  auto sphere = [&](const Vec3& centre, double r, const Vec3& d) { return centre + r * d; };

  const Vec3 rv_centre = f.base + (shape.lv_radius_mm + 0.5 * w) * f.e1;
  const Vec3 la_centre = f.base - 22.0 * f.long_axis;
  const Vec3 ra_centre = f.base - 20.0 * f.long_axis + 35.0 * f.e1;

  const Part parts[] = {{heart_labels::kLvEndocardium, 0.30},
                        {heart_labels::kLvEpicardium, 0.25},
                        {heart_labels::kRightVentricle, 0.20},
                        {heart_labels::kLeftAtrium, 0.13},
                        {heart_labels::kRightAtrium, 0.12}};

  std::mt19937_64 gen(seed);
  std::vector<Vec3> pts;
  std::vector<int> labels;
  pts.reserve(n);
  labels.reserve(n);
  std::size_t emitted = 0;
  for (std::size_t k = 0; k < std::size(parts); ++k) {
    const std::size_t count =
        k + 1 == std::size(parts)
            ? n - emitted
            : std::min(n - emitted, static_cast<std::size_t>(std::llround(parts[k].share * static_cast<double>(n))));
    for (std::size_t i = 0; i < count; ++i) {
      const Vec3 d = unit_direction(gen);
      Vec3 p;
      switch (parts[k].label) {
        case heart_labels::kLvEndocardium: p = bullet(f.base, a, b, d); break;
        case heart_labels::kLvEpicardium: p = bullet(f.base, a + w, b + w, d); break;
        case heart_labels::kRightVentricle: {
          // Crescent on the +e1 side of the LV.
          Vec3 dd = d;
          dd.y = std::abs(dd.y);
          p = bullet(rv_centre, 0.8 * shape.lv_length_mm, 0.8 * shape.lv_radius_mm, dd);
          break;
        }
        case heart_labels::kLeftAtrium: p = sphere(la_centre, 20.0, d); break;
        default: p = sphere(ra_centre, 18.0, d); break;
      }
      pts.push_back(p);
      labels.push_back(parts[k].label);
    }
    emitted += count;
  }
  return LabeledCloud(std::move(pts), std::move(labels));
}

HeartShape perturbed_shape(const HeartShape& base, double spread, std::uint64_t seed) {
  if (!(spread >= 0.0 && spread < 1.0)) throw InvalidArgument("shape spread must be in [0, 1)");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(1.0 - spread, 1.0 + spread);
  HeartShape s = base;
  s.lv_length_mm *= u(gen);
  s.lv_radius_mm *= u(gen);
  s.wall_mm *= u(gen);
  return s;
}

}  // namespace s2m
