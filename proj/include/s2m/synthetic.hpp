#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "s2m/geometry.hpp"

namespace s2m {

/// Tissue labels used by the synthetic heart.
namespace heart_labels {
inline constexpr int kLvEndocardium = 1;
inline constexpr int kLvEpicardium = 2;
inline constexpr int kRightVentricle = 3;
inline constexpr int kLeftAtrium = 4;
inline constexpr int kRightAtrium = 5;
inline constexpr std::array<int, 1> kLeftVentricle = {kLvEndocardium};
inline constexpr std::array<int, 2> kAtria = {kLeftAtrium, kRightAtrium};
}  // namespace heart_labels

/// Shape of a surface-sampled, ellipsoidal toy heart placed so that the
/// built-in short-axis origins lie on its LV long axis.
///
/// The LV cavity is a half-ellipsoid with its base disc centred on the basal
/// origin, extending `lv_length_mm` toward the apex with equatorial radius
/// `lv_radius_mm`. The contraction factors scale the cavity (1 = end-diastole).
struct HeartShape {
  double lv_length_mm = 55.0;
  double lv_radius_mm = 25.0;
  double wall_mm = 8.0;
  double long_contraction = 1.0;
  double radial_contraction = 1.0;

  void validate() const;
  /// Analytic LV cavity volume (2/3)π·a·b² after contraction, mm³.
  double lv_volume_mm3() const;
};

/// Surface sample of the toy heart, n points, deterministic per seed.
LabeledCloud synthetic_heart(const HeartShape& shape, std::size_t n, std::uint64_t seed);

/// Shape with each dimension scaled by an independent factor in [1 − spread, 1 + spread].
HeartShape perturbed_shape(const HeartShape& base, double spread, std::uint64_t seed);

/// Orthonormal heart frame: long axis (base → apex) and two transverse axes.
struct HeartFrame {
  Vec3 base;
  Vec3 long_axis;
  Vec3 e1;
  Vec3 e2;
};
HeartFrame heart_frame();

}  // namespace s2m
