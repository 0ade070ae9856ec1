#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s2m/geometry.hpp"

namespace s2m {

enum class ViewName { A4C, A2C, A3C, Basal, MidCavity, Apical };

inline constexpr std::array<ViewName, 6> kAllViews = {ViewName::A4C,   ViewName::A2C,       ViewName::A3C,
                                                      ViewName::Basal, ViewName::MidCavity, ViewName::Apical};

std::string_view to_string(ViewName v);
/// Accepts the canonical names ("A4C", "MidCavity", ...); throws InvalidArgument.
ViewName parse_view_name(std::string_view s);
bool is_apical_long_axis(ViewName v);

/// A scan sector. The imaging plane is spanned by `axis` (sector centre
/// direction) and `up`; its normal is axis × up.
struct ViewDefinition {
  ViewName name = ViewName::A4C;
  Vec3 origin{};
  Vec3 axis{1, 0, 0};
  Vec3 up{0, 1, 0};
  double half_angle_deg = 45.0;
  double depth_mm = 150.0;
  double slab_half_thickness_mm = 1.0;

  void validate() const;
  Vec3 normal() const { return normalized(cross(axis, up)); }
};

/// Sector origins of the six clinical views, in mm.
namespace sector_origins {
inline constexpr Vec3 kApicalLongAxisOrigin{62.63, -60.94, -28.13};
inline constexpr Vec3 kBasalOrigin{16.27, -8.42, -9.61};
inline constexpr Vec3 kMidCavityOrigin{39.04, -20.21, -23.07};
inline constexpr Vec3 kApicalShortAxisOrigin{45.55, -23.58, -26.91};
}  // namespace sector_origins

/// The six standard views with default sector geometry.
///
/// Apical long-axis views (A4C, A2C, A3C) share one origin and aim at the
/// basal short-axis centre; their planes contain the ventricular long axis
/// rotated by 0°, 60° and 120° about the beam. Short-axis views are planes
/// normal to the long axis through the collinear basal/mid/apical origins.
std::vector<ViewDefinition> builtin_views();

/// Re-aim the apical long-axis views at the centroid of the points carrying
/// `atria_labels`, keeping each view's in-plane `up` as close as possible to
/// before. Short-axis views are returned unchanged. Throws InvalidArgument if
/// no point carries one of the labels.
std::vector<ViewDefinition> aim_apical_views(std::span<const ViewDefinition> views, const LabeledCloud& cloud,
                                             std::span<const int> atria_labels);

/// Same rigid motion applied to origin, axis and up.
ViewDefinition transform_view(const ViewDefinition& v, const RotationMatrix& r, const Vec3& delta);

struct Vec2 {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct PlanarSlice {
  std::vector<Vec2> points;
  std::vector<int> labels;  ///< empty when the source cloud is unlabeled
};

/// Points within the slab |(p - o)·n| <= slab_half_thickness that fall in the
/// sector (angle to axis <= half_angle, in-plane radius <= depth), reported
/// as (u, v) = ((p - o)·axis, (p - o)·up). Input order is kept.
PlanarSlice slice_cloud(const LabeledCloud& cloud, const ViewDefinition& view);

struct RasterSpec {
  std::size_t width = 256;
  std::size_t height = 256;
  double pixel_size_mm = 0.7;

  void validate() const;
};

/// 0/255 occupancy image, row-major, row 0 at the top.
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  double pixel_size_mm = 1.0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  std::size_t count_on() const;
};

struct Rasterized {
  BinaryMask mask;
  std::size_t dropped = 0;  ///< points outside the image extent
};

/// Pixel of a plane coordinate: row = floor(u / ps), col = floor(v / ps) + width/2.
/// The sector origin lands on the top-centre pixel and +u points down.
struct PixelIndex {
  long row;
  long col;
};
PixelIndex pixel_of(const Vec2& p, const RasterSpec& spec);

Rasterized rasterize(const PlanarSlice& slice, const RasterSpec& spec);

/// |mask ∩ image| / |image| over on-pixels; 1 when the image mask is empty.
double overlay_coverage(const BinaryMask& mask, const BinaryMask& image_mask);

}  // namespace s2m
