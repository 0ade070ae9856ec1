#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2m/deformation_ot.hpp"
#include "s2m/geometry.hpp"

namespace s2m {

inline constexpr std::size_t kDefaultEvalResolution = 128;

/// R³ occupancy over a bbox; index (i, j, k) ↔ (x, y, z), x fastest.
struct VoxelGrid {
  std::size_t resolution = 0;
  Aabb bbox;
  std::vector<std::uint8_t> occupancy;

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (k * resolution + j) * resolution + i;
  }
  bool occupied(std::size_t i, std::size_t j, std::size_t k) const { return occupancy[index(i, j, k)] != 0; }
  std::size_t count() const;
};

/// Cell index of coordinate x along one axis; the upper boundary belongs to
/// the last cell. Throws OutOfDomain outside [lo, hi].
std::size_t voxel_axis_index(double x, double lo, double hi, std::size_t resolution);

VoxelGrid voxelize(const LabeledCloud& cloud, std::size_t resolution, const Aabb& bbox);

/// TP / (TP + FP + FN); 1 when both grids are empty.
double iou(const VoxelGrid& a, const VoxelGrid& b);

/// Joint bbox of both clouds expanded by 1%.
Aabb comparison_bbox(const LabeledCloud& a, const LabeledCloud& b);

struct VoxelComparison {
  VoxelGrid a;
  VoxelGrid b;
  double iou = 0.0;
};

/// Voxelize both clouds on the identical comparison_bbox() and compare.
VoxelComparison compare_voxels(const LabeledCloud& a, const LabeledCloud& b,
                               std::size_t resolution = kDefaultEvalResolution);

/// Mean of the 3N squared component residuals of the displacement vectors.
double mse(const DeformationSamples& pred, const DeformationSamples& target);
/// Same convention on point positions (matched vertex order).
double mse(std::span<const Vec3> pred, std::span<const Vec3> target);

/// ceil(rate·N) points chosen uniformly without replacement with
/// mt19937_64(seed); the kept points stay in input order.
LabeledCloud subsample(const LabeledCloud& cloud, double rate, std::uint64_t seed);

/// Points whose label is in `labels`, order preserved.
LabeledCloud extract_region(const LabeledCloud& cloud, std::span<const int> labels);

/// Volume of the 3D Delaunay tetrahedralization (= convex-hull volume), mm³.
double delaunay_volume(const LabeledCloud& cloud);

double stroke_volume(double edv, double esv);
/// (EDV − ESV) / EDV · 100.
double ef(double edv, double esv);

/// Sample Pearson correlation. Throws UndefinedCorrelation for n < 2 or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct PatientRecord {
  std::string patient_id;
  std::optional<double> glps;  ///< percent; missing GLPS excludes the patient from the PCC
  std::optional<double> ef;    ///< fraction in [0, 1]
};

struct VolumeReport {
  std::vector<int> region_labels;
  std::size_t point_count_used = 0;
  double volume_mm3 = 0.0;
  double subsample_rate = 1.0;
  std::uint64_t seed = 0;
};

/// subsample → extract_region → delaunay_volume.
VolumeReport region_volume(const LabeledCloud& cloud, std::span<const int> labels, double subsample_rate,
                           std::uint64_t seed);

}  // namespace s2m
