#include "s2m/cardio_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "s2m/delaunay.hpp"
#include "s2m/error.hpp"

namespace s2m {

std::size_t VoxelGrid::count() const {
  return static_cast<std::size_t>(std::count_if(occupancy.begin(), occupancy.end(), [](auto v) { return v != 0; }));
}

std::size_t voxel_axis_index(double x, double lo, double hi, std::size_t resolution) {
  if (!(x >= lo && x <= hi)) throw OutOfDomain("point outside the voxelization bbox");
  const auto i = static_cast<std::size_t>(std::floor((x - lo) / (hi - lo) * static_cast<double>(resolution)));
  return std::min(i, resolution - 1);
}

VoxelGrid voxelize(const LabeledCloud& cloud, std::size_t resolution, const Aabb& bbox) {
  if (resolution < 1) throw InvalidArgument("voxel resolution must be >= 1");
  bbox.validate();
  VoxelGrid g{resolution, bbox, std::vector<std::uint8_t>(resolution * resolution * resolution, 0)};
  for (const Vec3& p : cloud.points()) {
    const std::size_t i = voxel_axis_index(p.x, bbox.min.x, bbox.max.x, resolution);
    const std::size_t j = voxel_axis_index(p.y, bbox.min.y, bbox.max.y, resolution);
    const std::size_t k = voxel_axis_index(p.z, bbox.min.z, bbox.max.z, resolution);
    g.occupancy[g.index(i, j, k)] = 1;
  }
  return g;
}

double iou(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.resolution != b.resolution || !(a.bbox == b.bbox) || a.occupancy.size() != b.occupancy.size()) {
    throw InvalidArgument("iou: grids differ in resolution or bbox");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t n = 0; n < a.occupancy.size(); ++n) {
    const bool pa = a.occupancy[n] != 0, pb = b.occupancy[n] != 0;
    tp += pa && pb;
    fp += pa && !pb;
    fn += !pa && pb;
  }
  const std::size_t denom = tp + fp + fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(tp) / static_cast<double>(denom);
}

Aabb comparison_bbox(const LabeledCloud& a, const LabeledCloud& b) {
  if (a.empty() && b.empty()) throw InvalidArgument("comparison_bbox: both clouds are empty");
  return joint_bounds(a, b).expanded(0.01);
}

VoxelComparison compare_voxels(const LabeledCloud& a, const LabeledCloud& b, std::size_t resolution) {
  const Aabb box = comparison_bbox(a, b);
  VoxelComparison c{voxelize(a, resolution, box), voxelize(b, resolution, box), 0.0};
  c.iou = iou(c.a, c.b);
  return c;
}

double mse(std::span<const Vec3> pred, std::span<const Vec3> target) {
  if (pred.size() != target.size()) throw InvalidArgument("mse: length mismatch");
  if (pred.empty()) throw InvalidArgument("mse: no samples");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = pred[i][c] - target[i][c];
      s += d * d;
    }
  }
  return s / static_cast<double>(3 * pred.size());
}

double mse(const DeformationSamples& pred, const DeformationSamples& target) {
  return mse(pred.vectors, target.vectors);
}

LabeledCloud subsample(const LabeledCloud& cloud, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw InvalidArgument("subsample rate must be in (0, 1]");
  const std::size_t n = cloud.size();
  const auto keep = std::min(n, static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n))));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (keep < n) {
    // Partial Fisher–Yates: the first `keep` slots become the sample.
    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < keep; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(gen)]);
    }
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
  }
  return cloud.select(idx);
}

LabeledCloud extract_region(const LabeledCloud& cloud, std::span<const int> labels) {
  if (!cloud.has_labels()) throw InvalidArgument("extract_region needs a labeled cloud");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::find(labels.begin(), labels.end(), cloud.label(i)) != labels.end()) idx.push_back(i);
  }
  return cloud.select(idx);
}

double delaunay_volume(const LabeledCloud& cloud) {
  const auto pts = cloud.points();
  return tetrahedralized_volume(pts, delaunay_tetrahedralize(pts));
}

double stroke_volume(double edv, double esv) {
  if (!(edv > 0.0) || !std::isfinite(edv)) throw InvalidArgument("EDV must be > 0");
  if (!(esv >= 0.0) || esv > edv) throw InvalidArgument("ESV must lie in [0, EDV]");
  return edv - esv;
}

double ef(double edv, double esv) { return stroke_volume(edv, esv) / edv * 100.0; }

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw UndefinedCorrelation("pearson needs at least two pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedCorrelation("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

VolumeReport region_volume(const LabeledCloud& cloud, std::span<const int> labels, double subsample_rate,
                           std::uint64_t seed) {
  const LabeledCloud region = extract_region(subsample(cloud, subsample_rate, seed), labels);
  VolumeReport r;
  r.region_labels.assign(labels.begin(), labels.end());
  r.point_count_used = region.size();
  r.volume_mm3 = delaunay_volume(region);
  r.subsample_rate = subsample_rate;
  r.seed = seed;
  return r;
}

}  // namespace s2m
