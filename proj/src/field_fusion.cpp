#include "s2m/field_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernel_elements.hpp"
#include "s2m/error.hpp"

namespace s2m {

VectorGrid::VectorGrid(GridShape shape, Aabb bbox)
    : VectorGrid(shape, bbox, std::vector<Vec3>(shape.nodes())) {}

VectorGrid::VectorGrid(GridShape shape, Aabb bbox, std::vector<Vec3> values)
    : shape_(shape), bbox_(bbox), values_(std::move(values)) {
  validate();
}

void VectorGrid::validate() const {
  if (shape_.d < 1 || shape_.h < 1 || shape_.w < 1) throw InvalidArgument("grid dims must be >= 1");
  bbox_.validate();
  if (values_.size() != shape_.nodes()) throw InvalidArgument("grid value count does not match dims");
  for (const Vec3& v : values_) {
    if (!is_finite(v)) throw InvalidArgument("grid has non-finite values");
  }
}

namespace {

double spacing(double lo, double hi, std::size_t n) { return n > 1 ? (hi - lo) / static_cast<double>(n - 1) : 0.0; }

struct CellCoord {
  std::size_t i;
  double t;
};

// Cell index and fractional offset along one axis; the upper boundary
// belongs to the last cell.
CellCoord locate(double x, double lo, double hi, std::size_t n) {
  if (n == 1) return {0, 0.0};
  const double s = (x - lo) / (hi - lo) * static_cast<double>(n - 1);
  const auto i = std::min(static_cast<std::size_t>(std::floor(s)), n - 2);
  return {i, s - static_cast<double>(i)};
}

double offset_in_cell(double x, double lo, double hi, std::size_t n, std::size_t cell) {
  if (n == 1) return 0.0;
  return (x - lo) / (hi - lo) * static_cast<double>(n - 1) - static_cast<double>(cell);
}

void check_same_layout(std::span<const VectorGrid> fields) {
  if (fields.empty()) throw InvalidArgument("fuse: no fields");
  for (const VectorGrid& f : fields) {
    if (!(f.shape() == fields[0].shape()) || !(f.bbox() == fields[0].bbox())) {
      throw InvalidArgument("fuse: fields differ in dims or bbox");
    }
  }
}

}  // namespace

Vec3 VectorGrid::node_position(std::size_t d, std::size_t h, std::size_t w) const {
  return {bbox_.min.x + static_cast<double>(w) * spacing(bbox_.min.x, bbox_.max.x, shape_.w),
          bbox_.min.y + static_cast<double>(h) * spacing(bbox_.min.y, bbox_.max.y, shape_.h),
          bbox_.min.z + static_cast<double>(d) * spacing(bbox_.min.z, bbox_.max.z, shape_.d)};
}

VectorGrid trilinear_upsample(const VectorGrid& grid, std::size_t factor) {
  if (factor < 1) throw InvalidArgument("upsampling factor must be >= 1");
  const GridShape in = grid.shape();
  const GridShape out{kernels::upsampled_extent(in.d, factor), kernels::upsampled_extent(in.h, factor),
                      kernels::upsampled_extent(in.w, factor)};
  std::vector<Vec3> values(out.nodes());
  kernels::omp::trilinear_upsample(grid.values(), in, factor, values);
  return VectorGrid(out, grid.bbox(), std::move(values));
}

std::vector<double> normalize_weights(std::span<const double> raw) {
  if (raw.empty()) throw InvalidArgument("normalize_weights: need at least one weight");
  for (double r : raw) {
    if (!std::isfinite(r)) throw InvalidArgument("normalize_weights: non-finite weight");
  }
  const double top = *std::max_element(raw.begin(), raw.end());
  std::vector<double> w(raw.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    w[k] = std::exp(raw[k] - top);
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

VectorGrid fuse(std::span<const VectorGrid> fields, std::span<const double> weights) {
  check_same_layout(fields);
  if (weights.size() != fields.size()) throw InvalidArgument("fuse: weight count does not match field count");
  VectorGrid out(fields[0].shape(), fields[0].bbox());
  auto dst = out.values();
  for (std::size_t n = 0; n < dst.size(); ++n) {
    Vec3 acc{};
    for (std::size_t k = 0; k < fields.size(); ++k) acc += weights[k] * fields[k].values()[n];
    dst[n] = acc;
  }
  return out;
}

VectorGrid fuse_per_node(std::span<const VectorGrid> fields, std::span<const std::vector<double>> raw_weights) {
  check_same_layout(fields);
  if (raw_weights.size() != fields.size()) throw InvalidArgument("fuse_per_node: weight grid count mismatch");
  const std::size_t nodes = fields[0].shape().nodes();
  for (const auto& w : raw_weights) {
    if (w.size() != nodes) throw InvalidArgument("fuse_per_node: weight grid size mismatch");
  }
  VectorGrid out(fields[0].shape(), fields[0].bbox());
  auto dst = out.values();
  std::vector<double> logits(fields.size());
  for (std::size_t n = 0; n < nodes; ++n) {
    for (std::size_t k = 0; k < fields.size(); ++k) logits[k] = raw_weights[k][n];
    const std::vector<double> w = normalize_weights(logits);
    Vec3 acc{};
    for (std::size_t k = 0; k < fields.size(); ++k) acc += w[k] * fields[k].values()[n];
    dst[n] = acc;
  }
  return out;
}

Vec3 sample_cell(const VectorGrid& grid, std::size_t d, std::size_t h, std::size_t w, const Vec3& point) {
  const GridShape s = grid.shape();
  const Aabb& b = grid.bbox();
  const std::size_t d1 = std::min(d + 1, s.d - 1), h1 = std::min(h + 1, s.h - 1), w1 = std::min(w + 1, s.w - 1);
  const Vec3 c[8] = {grid.node(d, h, w),  grid.node(d, h, w1),  grid.node(d, h1, w),  grid.node(d, h1, w1),
                     grid.node(d1, h, w), grid.node(d1, h, w1), grid.node(d1, h1, w), grid.node(d1, h1, w1)};
  return kernels::detail::trilinear_corners(c, offset_in_cell(point.z, b.min.z, b.max.z, s.d, d),
                                            offset_in_cell(point.y, b.min.y, b.max.y, s.h, h),
                                            offset_in_cell(point.x, b.min.x, b.max.x, s.w, w));
}

Vec3 sample_grid(const VectorGrid& grid, const Vec3& point) {
  const Aabb& b = grid.bbox();
  if (!is_finite(point) || !b.contains(point)) throw OutOfDomain("sample point lies outside the grid bbox");
  const GridShape s = grid.shape();
  const CellCoord cd = locate(point.z, b.min.z, b.max.z, s.d);
  const CellCoord ch = locate(point.y, b.min.y, b.max.y, s.h);
  const CellCoord cw = locate(point.x, b.min.x, b.max.x, s.w);
  return sample_cell(grid, cd.i, ch.i, cw.i, point);
}

LabeledCloud apply_grid(const LabeledCloud& tmpl, const VectorGrid& grid) {
  std::vector<Vec3> moved(tmpl.points().begin(), tmpl.points().end());
  for (std::size_t i = 0; i < moved.size(); ++i) {
    if (!grid.bbox().contains(moved[i])) {
      throw OutOfDomain("template point " + std::to_string(i) + " lies outside the grid bbox");
    }
    moved[i] += sample_grid(grid, moved[i]);
  }
  return tmpl.with_points(std::move(moved));
}

VectorGrid rasterize_field(const RBFField& field, GridShape shape, const Aabb& bbox) {
  VectorGrid grid(shape, bbox);
  std::vector<Vec3> nodes(shape.nodes());
  for (std::size_t d = 0; d < shape.d; ++d)
    for (std::size_t h = 0; h < shape.h; ++h)
      for (std::size_t w = 0; w < shape.w; ++w) nodes[grid.index(d, h, w)] = grid.node_position(d, h, w);
  const std::vector<Vec3> v = eval_field(field, nodes);
  std::copy(v.begin(), v.end(), grid.values().begin());
  return grid;
}

}  // namespace s2m
