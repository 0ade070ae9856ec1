#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "s2m/deformation_ot.hpp"
#include "s2m/geometry.hpp"
#include "s2m/kernels.hpp"

namespace s2m {

using GridShape = kernels::GridShape;

/// Node-based D×H×W grid of displacement vectors spanning `bbox`.
///
/// Axis convention: w runs along x, h along y, d along z. Node (d, h, w)
/// sits at bbox.min + (w·sx, h·sy, d·sz) with s = extent / (n − 1); an axis
/// with a single node is constant along that direction.
class VectorGrid {
 public:
  VectorGrid(GridShape shape, Aabb bbox);  // zero-filled
  VectorGrid(GridShape shape, Aabb bbox, std::vector<Vec3> values);

  GridShape shape() const noexcept { return shape_; }
  const Aabb& bbox() const noexcept { return bbox_; }
  std::span<const Vec3> values() const noexcept { return values_; }
  std::span<Vec3> values() noexcept { return values_; }

  std::size_t index(std::size_t d, std::size_t h, std::size_t w) const { return (d * shape_.h + h) * shape_.w + w; }
  const Vec3& node(std::size_t d, std::size_t h, std::size_t w) const { return values_[index(d, h, w)]; }
  Vec3& node(std::size_t d, std::size_t h, std::size_t w) { return values_[index(d, h, w)]; }
  Vec3 node_position(std::size_t d, std::size_t h, std::size_t w) const;

 private:
  void validate() const;

  GridShape shape_;
  Aabb bbox_;
  std::vector<Vec3> values_;
};

/// Refine by an integer factor; input nodes are reproduced exactly.
VectorGrid trilinear_upsample(const VectorGrid& grid, std::size_t factor);

/// Softmax with max subtraction.
std::vector<double> normalize_weights(std::span<const double> raw);

/// Σ_k w_k·field_k node-wise. All fields must share shape and bbox.
VectorGrid fuse(std::span<const VectorGrid> fields, std::span<const double> weights);

/// Per-node variant: raw_weights[k] holds one logit per node of field k;
/// weights are softmax-normalized across k at each node.
VectorGrid fuse_per_node(std::span<const VectorGrid> fields, std::span<const std::vector<double>> raw_weights);

/// Trilinear interpolation inside the containing cell. Throws OutOfDomain
/// outside the bbox.
Vec3 sample_grid(const VectorGrid& grid, const Vec3& point);

/// Interpolate with the expansion of one specific cell (d, h, w indexes the
/// cell's low corner). Used to check continuity across shared faces.
Vec3 sample_cell(const VectorGrid& grid, std::size_t d, std::size_t h, std::size_t w, const Vec3& point);

/// p → p + sample_grid(p); OutOfDomain names the offending point index.
LabeledCloud apply_grid(const LabeledCloud& tmpl, const VectorGrid& grid);

/// Evaluate an RBF field at every grid node.
VectorGrid rasterize_field(const RBFField& field, GridShape shape, const Aabb& bbox);

}  // namespace s2m
