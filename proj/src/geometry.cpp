#include "s2m/geometry.hpp"

#include <algorithm>
#include <string>

#include "s2m/error.hpp"

namespace s2m {

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("cannot normalize a zero or non-finite vector");
  return a * (1.0 / n);
}

// ---------------------------------------------------------------------------
// LabeledCloud

LabeledCloud::LabeledCloud(std::vector<Vec3> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!is_finite(points_[i])) throw InvalidArgument("non-finite coordinate at point " + std::to_string(i));
  }
}

LabeledCloud::LabeledCloud(std::vector<Vec3> points, std::vector<int> labels)
    : LabeledCloud(std::move(points)) {
  if (labels.size() != points_.size()) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) + " != point count " +
                          std::to_string(points_.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > kMaxTissueLabel) {
      throw InvalidArgument("label " + std::to_string(labels[i]) + " at point " + std::to_string(i) +
                            " outside [0, 23]");
    }
  }
  labels_ = std::move(labels);
}

int LabeledCloud::label(std::size_t i) const {
  if (!labels_) throw InvalidArgument("cloud has no labels");
  return labels_->at(i);
}

LabeledCloud LabeledCloud::with_points(std::vector<Vec3> points) const {
  if (points.size() != points_.size()) throw InvalidArgument("with_points: size mismatch");
  if (labels_) return LabeledCloud(std::move(points), *labels_);
  return LabeledCloud(std::move(points));
}

LabeledCloud LabeledCloud::select(std::span<const std::size_t> indices) const {
  std::vector<Vec3> pts;
  pts.reserve(indices.size());
  for (std::size_t i : indices) pts.push_back(points_.at(i));
  if (!labels_) return LabeledCloud(std::move(pts));
  std::vector<int> lbl;
  lbl.reserve(indices.size());
  for (std::size_t i : indices) lbl.push_back((*labels_)[i]);
  return LabeledCloud(std::move(pts), std::move(lbl));
}

// ---------------------------------------------------------------------------
// Aabb

void Aabb::validate() const {
  if (!is_finite(min) || !is_finite(max)) throw InvalidArgument("bbox has non-finite corners");
  if (!(min.x < max.x && min.y < max.y && min.z < max.z)) {
    throw InvalidArgument("bbox min must be < max on every axis");
  }
}

Aabb Aabb::expanded(double fraction) const {
  const Vec3 e = extent();
  double fallback = fraction * norm(e);
  if (!(fallback > 0.0)) fallback = 1.0;
  Aabb out = *this;
  for (std::size_t a = 0; a < 3; ++a) {
    const double grow = e[a] > 0.0 ? fraction * e[a] : fallback;
    out.min[a] -= grow;
    out.max[a] += grow;
  }
  return out;
}

Aabb bounds(std::span<const Vec3> points) {
  if (points.empty()) throw InvalidArgument("bounds of an empty point set");
  Aabb b{points[0], points[0]};
  for (const Vec3& p : points) {
    for (std::size_t a = 0; a < 3; ++a) {
      b.min[a] = std::min(b.min[a], p[a]);
      b.max[a] = std::max(b.max[a], p[a]);
    }
  }
  return b;
}

Aabb bounds(const LabeledCloud& cloud) { return bounds(cloud.points()); }

Aabb joint_bounds(const LabeledCloud& a, const LabeledCloud& b) {
  if (a.empty()) return bounds(b);
  if (b.empty()) return bounds(a);
  Aabb ba = bounds(a);
  const Aabb bb = bounds(b);
  for (std::size_t i = 0; i < 3; ++i) {
    ba.min[i] = std::min(ba.min[i], bb.min[i]);
    ba.max[i] = std::max(ba.max[i], bb.max[i]);
  }
  return ba;
}

Vec3 centroid(std::span<const Vec3> points) {
  if (points.empty()) throw InvalidArgument("centroid of an empty point set");
  Vec3 c{};
  for (const Vec3& p : points) c += p;
  return c * (1.0 / static_cast<double>(points.size()));
}

// ---------------------------------------------------------------------------
// RotationMatrix

RotationMatrix::RotationMatrix() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

RotationMatrix::RotationMatrix(const std::array<double, 9>& row_major) : m_(row_major) {
  for (double v : m_) {
    if (!std::isfinite(v)) throw InvalidArgument("rotation matrix has non-finite entries");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += m_[k * 3 + i] * m_[k * 3 + j];
      if (std::abs(s - (i == j ? 1.0 : 0.0)) > kTolerance) {
        throw InvalidArgument("rotation matrix is not orthonormal");
      }
    }
  }
  if (std::abs(determinant() - 1.0) > kTolerance) {
    throw InvalidArgument("rotation matrix determinant is not +1");
  }
}

Vec3 RotationMatrix::apply(const Vec3& p) const {
  return {m_[0] * p.x + m_[1] * p.y + m_[2] * p.z, m_[3] * p.x + m_[4] * p.y + m_[5] * p.z,
          m_[6] * p.x + m_[7] * p.y + m_[8] * p.z};
}

RotationMatrix RotationMatrix::transposed() const {
  return RotationMatrix({m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]}, Unchecked{});
}

double RotationMatrix::determinant() const {
  return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
         m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
}

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b) {
  std::array<double, 9> m{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) m[i * 3 + j] += a(i, k) * b(k, j);
  return RotationMatrix(m, RotationMatrix::Unchecked{});
}

RotationMatrix rotation_matrix(const Vec3& angles) {
  if (!is_finite(angles)) throw InvalidArgument("rotation angles must be finite");
  const double cx = std::cos(angles.x), sx = std::sin(angles.x);
  const double cy = std::cos(angles.y), sy = std::sin(angles.y);
  const double cz = std::cos(angles.z), sz = std::sin(angles.z);
  const RotationMatrix rx({1, 0, 0, 0, cx, -sx, 0, sx, cx});
  const RotationMatrix ry({cy, 0, sy, 0, 1, 0, -sy, 0, cy});
  const RotationMatrix rz({cz, -sz, 0, sz, cz, 0, 0, 0, 1});
  return rz * ry * rx;
}

RotationMatrix rotation_about_axis(const Vec3& axis, double angle) {
  const Vec3 k = normalized(axis);
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  // Rodrigues
  return RotationMatrix({t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y,
                         t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x,
                         t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c});
}

// ---------------------------------------------------------------------------
// Transforms

LabeledCloud translate(const LabeledCloud& cloud, const Vec3& delta) {
  if (!is_finite(delta)) throw InvalidArgument("translation must be finite");
  std::vector<Vec3> pts(cloud.points().begin(), cloud.points().end());
  for (Vec3& p : pts) p += delta;
  return cloud.with_points(std::move(pts));
}

LabeledCloud rotate(const LabeledCloud& cloud, const RotationMatrix& r) {
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const Vec3& p : cloud.points()) pts.push_back(r.apply(p));
  return cloud.with_points(std::move(pts));
}

LabeledCloud scale(const LabeledCloud& cloud, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("scale factor must be finite and > 0");
  std::vector<Vec3> pts(cloud.points().begin(), cloud.points().end());
  for (Vec3& p : pts) p *= s;
  return cloud.with_points(std::move(pts));
}

void SimilarityTransform::validate() const {
  if (!is_finite(delta) || !is_finite(angles)) throw InvalidArgument("transform fields must be finite");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("transform scale must be finite and > 0");
}

LabeledCloud apply_transform(const LabeledCloud& cloud, const SimilarityTransform& t) {
  t.validate();
  const RotationMatrix r = rotation_matrix(t.angles);
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const Vec3& p : cloud.points()) pts.push_back(r.apply(p * t.scale) + t.delta);
  return cloud.with_points(std::move(pts));
}

}  // namespace s2m
