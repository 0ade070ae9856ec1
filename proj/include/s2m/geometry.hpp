#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace s2m {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double squared_distance(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}
Vec3 normalized(const Vec3& a);
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline constexpr int kMaxTissueLabel = 23;

/// Points in mm with optional per-point tissue labels in [0, 23].
///
/// Construction validates the invariants (finite coordinates, matching label
/// count, label range) and throws InvalidArgument otherwise. Instances are
/// immutable; every transform returns a new cloud.
class LabeledCloud {
 public:
  LabeledCloud() = default;
  explicit LabeledCloud(std::vector<Vec3> points);
  LabeledCloud(std::vector<Vec3> points, std::vector<int> labels);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  bool has_labels() const noexcept { return labels_.has_value(); }

  std::span<const Vec3> points() const noexcept { return points_; }
  /// Empty span when the cloud is unlabeled.
  std::span<const int> labels() const noexcept {
    return labels_ ? std::span<const int>(*labels_) : std::span<const int>();
  }
  const Vec3& point(std::size_t i) const { return points_.at(i); }
  int label(std::size_t i) const;

  /// Same labels, new positions. Sizes must agree.
  LabeledCloud with_points(std::vector<Vec3> points) const;
  /// Subset by index, order as given.
  LabeledCloud select(std::span<const std::size_t> indices) const;

 private:
  std::vector<Vec3> points_;
  std::optional<std::vector<int>> labels_;
};

/// Axis-aligned box with min < max on every axis.
struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  double diagonal() const { return norm(extent()); }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  /// Grow each side by `fraction` of the extent on that axis. Zero-extent
  /// axes grow by `fraction` of the diagonal (or 1 mm when everything is flat)
  /// so the result is always a valid box.
  Aabb expanded(double fraction) const;
  void validate() const;

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

/// Tight bounds of a nonempty point set (may be flat on some axis).
Aabb bounds(std::span<const Vec3> points);
Aabb bounds(const LabeledCloud& cloud);
Aabb joint_bounds(const LabeledCloud& a, const LabeledCloud& b);

/// Proper rotation, row-major, acting on column vectors from the left.
class RotationMatrix {
 public:
  static constexpr double kTolerance = 1e-9;

  RotationMatrix();  // identity
  /// Validates RᵀR = I and det R = 1 within kTolerance.
  explicit RotationMatrix(const std::array<double, 9>& row_major);

  double operator()(std::size_t r, std::size_t c) const { return m_[r * 3 + c]; }
  const std::array<double, 9>& entries() const noexcept { return m_; }
  Vec3 apply(const Vec3& p) const;
  RotationMatrix transposed() const;
  double determinant() const;
  friend RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b);

 private:
  struct Unchecked {};
  RotationMatrix(const std::array<double, 9>& m, Unchecked) : m_(m) {}
  std::array<double, 9> m_;
};

/// Similarity transform p' = s·R(angles)·p + delta. Angles in radians.
struct SimilarityTransform {
  Vec3 delta{};
  Vec3 angles{};
  double scale = 1.0;

  void validate() const;
};

LabeledCloud translate(const LabeledCloud& cloud, const Vec3& delta);
/// Rz(θz)·Ry(θy)·Rx(θx).
RotationMatrix rotation_matrix(const Vec3& angles);
RotationMatrix rotation_about_axis(const Vec3& axis, double angle);
LabeledCloud rotate(const LabeledCloud& cloud, const RotationMatrix& r);
LabeledCloud scale(const LabeledCloud& cloud, double s);
/// Scale, then rotate, then translate.
LabeledCloud apply_transform(const LabeledCloud& cloud, const SimilarityTransform& t);

Vec3 centroid(std::span<const Vec3> points);

constexpr double deg_to_rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }

}  // namespace s2m
