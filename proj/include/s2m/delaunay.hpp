#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "s2m/geometry.hpp"

namespace s2m {

/// Finite tetrahedra of a 3D Delaunay tetrahedralization, as indices into
/// the input point list.
struct Tetrahedralization {
  std::vector<std::array<std::size_t, 4>> tets;
};

/// Incremental Bowyer–Watson in input order, with an infinite vertex closing
/// the convex hull.
///
/// Predicates run on a copy of the points moved by a deterministic jitter of
/// 1e-9 × bbox diagonal per coordinate (a per-index hash), which breaks
/// cospherical and coplanar ties such as the corners of a cube; each
/// predicate is evaluated in floating point with an error filter and falls
/// back to exact rational arithmetic when the filter cannot certify the sign.
/// The tetrahedra are valid for the original coordinates up to slivers of
/// volume O(jitter).
///
/// Throws DegenerateGeometry for fewer than 4 points or when all points are
/// coplanar (checked exactly on the original coordinates).
Tetrahedralization delaunay_tetrahedralize(std::span<const Vec3> points);

/// |det(b − a, c − a, d − a)| / 6.
double tetra_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Σ tetra_volume over the tetrahedralization, on the original coordinates.
double tetrahedralized_volume(std::span<const Vec3> points, const Tetrahedralization& tri);

namespace predicates {
/// Sign of det(b − a, c − a, d − a): +1, 0 or −1, exact.
int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
/// +1 if e is strictly inside the circumsphere of the positively oriented
/// tetrahedron (a, b, c, d), −1 outside, 0 on it. Exact.
int insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e);
}  // namespace predicates

}  // namespace s2m
