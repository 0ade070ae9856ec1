#pragma once

// Per-element routines shared by the serial and OpenMP kernels. Keeping the
// arithmetic here is what makes the two flavours bit-identical.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "s2m/geometry.hpp"
#include "s2m/kernels.hpp"

namespace s2m::kernels::detail {

inline double half_sq_dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return 0.5 * (dx * dx + dy * dy + dz * dz);
}

/// Terms this far below the row maximum (in log space) are below 2e-22 of the
/// sum and are skipped.
inline constexpr double kLseCutoff = -50.0;

/// log Σ_j exp(t_j), t_j = log_weight[j] + (potential[j] − ½|x_i − y_j|²)/eps.
/// `scratch` holds y.size() doubles.
inline double softmin_row(const Vec3& xi, std::span<const Vec3> y, std::span<const double> log_weight,
                          std::span<const double> potential, double inv_eps, double* scratch) {
  const std::size_t m = y.size();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const double t = log_weight[j] + (potential[j] - half_sq_dist(xi, y[j])) * inv_eps;
    scratch[j] = t;
    top = std::max(top, t);
  }
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = scratch[j] - top;
    if (d > kLseCutoff) s += std::exp(d);
  }
  return top + std::log(s);
}

inline void plan_row(const Vec3& xi, double log_ai, double fi, std::span<const Vec3> y,
                     std::span<const double> log_b, std::span<const double> g, double inv_eps, double* row) {
  for (std::size_t j = 0; j < y.size(); ++j) {
    row[j] = std::exp(log_ai + log_b[j] + (fi + g[j] - half_sq_dist(xi, y[j])) * inv_eps);
  }
}

inline double gaussian(const Vec3& a, const Vec3& b, double inv_two_h_sq) {
  return std::exp(-2.0 * half_sq_dist(a, b) * inv_two_h_sq);
}

inline Vec3 gaussian_sum(const Vec3& q, std::span<const Vec3> centers, std::span<const Vec3> coefficients,
                         double inv_two_h_sq) {
  Vec3 acc{};
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double w = gaussian(q, centers[k], inv_two_h_sq);
    acc.x += w * coefficients[k].x;
    acc.y += w * coefficients[k].y;
    acc.z += w * coefficients[k].z;
  }
  return acc;
}

/// a + t(b - a), clamped to [min(a,b), max(a,b)] so refinement never
/// overshoots its inputs.
inline double lerp_bounded(double a, double b, double t) {
  if (t == 1.0) return b;
  const double v = a + t * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

inline Vec3 lerp_bounded(const Vec3& a, const Vec3& b, double t) {
  return {lerp_bounded(a.x, b.x, t), lerp_bounded(a.y, b.y, t), lerp_bounded(a.z, b.z, t)};
}

struct AxisSample {
  std::size_t i0;
  std::size_t i1;
  double t;
};

inline AxisSample refine_axis(std::size_t out_index, std::size_t n_in, std::size_t factor) {
  const std::size_t i0 = out_index / factor;
  const std::size_t r = out_index % factor;
  if (i0 + 1 >= n_in) return {n_in - 1, n_in - 1, 0.0};
  return {i0, i0 + 1, static_cast<double>(r) / static_cast<double>(factor)};
}

/// Trilinear blend of the 8 corner values, z (d) outermost.
inline Vec3 trilinear_corners(const Vec3 c[8], double td, double th, double tw) {
  // c index bits: (d << 2) | (h << 1) | w
  const Vec3 c00 = lerp_bounded(c[0], c[1], tw);
  const Vec3 c01 = lerp_bounded(c[2], c[3], tw);
  const Vec3 c10 = lerp_bounded(c[4], c[5], tw);
  const Vec3 c11 = lerp_bounded(c[6], c[7], tw);
  const Vec3 c0 = lerp_bounded(c00, c01, th);
  const Vec3 c1 = lerp_bounded(c10, c11, th);
  return lerp_bounded(c0, c1, td);
}

inline Vec3 upsample_node(std::span<const Vec3> in, GridShape s, std::size_t factor, std::size_t od,
                          std::size_t oh, std::size_t ow) {
  const AxisSample ad = refine_axis(od, s.d, factor);
  const AxisSample ah = refine_axis(oh, s.h, factor);
  const AxisSample aw = refine_axis(ow, s.w, factor);
  const auto at = [&](std::size_t d, std::size_t h, std::size_t w) { return in[(d * s.h + h) * s.w + w]; };
  const Vec3 c[8] = {at(ad.i0, ah.i0, aw.i0), at(ad.i0, ah.i0, aw.i1), at(ad.i0, ah.i1, aw.i0),
                     at(ad.i0, ah.i1, aw.i1), at(ad.i1, ah.i0, aw.i0), at(ad.i1, ah.i0, aw.i1),
                     at(ad.i1, ah.i1, aw.i0), at(ad.i1, ah.i1, aw.i1)};
  return trilinear_corners(c, ad.t, ah.t, aw.t);
}

inline double blur_tap_sum(const double* line, std::size_t n, std::size_t stride, std::size_t pos,
                           std::span<const double> taps) {
  const long radius = static_cast<long>(taps.size() / 2);
  const long last = static_cast<long>(n) - 1;
  double acc = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const long src = std::clamp(static_cast<long>(pos) + static_cast<long>(k) - radius, 0L, last);
    acc += taps[k] * line[static_cast<std::size_t>(src) * stride];
  }
  return acc;
}

}  // namespace s2m::kernels::detail
