#include <vector>

#include "kernel_elements.hpp"
#include "s2m/kernels.hpp"

namespace s2m::kernels::omp {

namespace {
// Signed loop indices for OpenMP worksharing.
inline long as_long(std::size_t n) { return static_cast<long>(n); }
}  // namespace

void softmin(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_weight,
             std::span<const double> potential, double eps, double damping, std::span<double> out) {
  const double inv_eps = 1.0 / eps;
#pragma omp parallel
  {
    std::vector<double> scratch(y.size());
#pragma omp for schedule(static)
    for (long i = 0; i < as_long(x.size()); ++i) {
      out[i] = -eps * damping * detail::softmin_row(x[i], y, log_weight, potential, inv_eps, scratch.data());
    }
  }
}

void plan_entries(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_a,
                  std::span<const double> log_b, std::span<const double> f, std::span<const double> g,
                  double eps, std::span<double> pi) {
  const double inv_eps = 1.0 / eps;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < as_long(x.size()); ++i) {
    detail::plan_row(x[i], log_a[i], f[i], y, log_b, g, inv_eps, pi.data() + i * y.size());
  }
}

void gaussian_gram(std::span<const Vec3> centers, double bandwidth, double ridge, std::span<double> out) {
  const std::size_t k = centers.size();
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
#pragma omp parallel for schedule(static)
  for (long a = 0; a < as_long(k); ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      out[a * k + b] = detail::gaussian(centers[a], centers[b], inv) +
                       (static_cast<std::size_t>(a) == b ? ridge : 0.0);
    }
  }
}

void gaussian_eval(std::span<const Vec3> centers, std::span<const Vec3> coefficients, double bandwidth,
                   std::span<const Vec3> queries, std::span<Vec3> out) {
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
#pragma omp parallel for schedule(static)
  for (long q = 0; q < as_long(queries.size()); ++q) {
    out[q] = detail::gaussian_sum(queries[q], centers, coefficients, inv);
  }
}

void trilinear_upsample(std::span<const Vec3> in, GridShape shape, std::size_t factor, std::span<Vec3> out) {
  const std::size_t od = upsampled_extent(shape.d, factor);
  const std::size_t oh = upsampled_extent(shape.h, factor);
  const std::size_t ow = upsampled_extent(shape.w, factor);
#pragma omp parallel for collapse(2) schedule(static)
  for (long d = 0; d < as_long(od); ++d)
    for (long h = 0; h < as_long(oh); ++h)
      for (std::size_t w = 0; w < ow; ++w)
        out[(d * oh + h) * ow + w] = detail::upsample_node(in, shape, factor, d, h, w);
}

void separable_blur(std::span<const double> in, std::size_t width, std::size_t height,
                    std::span<const double> taps, std::span<double> out) {
  std::vector<double> tmp(in.size());
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (long r = 0; r < as_long(height); ++r)
      for (std::size_t c = 0; c < width; ++c)
        tmp[r * width + c] = detail::blur_tap_sum(in.data() + r * width, width, 1, c, taps);
#pragma omp for schedule(static)
    for (long r = 0; r < as_long(height); ++r)
      for (std::size_t c = 0; c < width; ++c)
        out[r * width + c] = detail::blur_tap_sum(tmp.data() + c, height, width, r, taps);
  }
}

}  // namespace s2m::kernels::omp
