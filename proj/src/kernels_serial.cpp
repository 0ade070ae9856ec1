#include <vector>

#include "kernel_elements.hpp"
#include "s2m/kernels.hpp"

namespace s2m::kernels {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double x = static_cast<double>(k) - static_cast<double>(radius);
    taps[k] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace serial {

void softmin(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_weight,
             std::span<const double> potential, double eps, double damping, std::span<double> out) {
  const double inv_eps = 1.0 / eps;
  std::vector<double> scratch(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = -eps * damping * detail::softmin_row(x[i], y, log_weight, potential, inv_eps, scratch.data());
  }
}

void plan_entries(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_a,
                  std::span<const double> log_b, std::span<const double> f, std::span<const double> g,
                  double eps, std::span<double> pi) {
  const double inv_eps = 1.0 / eps;
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::plan_row(x[i], log_a[i], f[i], y, log_b, g, inv_eps, pi.data() + i * y.size());
  }
}

void gaussian_gram(std::span<const Vec3> centers, double bandwidth, double ridge, std::span<double> out) {
  const std::size_t k = centers.size();
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      out[a * k + b] = detail::gaussian(centers[a], centers[b], inv) + (a == b ? ridge : 0.0);
    }
  }
}

void gaussian_eval(std::span<const Vec3> centers, std::span<const Vec3> coefficients, double bandwidth,
                   std::span<const Vec3> queries, std::span<Vec3> out) {
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out[q] = detail::gaussian_sum(queries[q], centers, coefficients, inv);
  }
}

void trilinear_upsample(std::span<const Vec3> in, GridShape shape, std::size_t factor, std::span<Vec3> out) {
  const std::size_t od = upsampled_extent(shape.d, factor);
  const std::size_t oh = upsampled_extent(shape.h, factor);
  const std::size_t ow = upsampled_extent(shape.w, factor);
  for (std::size_t d = 0; d < od; ++d)
    for (std::size_t h = 0; h < oh; ++h)
      for (std::size_t w = 0; w < ow; ++w)
        out[(d * oh + h) * ow + w] = detail::upsample_node(in, shape, factor, d, h, w);
}

void separable_blur(std::span<const double> in, std::size_t width, std::size_t height,
                    std::span<const double> taps, std::span<double> out) {
  std::vector<double> tmp(in.size());
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      tmp[r * width + c] = detail::blur_tap_sum(in.data() + r * width, width, 1, c, taps);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      out[r * width + c] = detail::blur_tap_sum(tmp.data() + c, height, width, r, taps);
}

}  // namespace serial
}  // namespace s2m::kernels
