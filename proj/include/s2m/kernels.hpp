#pragma once

// Hot loops, each in two flavours with identical signatures:
//
//   s2m::kernels::serial  plain loops, the reference used by the tests
//   s2m::kernels::omp     OpenMP work-sharing over independent outputs
//
// Every output element is computed by the same per-element routine with a
// fixed summation order in both flavours, so results are bit-identical
// regardless of thread count. The library calls the omp flavour.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "s2m/geometry.hpp"

namespace s2m::kernels {

/// Node counts of a D×H×W grid, d-major.
struct GridShape {
  std::size_t d = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t nodes() const { return d * h * w; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

namespace serial {
/// out[i] = -eps·damping·log Σ_j exp(log_weight[j] + (potential[j] - ½|x_i - y_j|²) / eps)
void softmin(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_weight,
             std::span<const double> potential, double eps, double damping, std::span<double> out);
/// pi[i·M + j] = exp(log_a[i] + log_b[j] + (f[i] + g[j] - ½|x_i - y_j|²) / eps)
void plan_entries(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_a,
                  std::span<const double> log_b, std::span<const double> f, std::span<const double> g,
                  double eps, std::span<double> pi);
/// Row-major K×K Gaussian Gram matrix with `ridge` added on the diagonal.
void gaussian_gram(std::span<const Vec3> centers, double bandwidth, double ridge, std::span<double> out);
/// out[q] = Σ_k coefficients[k] · exp(-|queries[q] - centers[k]|² / (2h²))
void gaussian_eval(std::span<const Vec3> centers, std::span<const Vec3> coefficients, double bandwidth,
                   std::span<const Vec3> queries, std::span<Vec3> out);
/// Node-based trilinear refinement into upsampled_extent() nodes per axis.
void trilinear_upsample(std::span<const Vec3> in, GridShape shape, std::size_t factor, std::span<Vec3> out);
/// Separable convolution with border replication; `taps` has odd length.
void separable_blur(std::span<const double> in, std::size_t width, std::size_t height,
                    std::span<const double> taps, std::span<double> out);
}  // namespace serial

namespace omp {
/// out[i] = -eps·damping·log Σ_j exp(log_weight[j] + (potential[j] - ½|x_i - y_j|²) / eps)
void softmin(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_weight,
             std::span<const double> potential, double eps, double damping, std::span<double> out);
/// pi[i·M + j] = exp(log_a[i] + log_b[j] + (f[i] + g[j] - ½|x_i - y_j|²) / eps)
void plan_entries(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> log_a,
                  std::span<const double> log_b, std::span<const double> f, std::span<const double> g,
                  double eps, std::span<double> pi);
/// Row-major K×K Gaussian Gram matrix with `ridge` added on the diagonal.
void gaussian_gram(std::span<const Vec3> centers, double bandwidth, double ridge, std::span<double> out);
/// out[q] = Σ_k coefficients[k] · exp(-|queries[q] - centers[k]|² / (2h²))
void gaussian_eval(std::span<const Vec3> centers, std::span<const Vec3> coefficients, double bandwidth,
                   std::span<const Vec3> queries, std::span<Vec3> out);
/// Node-based trilinear refinement into upsampled_extent() nodes per axis.
void trilinear_upsample(std::span<const Vec3> in, GridShape shape, std::size_t factor, std::span<Vec3> out);
/// Separable convolution with border replication; `taps` has odd length.
void separable_blur(std::span<const double> in, std::size_t width, std::size_t height,
                    std::span<const double> taps, std::span<double> out);
}  // namespace omp

/// Refined node count along one axis.
constexpr std::size_t upsampled_extent(std::size_t n, std::size_t factor) {
  return (n - 1) * factor + 1;
}

/// Normalized Gaussian taps, radius ceil(3 sigma); sigma == 0 gives {1}.
std::vector<double> gaussian_taps(double sigma);

}  // namespace s2m::kernels
