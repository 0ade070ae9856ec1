#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "s2m/view_slicer.hpp"

namespace s2m {

/// Intensities in [0, 1], row-major, row 0 at the top.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> intensities;

  double at(std::size_t row, std::size_t col) const { return intensities[row * width + col]; }
};

struct NoiseParams {
  double blur_sigma_px = 2.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// True for pixels whose centre lies inside the view's sector (radius <= depth,
/// angle to the beam <= half_angle), using the rasterizer's pixel mapping.
std::vector<bool> sector_footprint(std::size_t width, std::size_t height, double pixel_size_mm,
                                   const ViewDefinition& view);

/// mask / 255 as intensities.
GrayImage to_gray(const BinaryMask& mask);

/// Separable Gaussian blur, radius ceil(3 sigma), border replication.
GrayImage gaussian_blur(const GrayImage& image, double sigma_px);

/// Hard sector crop plus additive Gaussian noise, clamped to [0, 1].
///
/// Noise is drawn from mt19937_64(params.seed) for in-sector pixels only, in
/// row-major order. Out-of-sector pixels are exactly 0. No blur is applied;
/// pseudo_image() composes this with gaussian_blur().
GrayImage crop_and_speckle(const GrayImage& base, double pixel_size_mm, const ViewDefinition& view,
                           const NoiseParams& params);

/// Binary slice mask -> pseudo-ultrasound image: blur, sector crop, noise.
GrayImage pseudo_image(const BinaryMask& mask, const ViewDefinition& view, const NoiseParams& params);

// ---------------------------------------------------------------------------
// Adversarial / cycle objective terms over supplied discriminator outputs and
// reconstruction residuals. No networks live here.

struct GanBatch {
  std::vector<double> d_real;  ///< D(y) on real target-domain samples
  std::vector<double> d_fake;  ///< D(G(x)) on translated samples
};

/// mean(log d_real) + mean(log(1 - d_fake)). Entries must lie strictly in (0, 1).
double gan_loss(const GanBatch& batch);

struct CycleBatch {
  std::vector<double> residuals_x;  ///< per-item mean |F(G(x)) - x|
  std::vector<double> residuals_y;  ///< per-item mean |G(F(y)) - y|
};

/// Mean per-pixel absolute difference of one reconstruction, i.e. one entry
/// of a CycleBatch.
double mean_abs_residual(std::span<const double> reconstruction, std::span<const double> original);

/// mean(residuals_x) + mean(residuals_y).
double cycle_loss(const CycleBatch& batch);

/// gan_xy + gan_yx + lambda·cycle.
double full_objective(double gan_xy, double gan_yx, double cycle, double lambda);

struct LossReport {
  double gan_xy = 0.0;
  double gan_yx = 0.0;
  double cycle = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

LossReport make_loss_report(double gan_xy, double gan_yx, double cycle, double lambda);

}  // namespace s2m
