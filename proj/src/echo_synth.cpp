#include "s2m/echo_synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "s2m/error.hpp"
#include "s2m/kernels.hpp"

namespace s2m {

void NoiseParams::validate() const {
  if (!(blur_sigma_px >= 0.0) || !std::isfinite(blur_sigma_px)) throw InvalidArgument("blur_sigma must be >= 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise_sigma must be >= 0");
}

std::vector<bool> sector_footprint(std::size_t width, std::size_t height, double pixel_size_mm,
                                   const ViewDefinition& view) {
  const double max_angle = deg_to_rad(view.half_angle_deg);
  const double half_w = static_cast<double>(width / 2);
  std::vector<bool> inside(width * height, false);
  for (std::size_t r = 0; r < height; ++r) {
    const double u = (static_cast<double>(r) + 0.5) * pixel_size_mm;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = (static_cast<double>(c) - half_w + 0.5) * pixel_size_mm;
      const double radius = std::hypot(u, v);
      inside[r * width + c] = radius <= view.depth_mm && std::atan2(std::abs(v), u) <= max_angle;
    }
  }
  return inside;
}

GrayImage to_gray(const BinaryMask& mask) {
  GrayImage g{mask.width, mask.height, std::vector<double>(mask.pixels.size())};
  for (std::size_t i = 0; i < mask.pixels.size(); ++i) g.intensities[i] = mask.pixels[i] / 255.0;
  return g;
}

GrayImage gaussian_blur(const GrayImage& image, double sigma_px) {
  if (!(sigma_px > 0.0)) return image;
  const std::vector<double> taps = kernels::gaussian_taps(sigma_px);
  GrayImage out{image.width, image.height, std::vector<double>(image.intensities.size())};
  kernels::omp::separable_blur(image.intensities, image.width, image.height, taps, out.intensities);
  return out;
}

GrayImage crop_and_speckle(const GrayImage& base, double pixel_size_mm, const ViewDefinition& view,
                           const NoiseParams& params) {
  params.validate();
  const std::vector<bool> inside = sector_footprint(base.width, base.height, pixel_size_mm, view);
  std::mt19937_64 gen(params.seed);
  std::normal_distribution<double> noise(0.0, params.noise_sigma > 0.0 ? params.noise_sigma : 1.0);
  GrayImage out{base.width, base.height, std::vector<double>(base.intensities.size(), 0.0)};
  for (std::size_t i = 0; i < inside.size(); ++i) {
    if (!inside[i]) continue;
    double v = base.intensities[i];
    if (params.noise_sigma > 0.0) v += noise(gen);
    out.intensities[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

GrayImage pseudo_image(const BinaryMask& mask, const ViewDefinition& view, const NoiseParams& params) {
  params.validate();
  return crop_and_speckle(gaussian_blur(to_gray(mask), params.blur_sigma_px), mask.pixel_size_mm, view, params);
}

// ---------------------------------------------------------------------------

namespace {

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

void check_probabilities(const std::vector<double>& ps, const char* what) {
  if (ps.empty()) throw InvalidArgument(std::string(what) + " is empty");
  for (double p : ps) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument(std::string(what) + " entries must lie strictly in (0, 1)");
  }
}

void check_residuals(const std::vector<double>& rs, const char* what) {
  if (rs.empty()) throw InvalidArgument(std::string(what) + " is empty");
  for (double r : rs) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument(std::string(what) + " entries must be finite and >= 0");
  }
}

}  // namespace

double gan_loss(const GanBatch& batch) {
  check_probabilities(batch.d_real, "d_real");
  check_probabilities(batch.d_fake, "d_fake");
  double real = 0.0;
  for (double p : batch.d_real) real += std::log(p);
  double fake = 0.0;
  for (double p : batch.d_fake) fake += std::log1p(-p);
  return real / static_cast<double>(batch.d_real.size()) + fake / static_cast<double>(batch.d_fake.size());
}

double mean_abs_residual(std::span<const double> reconstruction, std::span<const double> original) {
  if (reconstruction.size() != original.size() || original.empty()) {
    throw InvalidArgument("mean_abs_residual: sizes differ or are zero");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) s += std::abs(reconstruction[i] - original[i]);
  return s / static_cast<double>(original.size());
}

double cycle_loss(const CycleBatch& batch) {
  check_residuals(batch.residuals_x, "residuals_x");
  check_residuals(batch.residuals_y, "residuals_y");
  return mean_of(batch.residuals_x) + mean_of(batch.residuals_y);
}

double full_objective(double gan_xy, double gan_yx, double cycle, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  return gan_xy + gan_yx + lambda * cycle;
}

LossReport make_loss_report(double gan_xy, double gan_yx, double cycle, double lambda) {
  return {gan_xy, gan_yx, cycle, lambda, full_objective(gan_xy, gan_yx, cycle, lambda)};
}

}  // namespace s2m
