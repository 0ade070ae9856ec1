#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "s2m/echo_synth.hpp"
#include "s2m/error.hpp"
#include "s2m/kernels.hpp"

using namespace s2m;

namespace {

ViewDefinition view() {
  ViewDefinition v;
  v.axis = {1, 0, 0};
  v.up = {0, 1, 0};
  v.depth_mm = 60.0;
  return v;
}

BinaryMask checker(std::size_t w, std::size_t h) {
  BinaryMask m{w, h, 0.5, std::vector<std::uint8_t>(w * h, 0)};
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) m.pixels[r * w + c] = ((r / 8 + c / 8) % 2) ? 255 : 0;
  return m;
}

}  // namespace

TEST_SUITE("echo_synth") {

TEST_CASE("no-op filter reproduces the mask inside the sector") {
  const BinaryMask m = checker(96, 128);
  const ViewDefinition v = view();
  const GrayImage g = pseudo_image(m, v, NoiseParams{0.0, 0.0, 1});
  const auto inside = sector_footprint(m.width, m.height, m.pixel_size_mm, v);
  std::size_t n_in = 0;
  for (std::size_t i = 0; i < g.intensities.size(); ++i) {
    if (inside[i]) {
      ++n_in;
      CHECK(g.intensities[i] == m.pixels[i] / 255.0);
    } else {
      CHECK(g.intensities[i] == 0.0);
    }
  }
  CHECK(n_in > 0);
  CHECK(n_in < g.intensities.size());
}

TEST_CASE("out-of-sector pixels are exactly zero for any parameters") {
  const BinaryMask m{64, 64, 1.0, std::vector<std::uint8_t>(64 * 64, 255)};
  const ViewDefinition v = view();
  const auto inside = sector_footprint(64, 64, 1.0, v);
  for (double blur : {0.0, 1.0, 3.5})
    for (double noise : {0.0, 0.3}) {
      const GrayImage g = pseudo_image(m, v, NoiseParams{blur, noise, 42});
      for (std::size_t i = 0; i < inside.size(); ++i) {
        if (!inside[i]) CHECK(g.intensities[i] == 0.0);
        CHECK(g.intensities[i] >= 0.0);
        CHECK(g.intensities[i] <= 1.0);
      }
    }
}

TEST_CASE("sector footprint follows the pixel mapping") {
  const ViewDefinition v = view();
  const auto inside = sector_footprint(64, 64, 1.0, v);
  CHECK(inside[0 * 64 + 32]);     // top centre, next to the apex
  CHECK_FALSE(inside[0 * 64 + 0]);  // top-left corner is outside 45°
  CHECK(inside[40 * 64 + 32]);
  CHECK_FALSE(inside[63 * 64 + 32]);  // beyond the 60 mm depth
}

TEST_CASE("noise mean on a constant region") {
  // Constant 0.5 before noise: the clamp is symmetric, so the mean is unbiased.
  GrayImage base{200, 200, std::vector<double>(200 * 200, 0.5)};
  ViewDefinition v = view();
  v.depth_mm = 1000.0;
  const double sigma = 0.1;
  const GrayImage g = crop_and_speckle(base, 1.0, v, NoiseParams{0.0, sigma, 5});
  const auto inside = sector_footprint(200, 200, 1.0, v);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < inside.size(); ++i)
    if (inside[i]) {
      sum += g.intensities[i];
      ++n;
    }
  REQUIRE(n >= 10000);
  const double mean = sum / static_cast<double>(n);
  CHECK(std::abs(mean - 0.5) <= 3.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("seeded noise is reproducible and seed-sensitive") {
  const BinaryMask m = checker(64, 64);
  const ViewDefinition v = view();
  const GrayImage a = pseudo_image(m, v, NoiseParams{2.0, 0.1, 9});
  const GrayImage b = pseudo_image(m, v, NoiseParams{2.0, 0.1, 9});
  const GrayImage c = pseudo_image(m, v, NoiseParams{2.0, 0.1, 10});
  CHECK(a.intensities == b.intensities);
  CHECK(a.intensities != c.intensities);
}

TEST_CASE("blur preserves constants and total mass away from borders") {
  GrayImage flat{40, 30, std::vector<double>(1200, 0.375)};
  const GrayImage b = gaussian_blur(flat, 2.0);
  for (double x : b.intensities) CHECK(x == doctest::Approx(0.375).epsilon(1e-14));

  GrayImage dot{41, 41, std::vector<double>(41 * 41, 0.0)};
  dot.intensities[20 * 41 + 20] = 1.0;
  const GrayImage d = gaussian_blur(dot, 1.5);
  CHECK(std::accumulate(d.intensities.begin(), d.intensities.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  // Separable kernel: value at (r, c) is taps[r]·taps[c].
  const auto taps = kernels::gaussian_taps(1.5);
  const std::size_t rad = taps.size() / 2;
  CHECK(d.at(20, 20) == doctest::Approx(taps[rad] * taps[rad]).epsilon(1e-14));
  CHECK(d.at(21, 19) == doctest::Approx(taps[rad + 1] * taps[rad - 1]).epsilon(1e-14));
}

TEST_CASE("gaussian taps") {
  CHECK(kernels::gaussian_taps(0.0) == std::vector<double>{1.0});
  const auto t = kernels::gaussian_taps(2.0);
  CHECK(t.size() == 13);  // radius ceil(3·2)
  CHECK(std::accumulate(t.begin(), t.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == t[t.size() - 1 - i]);
}

TEST_CASE("noise params validation") {
  CHECK_THROWS_AS((NoiseParams{-1.0, 0.1, 0}.validate()), InvalidArgument);
  CHECK_THROWS_AS((NoiseParams{1.0, -0.1, 0}.validate()), InvalidArgument);
}

TEST_CASE("gan_loss") {
  CHECK(gan_loss(GanBatch{{0.5}, {0.5}}) == doctest::Approx(-1.3862943611198906).epsilon(1e-15));
  const double near = gan_loss(GanBatch{{1 - 1e-12, 1 - 1e-12}, {1e-12}});
  CHECK(std::abs(near) < 1e-9);
  CHECK_THROWS_AS(gan_loss(GanBatch{{1.0}, {0.5}}), InvalidArgument);
  CHECK_THROWS_AS(gan_loss(GanBatch{{0.5}, {0.0}}), InvalidArgument);
  CHECK_THROWS_AS(gan_loss(GanBatch{{}, {0.5}}), InvalidArgument);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int t = 0; t < 20; ++t) {
    GanBatch b;
    for (int i = 0; i < 17; ++i) b.d_real.push_back(u(gen));
    for (int i = 0; i < 11; ++i) b.d_fake.push_back(u(gen));
    double sr = 0.0, sf = 0.0;
    for (double x : b.d_real) sr += std::log(x);
    for (double x : b.d_fake) sf += std::log(1.0 - x);
    const double oracle = sr / 17.0 + sf / 11.0;
    CHECK(std::abs(gan_loss(b) - oracle) <= 1e-12);

    // Raising a real score raises the loss; raising a fake score lowers it.
    GanBatch up = b;
    up.d_real[3] = std::min(0.999, up.d_real[3] + 0.005);
    CHECK(gan_loss(up) > gan_loss(b));
    GanBatch fk = b;
    fk.d_fake[2] = std::min(0.999, fk.d_fake[2] + 0.005);
    CHECK(gan_loss(fk) < gan_loss(b));
  }
}

TEST_CASE("cycle_loss") {
  CHECK(cycle_loss(CycleBatch{{0, 0, 0}, {0, 0}}) == 0.0);
  const std::vector<double> x(100, 0.5), y(100, 0.75);
  const double r = mean_abs_residual(y, x);
  CHECK(r == 0.25);
  CHECK(cycle_loss(CycleBatch{{r, r}, {r}}) == 0.5);
  CHECK_THROWS_AS(mean_abs_residual(std::vector<double>(3), std::vector<double>(4)), InvalidArgument);
  CHECK_THROWS_AS(cycle_loss(CycleBatch{{-0.1}, {0.0}}), InvalidArgument);

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> a(257), b(257);
    for (auto& v : a) v = u(gen);
    for (auto& v : b) v = u(gen);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    CHECK(std::abs(mean_abs_residual(a, b) - s / 257.0) <= 1e-12);
    const CycleBatch cb{{u(gen), u(gen), u(gen)}, {u(gen), u(gen)}};
    const double oracle = (cb.residuals_x[0] + cb.residuals_x[1] + cb.residuals_x[2]) / 3.0 +
                          (cb.residuals_y[0] + cb.residuals_y[1]) / 2.0;
    CHECK(std::abs(cycle_loss(cb) - oracle) <= 1e-12);
    CHECK(cycle_loss(cb) > 0.0);
  }
}

TEST_CASE("full_objective") {
  CHECK(full_objective(0, 0, 0, 0) == 0.0);
  CHECK(full_objective(-1.5, -2.25, 7.0, 0.0) == -3.75);
  CHECK(full_objective(-1.0, -2.0, 0.3, 10.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(full_objective(0, 0, 0, -1.0), InvalidArgument);
  const LossReport r = make_loss_report(-1.0, -2.0, 0.5, 4.0);
  CHECK(r.total == -1.0);
  CHECK(r.lambda == 4.0);
}

}  // TEST_SUITE
