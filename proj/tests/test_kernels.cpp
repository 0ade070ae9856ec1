#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include <omp.h>

#include "s2m/kernels.hpp"
#include "support.hpp"

using namespace s2m;
namespace ks = s2m::kernels;

namespace {

template <class T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

struct ThreadCount {
  explicit ThreadCount(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
  int saved;
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("softmin: serial and omp agree bit for bit") {
  const auto x = test::random_points(301, 1), y = test::random_points(257, 2);
  const auto lw = random_values(257, 3, -7, -5), pot = random_values(257, 4, -20, 20);
  for (double eps : {0.5, 30.0, 5000.0}) {
    std::vector<double> a(301), b(301);
    ks::serial::softmin(x, y, lw, pot, eps, 0.9, a);
    for (int threads : {1, 2, 4}) {
      ThreadCount tc(threads);
      ks::omp::softmin(x, y, lw, pot, eps, 0.9, b);
      CHECK(same_bits(a, b));
    }
  }
}

TEST_CASE("softmin matches a direct log-sum-exp") {
  const auto x = test::random_points(20, 5, 0, 10), y = test::random_points(30, 6, 0, 10);
  const auto lw = random_values(30, 7, -4, -3), pot = random_values(30, 8, -2, 2);
  const double eps = 3.0, damping = 0.75;
  std::vector<double> out(20);
  ks::serial::softmin(x, y, lw, pot, eps, damping, out);
  for (std::size_t i = 0; i < 20; ++i) {
    long double s = 0;
    for (std::size_t j = 0; j < 30; ++j) s += std::exp(static_cast<long double>(lw[j] + (pot[j] - 0.5 * squared_distance(x[i], y[j])) / eps));
    const double want = static_cast<double>(-eps * damping * std::log(s));
    CHECK(out[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("plan entries: serial and omp agree bit for bit") {
  const auto x = test::random_points(90, 9), y = test::random_points(70, 10);
  const auto la = random_values(90, 11, -5, -4), lb = random_values(70, 12, -5, -4);
  const auto f = random_values(90, 13, -100, 100), g = random_values(70, 14, -100, 100);
  std::vector<double> a(90 * 70), b(90 * 70);
  ks::serial::plan_entries(x, y, la, lb, f, g, 200.0, a);
  ThreadCount tc(4);
  ks::omp::plan_entries(x, y, la, lb, f, g, 200.0, b);
  CHECK(same_bits(a, b));
}

TEST_CASE("gaussian gram and eval: serial and omp agree bit for bit") {
  const auto c = test::random_points(150, 15);
  std::vector<double> ga(150 * 150), gb(150 * 150);
  ks::serial::gaussian_gram(c, 12.0, 1e-8, ga);
  ThreadCount tc(4);
  ks::omp::gaussian_gram(c, 12.0, 1e-8, gb);
  CHECK(same_bits(ga, gb));
  CHECK(ga[0] == 1.0 + 1e-8);
  CHECK(ga[1] == ga[150]);

  const auto coef = test::random_points(150, 16, -1, 1), q = test::random_points(333, 17);
  std::vector<Vec3> ea(333), eb(333);
  ks::serial::gaussian_eval(c, coef, 12.0, q, ea);
  ks::omp::gaussian_eval(c, coef, 12.0, q, eb);
  CHECK(same_bits(ea, eb));
}

TEST_CASE("trilinear upsample and blur: serial and omp agree bit for bit") {
  const ks::GridShape s{5, 6, 7};
  const auto in = test::random_points(s.nodes(), 18);
  const std::size_t n = ks::upsampled_extent(5, 3) * ks::upsampled_extent(6, 3) * ks::upsampled_extent(7, 3);
  std::vector<Vec3> a(n), b(n);
  ks::serial::trilinear_upsample(in, s, 3, a);
  ThreadCount tc(4);
  ks::omp::trilinear_upsample(in, s, 3, b);
  CHECK(same_bits(a, b));

  const auto img = random_values(97 * 61, 19, 0, 1);
  const auto taps = ks::gaussian_taps(2.3);
  std::vector<double> ba(img.size()), bb(img.size());
  ks::serial::separable_blur(img, 97, 61, taps, ba);
  ks::omp::separable_blur(img, 97, 61, taps, bb);
  CHECK(same_bits(ba, bb));
}

TEST_CASE("upsampled extent") {
  CHECK(ks::upsampled_extent(8, 4) == 29);
  CHECK(ks::upsampled_extent(1, 5) == 1);
}

}  // TEST_SUITE
