#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "s2m/geometry.hpp"

namespace s2m::test {

inline std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double lo = -50.0, double hi = 50.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) p = {u(gen), u(gen), u(gen)};
  return pts;
}

inline LabeledCloud random_cloud(std::size_t n, std::uint64_t seed, bool labeled = true) {
  std::vector<Vec3> pts = random_points(n, seed);
  if (!labeled) return LabeledCloud(std::move(pts));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>((i * 7 + seed) % 24);
  return LabeledCloud(std::move(pts), std::move(labels));
}

/// Uniform points in a ball, by rejection.
inline std::vector<Vec3> ball_points(std::size_t n, double radius, const Vec3& centre, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  pts.reserve(n);
  while (pts.size() < n) {
    const Vec3 d{u(gen), u(gen), u(gen)};
    if (dot(d, d) <= 1.0) pts.push_back(centre + radius * d);
  }
  return pts;
}

/// Plain row-major 3×3 product, written out.
inline std::array<double, 9> matmul3(const std::array<double, 9>& a, const std::array<double, 9>& b) {
  std::array<double, 9> c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("s2m_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace s2m::test
