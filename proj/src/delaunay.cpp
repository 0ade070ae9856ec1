#include "s2m/delaunay.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "s2m/error.hpp"
#include "s2m/rng.hpp"

namespace s2m {

namespace predicates {

namespace {

using Exact = boost::multiprecision::cpp_rational;
constexpr double kEps = std::numeric_limits<double>::epsilon();

template <class T>
T det3(const T& a0, const T& a1, const T& a2, const T& b0, const T& b1, const T& b2, const T& c0, const T& c1,
       const T& c2) {
  return a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0);
}

template <class T>
T orient_value(const std::array<T, 3>& a, const std::array<T, 3>& b, const std::array<T, 3>& c,
               const std::array<T, 3>& d) {
  const T bx = b[0] - a[0], by = b[1] - a[1], bz = b[2] - a[2];
  const T cx = c[0] - a[0], cy = c[1] - a[1], cz = c[2] - a[2];
  const T dx = d[0] - a[0], dy = d[1] - a[1], dz = d[2] - a[2];
  return det3(bx, by, bz, cx, cy, cz, dx, dy, dz);
}

// Lifted 4×4 determinant; negative when e is inside the circumsphere of a
// positively oriented (a, b, c, d).
template <class T>
T lifted_value(const std::array<T, 3>& a, const std::array<T, 3>& b, const std::array<T, 3>& c,
               const std::array<T, 3>& d, const std::array<T, 3>& e) {
  std::array<std::array<T, 4>, 4> r;
  const std::array<T, 3>* src[4] = {&b, &c, &d, &e};
  for (int i = 0; i < 4; ++i) {
    const T x = (*src[i])[0] - a[0], y = (*src[i])[1] - a[1], z = (*src[i])[2] - a[2];
    r[i] = {x, y, z, x * x + y * y + z * z};
  }
  const auto minor = [&](int skip) {
    int rows[3], k = 0;
    for (int i = 0; i < 4; ++i)
      if (i != skip) rows[k++] = i;
    return det3(r[rows[0]][0], r[rows[0]][1], r[rows[0]][2], r[rows[1]][0], r[rows[1]][1], r[rows[1]][2],
                r[rows[2]][0], r[rows[2]][1], r[rows[2]][2]);
  };
  return -r[0][3] * minor(0) + r[1][3] * minor(1) - r[2][3] * minor(2) + r[3][3] * minor(3);
}

std::array<double, 3> arr(const Vec3& v) { return {v.x, v.y, v.z}; }
std::array<Exact, 3> exact(const Vec3& v) { return {Exact(v.x), Exact(v.y), Exact(v.z)}; }
std::array<double, 3> absolute(const std::array<double, 3>& v) {
  return {std::abs(v[0]), std::abs(v[1]), std::abs(v[2])};
}

template <class T>
int sign_of(const T& v) {
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

// Magnitude bound for the floating-point evaluation: the same expansion on
// absolute values of the (rounded) differences.
double orient_permanent(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const auto ab = absolute(arr(b - a)), ac = absolute(arr(c - a)), ad = absolute(arr(d - a));
  return ab[0] * (ac[1] * ad[2] + ac[2] * ad[1]) + ab[1] * (ac[0] * ad[2] + ac[2] * ad[0]) +
         ab[2] * (ac[0] * ad[1] + ac[1] * ad[0]);
}

double lifted_permanent(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  std::array<std::array<double, 4>, 4> r;
  const Vec3* src[4] = {&b, &c, &d, &e};
  for (int i = 0; i < 4; ++i) {
    const Vec3 v = *src[i] - a;
    r[i] = {std::abs(v.x), std::abs(v.y), std::abs(v.z), dot(v, v)};
  }
  const auto minor = [&](int skip) {
    int rows[3], k = 0;
    for (int i = 0; i < 4; ++i)
      if (i != skip) rows[k++] = i;
    const auto& p = r[rows[0]];
    const auto& q = r[rows[1]];
    const auto& s = r[rows[2]];
    return p[0] * (q[1] * s[2] + q[2] * s[1]) + p[1] * (q[0] * s[2] + q[2] * s[0]) +
           p[2] * (q[0] * s[1] + q[1] * s[0]);
  };
  return r[0][3] * minor(0) + r[1][3] * minor(1) + r[2][3] * minor(2) + r[3][3] * minor(3);
}

}  // namespace

int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const double v = orient_value(arr(a), arr(b), arr(c), arr(d));
  const double bound = 16.0 * kEps * orient_permanent(a, b, c, d);
  if (std::abs(v) > bound) return sign_of(v);
  return sign_of(orient_value(exact(a), exact(b), exact(c), exact(d)));
}

int insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  const double v = lifted_value(arr(a), arr(b), arr(c), arr(d), arr(e));
  const double bound = 64.0 * kEps * lifted_permanent(a, b, c, d, e);
  if (std::abs(v) > bound) return -sign_of(v);
  return -sign_of(lifted_value(exact(a), exact(b), exact(c), exact(d), exact(e)));
}

}  // namespace predicates

double tetra_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return std::abs(dot(b - a, cross(c - a, d - a))) / 6.0;
}

double tetrahedralized_volume(std::span<const Vec3> points, const Tetrahedralization& tri) {
  double v = 0.0;
  for (const auto& t : tri.tets) v += tetra_volume(points[t[0]], points[t[1]], points[t[2]], points[t[3]]);
  return v;
}

namespace {

constexpr int kInfinite = -1;
constexpr int kNone = -1;

struct Cell {
  std::array<int, 4> v;
  std::array<int, 4> nbr{kNone, kNone, kNone, kNone};
  bool alive = true;

  bool infinite() const { return v[0] == kInfinite || v[1] == kInfinite || v[2] == kInfinite || v[3] == kInfinite; }
  int slot_of_vertex(int vertex) const {
    for (int k = 0; k < 4; ++k)
      if (v[k] == vertex) return k;
    return -1;
  }
  int slot_of_neighbor(int cell) const {
    for (int k = 0; k < 4; ++k)
      if (nbr[k] == cell) return k;
    return -1;
  }
};

std::array<int, 3> face_key(const Cell& c, int skip) {
  std::array<int, 3> f{};
  int n = 0;
  for (int k = 0; k < 4; ++k)
    if (k != skip) f[n++] = c.v[k];
  std::sort(f.begin(), f.end());
  return f;
}

class Builder {
 public:
  explicit Builder(std::vector<Vec3> pts) : p_(std::move(pts)) {}

  Tetrahedralization run(const std::array<std::size_t, 4>& seed);

 private:
  int orient_with(const Cell& c, int slot, const Vec3& x) const {
    std::array<Vec3, 4> q;
    for (int k = 0; k < 4; ++k) q[k] = (k == slot) ? x : p_[c.v[k]];
    return predicates::orient3d(q[0], q[1], q[2], q[3]);
  }

  bool in_conflict(int ci, const Vec3& x) const {
    const Cell& c = cells_[ci];
    const int inf = c.slot_of_vertex(kInfinite);
    if (inf < 0) return predicates::insphere(p_[c.v[0]], p_[c.v[1]], p_[c.v[2]], p_[c.v[3]], x) > 0;
    const int o = orient_with(c, inf, x);
    if (o != 0) return o > 0;
    // On the hull plane: conflict iff inside the circumcircle of the hull
    // face, i.e. iff the finite cell behind the face is in conflict.
    return in_conflict(c.nbr[inf], x);
  }

  int locate(int start, const Vec3& x) const;
  int new_cell(const std::array<int, 4>& v);
  void insert(int vertex);

  std::vector<Vec3> p_;
  std::vector<Cell> cells_;
  std::vector<int> free_;
  int last_ = 0;

  struct Stamp {
    unsigned epoch;
    bool conflict;
  };
  std::vector<Stamp> stamp_;  // per-cell conflict cache for the current insertion
  unsigned epoch_ = 0;
};

int Builder::new_cell(const std::array<int, 4>& v) {
  Cell c;
  c.v = v;
  if (!free_.empty()) {
    const int i = free_.back();
    free_.pop_back();
    cells_[i] = c;
    return i;
  }
  cells_.push_back(c);
  return static_cast<int>(cells_.size()) - 1;
}

// Visibility walk through finite cells; stepping through a hull face lands in
// an infinite cell that is in conflict by construction.
int Builder::locate(int start, const Vec3& x) const {
  int ci = start;
  if (cells_[ci].infinite()) ci = cells_[ci].nbr[cells_[ci].slot_of_vertex(kInfinite)];
  const std::size_t max_steps = cells_.size() + 16;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Cell& c = cells_[ci];
    if (c.infinite()) return ci;
    int next = -1;
    for (int k = 0; k < 4; ++k) {
      if (orient_with(c, k, x) < 0) {
        next = c.nbr[k];
        break;
      }
    }
    if (next < 0) return ci;
    ci = next;
  }
  // The walk cannot cycle on a Delaunay triangulation; fall back to a scan
  // if floating-point trouble ever suggests otherwise.
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i].alive && in_conflict(static_cast<int>(i), x)) return static_cast<int>(i);
  }
  throw DegenerateGeometry("point location failed");
}

void Builder::insert(int vertex) {
  const Vec3& x = p_[vertex];
  int start = locate(last_, x);
  if (!in_conflict(start, x)) {
    start = -1;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (cells_[i].alive && in_conflict(static_cast<int>(i), x)) {
        start = static_cast<int>(i);
        break;
      }
    }
    if (start < 0) throw DegenerateGeometry("no conflict cell for point " + std::to_string(vertex));
  }

  // Grow the cavity.
  std::vector<int> cavity{start};
  ++epoch_;
  if (stamp_.size() < cells_.size()) stamp_.resize(cells_.size(), {0, false});
  stamp_[start] = {epoch_, true};
  std::vector<std::pair<int, int>> boundary;  // (cavity cell, face slot)
  for (std::size_t head = 0; head < cavity.size(); ++head) {
    const int ci = cavity[head];
    for (int k = 0; k < 4; ++k) {
      const int ni = cells_[ci].nbr[k];
      if (stamp_[ni].epoch != epoch_) {
        stamp_[ni] = {epoch_, in_conflict(ni, x)};
        if (stamp_[ni].conflict) cavity.push_back(ni);
      }
      if (!stamp_[ni].conflict) boundary.emplace_back(ci, k);
    }
  }

  // Star the boundary from the new vertex. Cells are created after the
  // cavity is freed so slots are reused.
  std::vector<std::pair<std::array<int, 4>, int>> stars;  // (vertices, outside neighbour)
  stars.reserve(boundary.size());
  for (const auto& [ci, k] : boundary) {
    std::array<int, 4> v = cells_[ci].v;
    v[k] = vertex;
    stars.emplace_back(v, cells_[ci].nbr[k]);
  }
  std::vector<int> outside_slot(boundary.size());
  for (std::size_t b = 0; b < boundary.size(); ++b) {
    outside_slot[b] = cells_[stars[b].second].slot_of_neighbor(boundary[b].first);
  }
  for (int ci : cavity) {
    cells_[ci].alive = false;
    free_.push_back(ci);
  }

  std::map<std::array<int, 3>, std::pair<int, int>> open_faces;
  std::vector<int> created;
  created.reserve(stars.size());
  for (std::size_t b = 0; b < stars.size(); ++b) {
    const int ni = new_cell(stars[b].first);
    created.push_back(ni);
    const int k = boundary[b].second;
    cells_[ni].nbr[k] = stars[b].second;
    cells_[stars[b].second].nbr[outside_slot[b]] = ni;
    for (int s = 0; s < 4; ++s) {
      if (s == k) continue;
      const auto key = face_key(cells_[ni], s);
      const auto it = open_faces.find(key);
      if (it == open_faces.end()) {
        open_faces.emplace(key, std::make_pair(ni, s));
      } else {
        cells_[ni].nbr[s] = it->second.first;
        cells_[it->second.first].nbr[it->second.second] = ni;
        open_faces.erase(it);
      }
    }
  }
  if (!open_faces.empty()) throw DegenerateGeometry("cavity boundary is not closed");
  for (int ci : created) {
    if (!cells_[ci].infinite()) {
      last_ = ci;
      break;
    }
  }
}

Tetrahedralization Builder::run(const std::array<std::size_t, 4>& seed) {
  std::array<int, 4> t{static_cast<int>(seed[0]), static_cast<int>(seed[1]), static_cast<int>(seed[2]),
                       static_cast<int>(seed[3])};
  const int o = predicates::orient3d(p_[t[0]], p_[t[1]], p_[t[2]], p_[t[3]]);
  if (o == 0) throw DegenerateGeometry("initial tetrahedron is flat");
  if (o < 0) std::swap(t[0], t[1]);

  const int root = new_cell(t);
  std::map<std::array<int, 3>, std::pair<int, int>> open_faces;
  for (int k = 0; k < 4; ++k) {
    // Hull cell across face k: replace the opposite vertex by the infinite
    // vertex and flip orientation.
    std::array<int, 4> v = t;
    v[k] = kInfinite;
    std::swap(v[(k + 1) % 4], v[(k + 2) % 4]);
    const int hi = new_cell(v);
    cells_[root].nbr[k] = hi;
    const int back = cells_[hi].slot_of_vertex(kInfinite);
    cells_[hi].nbr[back] = root;
    for (int s = 0; s < 4; ++s) {
      if (s == back) continue;
      const auto key = face_key(cells_[hi], s);
      const auto it = open_faces.find(key);
      if (it == open_faces.end()) {
        open_faces.emplace(key, std::make_pair(hi, s));
      } else {
        cells_[hi].nbr[s] = it->second.first;
        cells_[it->second.first].nbr[it->second.second] = hi;
        open_faces.erase(it);
      }
    }
  }
  last_ = root;

  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (std::find(seed.begin(), seed.end(), i) != seed.end()) continue;
    insert(static_cast<int>(i));
  }

  Tetrahedralization out;
  for (const Cell& c : cells_) {
    if (!c.alive || c.infinite()) continue;
    out.tets.push_back({static_cast<std::size_t>(c.v[0]), static_cast<std::size_t>(c.v[1]),
                        static_cast<std::size_t>(c.v[2]), static_cast<std::size_t>(c.v[3])});
  }
  return out;
}

// Deterministic per-coordinate offset in [-1, 1).
double jitter(std::size_t index, int axis) {
  return 2.0 * unit_double(mix64(mix64(index) ^ static_cast<std::uint64_t>(axis + 1))) - 1.0;
}

}  // namespace

Tetrahedralization delaunay_tetrahedralize(std::span<const Vec3> points) {
  if (points.size() < 4) throw DegenerateGeometry("Delaunay needs at least 4 points");
  if (points.size() > static_cast<std::size_t>(std::numeric_limits<int>::max() / 8)) {
    throw InvalidArgument("too many points for tetrahedralization");
  }

  // Exact non-coplanarity check on the original coordinates.
  std::array<std::size_t, 4> seed{0, 0, 0, 0};
  std::size_t i = 1;
  while (i < points.size() && points[i] == points[0]) ++i;
  if (i == points.size()) throw DegenerateGeometry("all points coincide");
  seed[1] = i;
  // Collinear with (p0, pi) iff every orientation against an off-axis probe is zero.
  const auto collinear = [&](std::size_t n) {
    for (const Vec3& e : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}) {
      if (predicates::orient3d(points[0], points[i], points[n], points[0] + e) != 0) return false;
    }
    return true;
  };
  std::size_t j = i + 1;
  while (j < points.size() && collinear(j)) ++j;
  if (j == points.size()) throw DegenerateGeometry("all points are collinear");
  seed[2] = j;
  std::size_t k = j + 1;
  while (k < points.size() && predicates::orient3d(points[0], points[i], points[j], points[k]) == 0) ++k;
  if (k == points.size()) throw DegenerateGeometry("all points are coplanar");
  seed[3] = k;

  const Aabb box = bounds(points);
  const Vec3 center = (box.min + box.max) * 0.5;
  const double amplitude = 1e-9 * box.diagonal();
  std::vector<Vec3> moved(points.size());
  for (std::size_t n = 0; n < points.size(); ++n) {
    const Vec3 c = points[n] - center;
    moved[n] = {c.x + amplitude * jitter(n, 0), c.y + amplitude * jitter(n, 1), c.z + amplitude * jitter(n, 2)};
  }
  return Builder(std::move(moved)).run(seed);
}

}  // namespace s2m
