#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "s2m/deformation_ot.hpp"
#include "s2m/error.hpp"
#include "support.hpp"

using namespace s2m;

namespace {

double half_sq(const Vec3& a, const Vec3& b) { return 0.5 * squared_distance(a, b); }

/// Minimum over permutations of Σ_i ½‖p_i − q_σ(i)‖² / N: the balanced
/// optimum for uniform weights (Birkhoff: some vertex is optimal).
double brute_force_balanced(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  std::vector<std::size_t> perm(p.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c += half_sq(p[i], q[perm[i]]);
    best = std::min(best, c / static_cast<double>(p.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Dense Gaussian elimination with partial pivoting; `a` is n×n row-major.
std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a[r * n + k]) > std::abs(a[piv * n + k])) piv = r;
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a[r * n + k] / a[k * n + k];
      for (std::size_t c = k; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
      b[r] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= a[k * n + c] * x[c];
    x[k] = s / a[k * n + k];
  }
  return x;
}

OTParams params(double tau_sq, double sigma_sq, double tol = 1e-9, int max_iter = 5000) {
  OTParams p;
  p.tau_sq = tau_sq;
  p.sigma_sq = sigma_sq;
  p.tol = tol;
  p.max_iter = max_iter;
  return p;
}

double mean_cost(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  double s = 0.0;
  for (const Vec3& a : p)
    for (const Vec3& b : q) s += half_sq(a, b);
  return s / static_cast<double>(p.size() * q.size());
}

double max_cost(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  double m = 0.0;
  for (const Vec3& a : p)
    for (const Vec3& b : q) m = std::max(m, half_sq(a, b));
  return m;
}

}  // namespace

TEST_SUITE("deformation_ot") {

TEST_CASE("params validation") {
  CHECK_THROWS_AS(params(1.0, 0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(params(-1.0, 1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(params(1.0, 1.0, 0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(params(1.0, 1.0, 1e-6, 0).validate(), InvalidArgument);
  CHECK_NOTHROW(params(std::numeric_limits<double>::infinity(), 1.0).validate());
  const OTParams d = OTParams::defaults_for(Aabb{{0, 0, 0}, {3, 4, 12}});
  CHECK(d.tau_sq == doctest::Approx(1.69));
  CHECK(d.sigma_sq == doctest::Approx(0.0169));
  CHECK(d.max_iter == 1000);
  CHECK(d.tol == 1e-6);
}

TEST_CASE("single pair gets all the plan mass") {
  const LabeledCloud p({{0, 0, 0}}), q({{3, 4, 0}});
  for (double tau : {0.1, 1.0, 1e6}) {
    const AssignmentMatrix a = solve_assignment(p, q, params(tau, 0.5));
    REQUIRE(a.pi.size() == 1);
    CHECK(a.pi[0] > 0.0);
    const DeformationSamples d = displacement(a, p, q);
    CHECK(norm(d.vectors[0] - Vec3{3, 4, 0}) < 1e-12);
  }
}

TEST_CASE("self-assignment puts each row's argmax on the diagonal") {
  const LabeledCloud c(test::random_points(60, 2));
  const OTParams base = OTParams::defaults_for(bounds(c));
  OTParams p = base;
  p.tau_sq = 1e3 * max_cost(std::vector<Vec3>(c.points().begin(), c.points().end()),
                            std::vector<Vec3>(c.points().begin(), c.points().end()));
  const AssignmentMatrix a = solve_assignment(c, c, p);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < a.cols; ++j)
      if (a.at(i, j) > a.at(i, best)) best = j;  // lowest index wins ties
    CHECK(best == i);
  }
}

TEST_CASE("near-balanced plans match the brute-force assignment optimum") {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> size(2, 6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = static_cast<std::size_t>(size(gen));
    const auto p = test::random_points(n, 100 + t, 0, 10);
    const auto q = test::random_points(n, 200 + t, 0, 10);
    const AssignmentMatrix a =
        solve_assignment(LabeledCloud(p), LabeledCloud(q), params(1e3 * max_cost(p, q), 1e-3 * mean_cost(p, q)));
    const double opt = brute_force_balanced(p, q);
    CHECK(std::abs(transport_cost(a, p, q) - opt) <= 0.05 * opt);
  }
}

TEST_CASE("plan is nonnegative and beats the independence plan") {
  for (std::uint64_t s = 0; s < 8; ++s) {
    const auto p = test::random_points(25, 300 + s);
    const auto q = test::random_points(30, 400 + s);
    const double tau = s % 2 ? 50.0 : 5000.0, sig = s % 3 ? 4.0 : 40.0;
    const AssignmentMatrix a = solve_assignment(LabeledCloud(p), LabeledCloud(q), params(tau, sig));
    CHECK(std::all_of(a.pi.begin(), a.pi.end(), [](double v) { return v >= 0.0 && std::isfinite(v); }));
    std::vector<double> indep(p.size() * q.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < q.size(); ++j) indep[i * q.size() + j] = a.alpha[i] * a.beta[j];
    const double obj = ot_objective(a.pi, a.alpha, a.beta, p, q, tau, sig);
    CHECK(obj <= ot_objective(indep, a.alpha, a.beta, p, q, tau, sig));
    CHECK(a.objective == doctest::Approx(obj).epsilon(1e-12));
    CHECK(std::accumulate(a.alpha.begin(), a.alpha.end(), 0.0) == doctest::Approx(1.0));
    CHECK(std::accumulate(a.beta.begin(), a.beta.end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("objective oracle") {
  const std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0}}, q{{0, 1, 0}};
  const std::vector<double> pi{0.3, 0.6}, alpha{0.5, 0.5}, beta{1.0};
  const double tau = 2.0, sig = 0.5;
  auto kl = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * std::log(x[i] / y[i]) - x[i] + y[i];
    return s;
  };
  const double cost = 0.3 * 0.5 * 1.0 + 0.6 * 0.5 * 2.0;
  const double expect = cost + tau * kl({0.3, 0.6}, alpha) + tau * kl({0.9}, beta) + sig * kl(pi, {0.5, 0.5});
  CHECK(ot_objective(pi, alpha, beta, p, q, tau, sig) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("plans are translation invariant and transpose under swap") {
  const auto p = test::random_points(40, 7, 0, 20);
  const auto q = test::random_points(35, 8, 0, 20);
  const OTParams prm = params(30.0, 2.0, 1e-13, 20000);
  const AssignmentMatrix a = solve_assignment(LabeledCloud(p), LabeledCloud(q), prm);
  REQUIRE(a.converged);

  std::vector<Vec3> ps = p, qs = q;
  const Vec3 d{100.0, -37.5, 12.25};
  for (Vec3& x : ps) x += d;
  for (Vec3& x : qs) x += d;
  const AssignmentMatrix b = solve_assignment(LabeledCloud(ps), LabeledCloud(qs), prm);
  double diff = 0.0;
  for (std::size_t k = 0; k < a.pi.size(); ++k) diff = std::max(diff, std::abs(a.pi[k] - b.pi[k]));
  CHECK(diff <= 1e-9);

  const AssignmentMatrix t = solve_assignment(LabeledCloud(q), LabeledCloud(p), prm);
  REQUIRE(t.converged);
  diff = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) diff = std::max(diff, std::abs(a.at(i, j) - t.at(j, i)));
  CHECK(diff <= 1e-9);
}

TEST_CASE("explicit marginals") {
  const auto p = test::random_points(5, 1), q = test::random_points(4, 2);
  const std::vector<double> alpha{0.1, 0.2, 0.3, 0.2, 0.2}, beta{0.25, 0.25, 0.25, 0.25};
  const AssignmentMatrix a = solve_assignment(LabeledCloud(p), LabeledCloud(q), params(1e6, 50.0), alpha, beta);
  CHECK(a.alpha == alpha);
  const auto rows = a.row_sums();
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i] == doctest::Approx(alpha[i]).epsilon(1e-3));
  const std::vector<double> bad{0.5, 0.5};
  CHECK_THROWS_AS(solve_assignment(LabeledCloud(p), LabeledCloud(q), params(1, 1), bad, beta), InvalidArgument);
  CHECK_THROWS_AS(solve_assignment(LabeledCloud(), LabeledCloud(q), params(1, 1)), InvalidArgument);
}

TEST_CASE("identical points are a legal input") {
  const LabeledCloud p(std::vector<Vec3>(5, Vec3{1, 1, 1})), q(std::vector<Vec3>(3, Vec3{1, 1, 1}));
  const AssignmentMatrix a = solve_assignment(p, q, params(1.0, 0.1));
  CHECK(std::all_of(a.pi.begin(), a.pi.end(), [](double v) { return v > 0.0 && std::isfinite(v); }));
  for (const Vec3& v : displacement(a, p, q).vectors) CHECK(norm(v) < 1e-15);
}

TEST_CASE("displacement") {
  AssignmentMatrix plan;
  plan.rows = 1;
  plan.cols = 2;
  plan.pi = {0.5, 0.5};
  plan.alpha = {1.0};
  plan.beta = {0.5, 0.5};
  const LabeledCloud p({{0, 0, 0}}), q({{1, 0, 0}, {0, 1, 0}});
  CHECK(displacement(plan, p, q).vectors[0] == Vec3{0.5, 0.5, 0});

  // Uniform rows give centroid(Q) − p_i.
  const LabeledCloud pr(test::random_points(4, 3)), qr(test::random_points(6, 4));
  AssignmentMatrix u{4, 6, std::vector<double>(24, 1.0 / 24), std::vector<double>(4, 0.25),
                     std::vector<double>(6, 1.0 / 6)};
  const Vec3 c = centroid(qr.points());
  const DeformationSamples d = displacement(u, pr, qr);
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec3 want = c - pr.point(i);
    CHECK(norm(d.vectors[i] - want) < 1e-12);
    CHECK(d.anchors[i] == pr.point(i));
  }

  AssignmentMatrix zero = u;
  for (std::size_t j = 0; j < 6; ++j) zero.pi[2 * 6 + j] = 0.0;
  try {
    displacement(zero, pr, qr);
    FAIL("expected DegenerateRow");
  } catch (const DegenerateRow& e) {
    CHECK(e.row() == 2);
  }
  CHECK_THROWS_AS(displacement(u, qr, pr), InvalidArgument);
}

TEST_CASE("displaced anchors lie in the target hull") {
  // Support-function oracle: for every probe direction d, d·(p + v) ≤ max_j d·q_j.
  std::mt19937_64 gen(55);
  std::normal_distribution<double> n01;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const LabeledCloud p(test::random_points(12, 500 + s)), q(test::random_points(9, 600 + s, 0, 10));
    const AssignmentMatrix a = solve_assignment(p, q, params(20.0, 5.0));
    const DeformationSamples d = displacement(a, p, q);
    for (int k = 0; k < 500; ++k) {
      const Vec3 dir{n01(gen), n01(gen), n01(gen)};
      double hmax = -1e300;
      for (const Vec3& x : q.points()) hmax = std::max(hmax, dot(dir, x));
      for (std::size_t i = 0; i < p.size(); ++i) CHECK(dot(dir, p.point(i) + d.vectors[i]) <= hmax + 1e-9);
    }
  }
}

TEST_CASE("rbf fit interpolates and matches a dense elimination oracle") {
  DeformationSamples s;
  s.anchors = test::random_points(40, 9, 0, 30);
  s.vectors = test::random_points(40, 10, -5, 5);
  const double h = 6.0;
  const RBFField f = fit_rbf_field(s, h, 0.0);
  const auto at_anchors = eval_field(f, s.anchors);
  for (std::size_t i = 0; i < 40; ++i) CHECK(norm(at_anchors[i] - s.vectors[i]) < 1e-6);

  const std::size_t n = s.anchors.size();
  std::vector<double> k(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      k[a * n + b] = std::exp(-squared_distance(s.anchors[a], s.anchors[b]) / (2 * h * h));
  for (std::size_t comp = 0; comp < 3; ++comp) {
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = s.vectors[i][comp];
    const auto c = gauss_solve(k, rhs);
    double scale = 1.0;
    for (double x : c) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(f.coefficients[i][comp] - c[i]) <= 1e-8 * scale);
  }
}

TEST_CASE("rbf fit meets the residual bound") {
  DeformationSamples s;
  s.anchors = test::random_points(300, 11, 0, 60);
  s.vectors = test::random_points(300, 12, -10, 10);
  const double h = default_bandwidth(s.anchors);
  const RBFField f = fit_rbf_field(s, h, kDefaultRidge);
  double vmax = 0.0;
  for (const Vec3& v : s.vectors) vmax = std::max({vmax, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
  double worst = 0.0;
  for (std::size_t a = 0; a < s.anchors.size(); ++a) {
    long double r[3] = {0, 0, 0};
    for (std::size_t b = 0; b < s.anchors.size(); ++b) {
      long double d2 = 0;
      for (int c = 0; c < 3; ++c) {
        const long double t = static_cast<long double>(s.anchors[a][c]) - s.anchors[b][c];
        d2 += t * t;
      }
      long double kab = std::exp(-d2 / (2.0L * h * h));
      if (a == b) kab += kDefaultRidge;
      for (int c = 0; c < 3; ++c) r[c] += kab * f.coefficients[b][c];
    }
    for (int c = 0; c < 3; ++c) worst = std::max(worst, static_cast<double>(std::abs(r[c] - s.vectors[a][c])));
  }
  CHECK(worst < 1e-8 * std::max(1.0, vmax));
}

TEST_CASE("constant data and the bandwidth default") {
  DeformationSamples s;
  s.anchors = test::random_points(50, 13, 0, 40);
  s.vectors.assign(50, Vec3{3, 0, 0});
  const RBFField f = fit_rbf_field(s, 5.0, 0.0);
  for (const Vec3& v : eval_field(f, s.anchors)) CHECK(norm(v - Vec3{3, 0, 0}) < 1e-6);

  const std::vector<Vec3> grid{{0, 0, 0}, {2, 0, 0}, {5, 0, 0}};
  CHECK(default_bandwidth(grid) == doctest::Approx(4.0 * (2 + 2 + 3) / 3.0));
}

TEST_CASE("rbf errors") {
  DeformationSamples dup;
  dup.anchors = {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
  dup.vectors = {{1, 0, 0}, {2, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(fit_rbf_field(dup, 1.0, 0.0), IllConditioned);
  CHECK_NOTHROW(fit_rbf_field(dup, 1.0, 1e-3));
  CHECK_THROWS_AS(fit_rbf_field(dup, 0.0, 1e-3), InvalidArgument);
  DeformationSamples mismatch;
  mismatch.anchors = {{0, 0, 0}};
  CHECK_THROWS_AS(fit_rbf_field(mismatch, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("ridge shrinks the coefficients") {
  DeformationSamples s;
  s.anchors = test::random_points(80, 14, 0, 40);
  s.vectors = test::random_points(80, 15, -3, 3);
  double prev = std::numeric_limits<double>::infinity();
  for (double ridge : {0.0, 1e-6, 1e-3, 1e-1, 1.0, 10.0}) {
    const RBFField f = fit_rbf_field(s, 8.0, ridge);
    double n2 = 0.0;
    for (const Vec3& c : f.coefficients) n2 += dot(c, c);
    CHECK(std::sqrt(n2) <= prev * (1 + 1e-12));
    prev = std::sqrt(n2);
  }
}

TEST_CASE("eval_field against a double loop") {
  RBFField f;
  f.centers = test::random_points(30, 16, 0, 20);
  f.coefficients = test::random_points(30, 17, -2, 2);
  f.bandwidth = 4.5;
  const auto q = test::random_points(25, 18, -5, 25);
  const auto got = eval_field(f, q);
  for (std::size_t i = 0; i < q.size(); ++i) {
    Vec3 s{};
    for (std::size_t k = 0; k < f.centers.size(); ++k)
      s += f.coefficients[k] * std::exp(-squared_distance(q[i], f.centers[k]) / (2 * f.bandwidth * f.bandwidth));
    CHECK(norm(got[i] - s) <= 1e-12);
  }
  // Far queries decay to zero.
  const Vec3 far = f.centers[0] + Vec3{12 * f.bandwidth + 40, 0, 0};
  const RBFField single{{f.centers[0]}, {{1, 1, 1}}, f.bandwidth, 0.0};
  CHECK(norm(eval_field(single, std::vector<Vec3>{far})[0]) < 1e-9);
  const DeformationSamples ds = eval_field(f, LabeledCloud(q));
  CHECK(ds.anchors == q);
}

TEST_CASE("deform_template") {
  const LabeledCloud t = test::random_cloud(100, 19);
  RBFField zero{std::vector<Vec3>(t.points().begin(), t.points().end()), std::vector<Vec3>(100), 5.0, 0.0};
  const LabeledCloud same = deform_template(t, zero);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(same.point(i) == t.point(i));

  DeformationSamples s{std::vector<Vec3>(t.points().begin(), t.points().end()), std::vector<Vec3>(100, Vec3{1, 2, 3})};
  const RBFField shift = fit_rbf_field(s, 10.0, 0.0);
  const LabeledCloud moved = deform_template(t, shift);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(norm(moved.point(i) - (t.point(i) + Vec3{1, 2, 3})) < 1e-6);
    CHECK(moved.label(i) == t.label(i));
  }
}

}  // TEST_SUITE
