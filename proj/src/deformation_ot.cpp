#include "s2m/deformation_ot.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "s2m/error.hpp"
#include "s2m/kernels.hpp"

namespace s2m {

void OTParams::validate() const {
  if (!(tau_sq >= 0.0)) throw InvalidArgument("tau_sq must be >= 0");
  if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) throw InvalidArgument("sigma_sq must be finite and > 0");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
  if (!(anneal >= 0.0 && anneal < 1.0)) throw InvalidArgument("anneal must be in [0, 1)");
}

OTParams OTParams::defaults_for(const Aabb& box) {
  const double d = box.diagonal();
  OTParams p;
  p.tau_sq = (0.1 * d) * (0.1 * d);
  p.sigma_sq = (0.01 * d) * (0.01 * d);
  return p;
}

std::vector<double> AssignmentMatrix::row_sums() const {
  std::vector<double> s(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) s[i] += pi[i * cols + j];
  return s;
}

std::vector<double> AssignmentMatrix::col_sums() const {
  std::vector<double> s(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) s[j] += pi[i * cols + j];
  return s;
}

double AssignmentMatrix::total_mass() const {
  double s = 0.0;
  for (double v : pi) s += v;
  return s;
}

namespace {

void check_marginal(std::span<const double> w, std::size_t n, const char* what) {
  if (w.size() != n) throw InvalidArgument(std::string(what) + " length does not match its cloud");
  double s = 0.0;
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be strictly positive");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw InvalidArgument(std::string(what) + " must sum to 1");
}

// Generalized KL(a ‖ b) = Σ a log(a/b) − a + b, with 0·log 0 = 0.
double kl_term(double a, double b) { return (a > 0.0 ? a * std::log(a / b) : 0.0) - a + b; }

double marginal_damping(double tau_sq, double eps) {
  if (std::isinf(tau_sq)) return 1.0;
  return tau_sq / (tau_sq + eps);
}

}  // namespace

double ot_objective(std::span<const double> pi, std::span<const double> alpha, std::span<const double> beta,
                    std::span<const Vec3> reference, std::span<const Vec3> target, double tau_sq, double sigma_sq) {
  const std::size_t n = reference.size(), m = target.size();
  if (pi.size() != n * m || alpha.size() != n || beta.size() != m) {
    throw InvalidArgument("ot_objective: dimension mismatch");
  }
  double cost = 0.0, entropy = 0.0;
  std::vector<double> rows(n, 0.0), cols(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = pi[i * m + j];
      cost += p * 0.5 * squared_distance(reference[i], target[j]);
      entropy += kl_term(p, alpha[i] * beta[j]);
      rows[i] += p;
      cols[j] += p;
    }
  }
  double marginals = 0.0;
  if (std::isfinite(tau_sq)) {
    for (std::size_t i = 0; i < n; ++i) marginals += kl_term(rows[i], alpha[i]);
    for (std::size_t j = 0; j < m; ++j) marginals += kl_term(cols[j], beta[j]);
    marginals *= tau_sq;
  }
  return cost + marginals + sigma_sq * entropy;
}

AssignmentMatrix solve_assignment(const LabeledCloud& reference, const LabeledCloud& target, const OTParams& params) {
  const std::vector<double> alpha(reference.size(), 1.0 / static_cast<double>(reference.size()));
  const std::vector<double> beta(target.size(), 1.0 / static_cast<double>(target.size()));
  return solve_assignment(reference, target, params, alpha, beta);
}

AssignmentMatrix solve_assignment(const LabeledCloud& reference, const LabeledCloud& target, const OTParams& params,
                                  std::span<const double> alpha, std::span<const double> beta) {
  params.validate();
  if (reference.empty() || target.empty()) throw InvalidArgument("solve_assignment: empty cloud");
  const std::size_t n = reference.size(), m = target.size();
  if (n > kMaxPlanEntries / m) {
    throw InvalidArgument("solve_assignment: " + std::to_string(n) + "x" + std::to_string(m) +
                          " plan exceeds the dense limit of " + std::to_string(kMaxPlanEntries) + " entries");
  }
  check_marginal(alpha, n, "alpha");
  check_marginal(beta, m, "beta");

  const auto p = reference.points();
  const auto q = target.points();
  std::vector<double> log_a(n), log_b(m);
  std::transform(alpha.begin(), alpha.end(), log_a.begin(), [](double v) { return std::log(v); });
  std::transform(beta.begin(), beta.end(), log_b.begin(), [](double v) { return std::log(v); });

  // Annealing starts at the squared half-diameter of the joint cloud, where
  // the kernel is nearly flat.
  const double half_diam = 0.5 * joint_bounds(reference, target).diagonal();
  const double eps_start = params.anneal > 0.0 ? std::max(params.sigma_sq, half_diam * half_diam) : params.sigma_sq;

  std::vector<double> f(n, 0.0), g(m, 0.0), f_next(n), g_next(m);
  AssignmentMatrix out;
  out.rows = n;
  out.cols = m;
  out.alpha.assign(alpha.begin(), alpha.end());
  out.beta.assign(beta.begin(), beta.end());
  out.final_update = std::numeric_limits<double>::infinity();

  double eps = eps_start;
  for (int it = 1; it <= params.max_iter; ++it) {
    const bool final_stage = eps <= params.sigma_sq;
    const double damping = marginal_damping(params.tau_sq, eps);
    kernels::omp::softmin(p, q, log_b, g, eps, damping, f_next);
    kernels::omp::softmin(q, p, log_a, f_next, eps, damping, g_next);

    double update = 0.0;
    for (std::size_t i = 0; i < n; ++i) update = std::max(update, std::abs(f_next[i] - f[i]));
    for (std::size_t j = 0; j < m; ++j) update = std::max(update, std::abs(g_next[j] - g[j]));
    f.swap(f_next);
    g.swap(g_next);
    out.iterations_used = it;

    if (final_stage) {
      out.final_update = update;
      if (update < params.tol) {
        out.converged = true;
        break;
      }
    } else {
      eps = std::max(params.sigma_sq, eps * params.anneal);
    }
  }

  out.pi.resize(n * m);
  kernels::omp::plan_entries(p, q, log_a, log_b, f, g, eps, out.pi);
  out.objective = ot_objective(out.pi, out.alpha, out.beta, p, q, params.tau_sq, params.sigma_sq);
  return out;
}

double transport_cost(const AssignmentMatrix& plan, std::span<const Vec3> reference, std::span<const Vec3> target) {
  if (plan.rows != reference.size() || plan.cols != target.size()) {
    throw InvalidArgument("transport_cost: plan does not match clouds");
  }
  double c = 0.0;
  for (std::size_t i = 0; i < plan.rows; ++i)
    for (std::size_t j = 0; j < plan.cols; ++j) c += plan.at(i, j) * 0.5 * squared_distance(reference[i], target[j]);
  return c;
}

// ---------------------------------------------------------------------------

void DeformationSamples::validate() const {
  if (anchors.size() != vectors.size()) throw InvalidArgument("anchors and vectors differ in length");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!is_finite(anchors[i]) || !is_finite(vectors[i])) {
      throw InvalidArgument("non-finite deformation sample " + std::to_string(i));
    }
  }
}

DeformationSamples displacement(const AssignmentMatrix& plan, const LabeledCloud& reference,
                                const LabeledCloud& target) {
  if (plan.rows != reference.size() || plan.cols != target.size() || plan.pi.size() != plan.rows * plan.cols) {
    throw InvalidArgument("displacement: plan dimensions do not match the clouds");
  }
  const auto p = reference.points();
  const auto q = target.points();
  DeformationSamples out;
  out.anchors.assign(p.begin(), p.end());
  out.vectors.resize(p.size());
  for (std::size_t i = 0; i < plan.rows; ++i) {
    double mass = 0.0;
    Vec3 acc{};
    for (std::size_t j = 0; j < plan.cols; ++j) {
      const double w = plan.at(i, j);
      mass += w;
      acc += w * (q[j] - p[i]);
    }
    if (!(mass > 0.0)) throw DegenerateRow(i, "plan row " + std::to_string(i) + " has zero mass");
    out.vectors[i] = acc * (1.0 / mass);
  }
  return out;
}

// ---------------------------------------------------------------------------

void RBFField::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidArgument("RBF bandwidth must be > 0");
  if (!(ridge >= 0.0)) throw InvalidArgument("RBF ridge must be >= 0");
  if (centers.size() != coefficients.size()) throw InvalidArgument("RBF centers/coefficients length mismatch");
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (!is_finite(centers[k]) || !is_finite(coefficients[k])) {
      throw InvalidArgument("non-finite RBF row " + std::to_string(k));
    }
  }
}

double default_bandwidth(std::span<const Vec3> anchors) {
  if (anchors.size() < 2) throw InvalidArgument("default_bandwidth needs at least two anchors");
  const long n = static_cast<long>(anchors.size());
  std::vector<double> nearest(anchors.size());
#pragma omp parallel for schedule(static)
  for (long a = 0; a < n; ++a) {
    double best = std::numeric_limits<double>::infinity();
    for (long b = 0; b < n; ++b) {
      if (a != b) best = std::min(best, squared_distance(anchors[a], anchors[b]));
    }
    nearest[a] = std::sqrt(best);
  }
  double mean = 0.0;
  for (double d : nearest) mean += d;
  mean /= static_cast<double>(n);
  if (!(mean > 0.0)) throw InvalidArgument("default_bandwidth: all anchors coincide");
  return 4.0 * mean;
}

namespace {

constexpr double kResidualBound = 1e-8;
constexpr int kMaxRefinements = 8;

// (K·C − V) with the kernel itself evaluated in long double, so the residual
// is measured against the exact Gaussian rather than its rounded copy.
Eigen::MatrixXd extended_residual(std::span<const Vec3> anchors, double bandwidth, double ridge, const Eigen::MatrixXd& c,
                                  const Eigen::MatrixXd& v) {
  Eigen::MatrixXd r(v.rows(), v.cols());
  const Eigen::Index n = static_cast<Eigen::Index>(anchors.size());
  const long double inv = 1.0L / (2.0L * static_cast<long double>(bandwidth) * bandwidth);
#pragma omp parallel for schedule(static)
  for (Eigen::Index a = 0; a < n; ++a) {
    long double acc[3] = {0.0L, 0.0L, 0.0L};
    const Vec3& pa = anchors[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < n; ++b) {
      const Vec3& pb = anchors[static_cast<std::size_t>(b)];
      const long double dx = static_cast<long double>(pa.x) - pb.x, dy = static_cast<long double>(pa.y) - pb.y,
                        dz = static_cast<long double>(pa.z) - pb.z;
      long double kab = std::exp(-(dx * dx + dy * dy + dz * dz) * inv);
      if (a == b) kab += ridge;
      for (Eigen::Index d = 0; d < v.cols(); ++d) acc[d] += kab * c(b, d);
    }
    for (Eigen::Index d = 0; d < v.cols(); ++d) r(a, d) = static_cast<double>(acc[d] - v(a, d));
  }
  return r;
}

}  // namespace

RBFField fit_rbf_field(const DeformationSamples& samples, double bandwidth, double ridge) {
  samples.validate();
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidArgument("bandwidth must be > 0");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InvalidArgument("ridge must be >= 0");
  const std::size_t k = samples.anchors.size();
  if (k == 0) throw InvalidArgument("fit_rbf_field: no samples");
  if (k > kMaxRbfCenters) throw InvalidArgument("fit_rbf_field: too many anchors for a dense solve");

  if (ridge == 0.0) {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b)
        if (samples.anchors[a] == samples.anchors[b]) {
          throw IllConditioned("duplicate anchors " + std::to_string(a) + " and " + std::to_string(b) +
                               " with zero ridge");
        }
  }

  Eigen::MatrixXd gram(k, k);  // symmetric, so storage order is irrelevant
  kernels::omp::gaussian_gram(samples.anchors, bandwidth, ridge, std::span<double>(gram.data(), k * k));
  Eigen::MatrixXd rhs(k, 3);
  for (std::size_t a = 0; a < k; ++a) {
    rhs(a, 0) = samples.vectors[a].x;
    rhs(a, 1) = samples.vectors[a].y;
    rhs(a, 2) = samples.vectors[a].z;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  std::optional<Eigen::FullPivLU<Eigen::MatrixXd>> lu;
  if (llt.info() != Eigen::Success) {
    lu.emplace(gram);
    if (!lu->isInvertible()) throw IllConditioned("Gaussian kernel system is singular");
  }
  const auto solve = [&](const Eigen::MatrixXd& b) -> Eigen::MatrixXd {
    if (lu) return lu->solve(b);
    return llt.solve(b);
  };
  Eigen::MatrixXd coef = solve(rhs);
  // Gaussian systems are stiff: refine against a residual accumulated in
  // extended precision until it stops shrinking.
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  Eigen::MatrixXd res = extended_residual(samples.anchors, bandwidth, ridge, coef, rhs);
  double residual = res.cwiseAbs().maxCoeff();
  for (int step = 0; step < kMaxRefinements && residual >= 0.01 * kResidualBound * scale; ++step) {
    const Eigen::MatrixXd trial = coef - solve(res);
    Eigen::MatrixXd trial_res = extended_residual(samples.anchors, bandwidth, ridge, trial, rhs);
    const double r = trial_res.cwiseAbs().maxCoeff();
    if (!(r < residual)) break;
    coef = trial;
    res = std::move(trial_res);
    residual = r;
  }
  if (!std::isfinite(residual) || residual >= kResidualBound * scale) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "Gaussian kernel system residual %.3e exceeds %.3e (bandwidth %.4g mm, ridge %.3g)",
                  residual, kResidualBound * scale, bandwidth, ridge);
    throw IllConditioned(msg);
  }

  RBFField field;
  field.centers = samples.anchors;
  field.coefficients.resize(k);
  for (std::size_t a = 0; a < k; ++a) field.coefficients[a] = {coef(a, 0), coef(a, 1), coef(a, 2)};
  field.bandwidth = bandwidth;
  field.ridge = ridge;
  return field;
}

std::vector<Vec3> eval_field(const RBFField& field, std::span<const Vec3> query) {
  field.validate();
  std::vector<Vec3> out(query.size());
  kernels::omp::gaussian_eval(field.centers, field.coefficients, field.bandwidth, query, out);
  return out;
}

DeformationSamples eval_field(const RBFField& field, const LabeledCloud& query) {
  DeformationSamples out;
  out.anchors.assign(query.points().begin(), query.points().end());
  out.vectors = eval_field(field, query.points());
  return out;
}

LabeledCloud deform_template(const LabeledCloud& tmpl, const RBFField& field) {
  const std::vector<Vec3> v = eval_field(field, tmpl.points());
  std::vector<Vec3> moved(tmpl.points().begin(), tmpl.points().end());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += v[i];
  return tmpl.with_points(std::move(moved));
}

}  // namespace s2m
