#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "s2m/geometry.hpp"

namespace s2m {

/// Robust (unbalanced, entropic) optimal-transport parameters. Units are mm².
struct OTParams {
  double tau_sq = 1.0;    ///< marginal relaxation weight τ²; +inf gives balanced OT
  double sigma_sq = 0.01; ///< entropic blur σ²
  int max_iter = 1000;
  double tol = 1e-6;      ///< convergence threshold on the max dual update
  /// Geometric ε-annealing ratio in (0, 1): the blur starts at the squared
  /// half-diameter of the clouds and shrinks by this factor per iteration
  /// until it reaches sigma_sq. 0 disables annealing.
  double anneal = 0.7;

  void validate() const;

  /// τ² = (0.1·diag)², σ² = (0.01·diag)² for the joint bbox diagonal.
  static OTParams defaults_for(const Aabb& box);
};

/// Dense N×M plan with marginal references and solver diagnostics.
struct AssignmentMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pi;  ///< row-major
  std::vector<double> alpha;
  std::vector<double> beta;
  int iterations_used = 0;
  bool converged = false;
  double final_update = 0.0;
  double objective = 0.0;

  double at(std::size_t i, std::size_t j) const { return pi[i * cols + j]; }
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  double total_mass() const;
};

/// Plans larger than this many entries are rejected.
inline constexpr std::size_t kMaxPlanEntries = 50'000'000;

/// Solve
///   min_Π  Σ π_ij·½‖p_i − q_j‖² + τ²·KL(Π1 ‖ α) + τ²·KL(Πᵀ1 ‖ β) + σ²·KL(Π ‖ α⊗β)
/// with alternating log-domain scaling and marginal exponent τ²/(τ² + ε).
/// Uniform α, β. Non-convergence is reported through `converged`, not thrown.
AssignmentMatrix solve_assignment(const LabeledCloud& reference, const LabeledCloud& target, const OTParams& params);
AssignmentMatrix solve_assignment(const LabeledCloud& reference, const LabeledCloud& target, const OTParams& params,
                                  std::span<const double> alpha, std::span<const double> beta);

/// Primal objective of an arbitrary nonnegative plan (generalized KL terms).
double ot_objective(std::span<const double> pi, std::span<const double> alpha, std::span<const double> beta,
                    std::span<const Vec3> reference, std::span<const Vec3> target, double tau_sq, double sigma_sq);

/// Σ π_ij·½‖p_i − q_j‖².
double transport_cost(const AssignmentMatrix& plan, std::span<const Vec3> reference, std::span<const Vec3> target);

struct DeformationSamples {
  std::vector<Vec3> anchors;
  std::vector<Vec3> vectors;

  void validate() const;
};

/// v_i = Σ_j π_ij (q_j − p_i) / Σ_j π_ij. A row without mass throws DegenerateRow.
DeformationSamples displacement(const AssignmentMatrix& plan, const LabeledCloud& reference,
                                const LabeledCloud& target);

/// Gaussian-kernel spline: v(x) = Σ_k c_k·exp(−‖x − p_k‖² / (2h²)).
struct RBFField {
  std::vector<Vec3> centers;
  std::vector<Vec3> coefficients;
  double bandwidth = 1.0;
  double ridge = 0.0;

  void validate() const;
};

/// Mean nearest-neighbour distance among anchors, times 4.
double default_bandwidth(std::span<const Vec3> anchors);
inline constexpr double kDefaultRidge = 1e-8;
inline constexpr std::size_t kMaxRbfCenters = 20'000;

/// Solve (K + ridge·I)·C = V per component. Throws IllConditioned on duplicate
/// anchors with ridge 0, or when the residual bound
/// ‖(K + ridge·I)C − V‖∞ < 1e-8·max(1, ‖V‖∞) cannot be met.
RBFField fit_rbf_field(const DeformationSamples& samples, double bandwidth, double ridge);

/// Field value at each query point; anchors of the result are the queries.
DeformationSamples eval_field(const RBFField& field, const LabeledCloud& query);
std::vector<Vec3> eval_field(const RBFField& field, std::span<const Vec3> query);

/// p → p + v(p); labels copied index for index.
LabeledCloud deform_template(const LabeledCloud& tmpl, const RBFField& field);

}  // namespace s2m
