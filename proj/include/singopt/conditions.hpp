#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "singopt/geometry.hpp"
#include "singopt/problems.hpp"

namespace singopt {

/// Sampling region: a geodesic annulus around `center`. Samples with
/// f - f_star below eps_f (or distance below sqrt(eps_f), for the
/// distance-based estimators) are excluded to avoid 0/0 ratios on S.
struct RegionSpec {
  Point center;
  double r_inner{0.0};
  double r_outer{0.0};
  int n_samples{1000};
  std::uint64_t seed{0};
  double eps_f{1e-14};
};

enum class ConditionKind { PL, EB, QG, RSI, Loja };

const char* condition_kind_name(ConditionKind k);

struct ConditionEstimate {
  ConditionKind kind{ConditionKind::PL};
  double mu_hat{0.0};
  std::optional<double> theta_hat;  // present for kind == Loja
  Point argmin_sample;
  int n_used{0};
};

struct MBReport {
  Point anchor;
  Eigen::VectorXd eigenvalues;  // descending, intrinsic tangent coordinates
  int numerical_rank_d{0};
  double mu_mb{0.0};  // smallest eigenvalue above the rank threshold
  int kernel_dim{0};
  bool rank_constant_along_S{false};
  // Largest principal angle between the Hessian kernel and the sampled
  // tangent directions of S; 0 when dim_S = 0, NaN when not measurable.
  double tangent_alignment_err{0.0};
};

/// mu_hat = inf ||grad f||^2 / (2 (f - f_star)) over the annulus.
ConditionEstimate estimate_pl(const Problem& p, const RegionSpec& region,
                              std::optional<double> f_star_override = std::nullopt);

/// mu_hat = inf ||grad f|| / dist(x, S).
ConditionEstimate estimate_eb(const Problem& p, const RegionSpec& region);

/// mu_hat = inf 2 (f - f_star) / dist(x, S)^2.
ConditionEstimate estimate_qg(const Problem& p, const RegionSpec& region);

/// mu_hat = inf <grad f(x), -log_x(proj_S(x))> / dist(x, S)^2.
ConditionEstimate estimate_rsi(const Problem& p, const RegionSpec& region);

/// Least-squares fit of log ||grad f|| = theta log(f - f_star) + 0.5 log(2 mu);
/// theta_hat is clamped to [0, 1).
ConditionEstimate fit_loja_exponent(const Problem& p, const RegionSpec& region,
                                    std::optional<double> f_star_override = std::nullopt);

/// Hessian spectrum structure at an anchor on S, with rank constancy probed at
/// n_probe nearby points of S (projections of random perturbations).
MBReport check_mb(const Problem& p, const Point& anchor, int n_probe,
                  double probe_radius = 1e-2, std::uint64_t seed = 0);

struct ImplicationEdge {
  std::string name;
  double lhs{0.0};
  double rhs{0.0};
  bool pass{false};
};

struct ImplicationTable {
  std::vector<ImplicationEdge> edges;
  bool all_pass{false};
};

/// Cross-checks the estimated constants against the implication graph between
/// the four conditions, with multiplicative slack (default 0.9) standing in
/// for "constants arbitrarily close under neighborhood shrinkage".
ImplicationTable verify_implications(const std::vector<ConditionEstimate>& estimates,
                                     const MBReport& mb, double slack = 0.9);

/// Uniform samples from the annulus (exposed for tests).
std::vector<Point> sample_annulus(const RegionSpec& region);

}  // namespace singopt
