#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "singopt/geometry.hpp"

namespace singopt {

enum class Smoothness { C1, C2, Analytic };

/// Closed-form (or numerically tight) description of the set S of local
/// minima sharing the optimal value around an anchor minimum.
struct SolutionSetOracle {
  double f_star{0.0};
  std::function<double(const Point&)> dist_to_S;
  std::function<Point(const Point&)> project_to_S;
  int dim_S{0};
  // Expected rank of the Hessian on S; -1 when the problem is only C1.
  int hessian_rank_d{-1};
  bool solution_set_is_manifold{true};
};

/// A benchmark objective with analytic derivatives given in ambient
/// coordinates. `gradient` and `hessian` return Riemannian quantities: on the
/// sphere the gradient is projected onto the tangent space and the Hessian
/// carries the curvature correction term.
struct Problem {
  std::string name;
  ManifoldDescriptor manifold;
  Smoothness smoothness{Smoothness::C2};
  std::optional<SolutionSetOracle> oracle;

  std::function<double(const Eigen::VectorXd&)> f_raw;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_raw;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess_raw;  // null for C1 problems

  bool has_hessian() const { return static_cast<bool>(hess_raw); }
  double value(const Point& x) const;
  Tangent gradient(const Point& x) const;
  /// Symmetric operator on T_x M in ambient coordinates; on the sphere it
  /// annihilates the normal direction. Throws std::logic_error for C1 problems.
  Eigen::MatrixXd hessian(const Point& x) const;
  /// Distance to S through the oracle; NaN when no oracle is attached.
  double dist_S(const Point& x) const;
};

struct ProblemSpec {
  std::string name;
  std::map<std::string, double> params;
  std::uint64_t seed{0};
};

/// Instantiates a catalog problem. Generated instances (overparam_regression,
/// burer_monteiro) are deterministic in the seed.
Problem build_problem(const ProblemSpec& spec);

/// f(x) = 0.5 * sum_i c_i x_i^2 on R^n with c_i >= 0; S is the span of the
/// zero-curvature axes. Backs `aniso_quad` and ad-hoc quadratic tests.
Problem make_diag_quadratic(const Eigen::VectorXd& curvatures,
                            std::string name = "diag_quad");

struct EvalBundle {
  double f;
  Tangent grad;
  Eigen::MatrixXd hess;  // empty when not requested
};

/// Single-pass evaluation. Requesting the Hessian of a C1 problem throws.
EvalBundle eval_bundle(const Problem& p, const Point& x, bool with_hessian = true);

struct DerivativeReport {
  double max_rel_err_grad{0.0};
  double max_rel_err_hess{0.0};  // 0 when the problem has no Hessian
  bool pass{false};
};

/// Central-difference check of grad (and hess when present) at x.
/// Requires h in [1e-8, 1e-2]; passes iff both errors are <= 1e-4.
DerivativeReport check_derivatives(const Problem& p, const Point& x, double h);

}  // namespace singopt
