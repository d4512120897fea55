#pragma once

#include <Eigen/Core>

namespace singopt {

/// Local model data in orthonormal tangent coordinates: gradient g and a
/// symmetric operator H of matching dimension.
struct ModelData {
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  int dim{0};
};

ModelData make_model_data(Eigen::VectorXd g, Eigen::MatrixXd H);

/// Global solution of min m(s) = <g,s> + 0.5 <s,Hs> over ||s|| <= delta,
/// with the KKT multiplier and boundary/hard-case flags.
struct TrsSolution {
  Eigen::VectorXd s;
  double lambda{0.0};
  bool on_boundary{false};
  bool hard_case{false};
};

enum class CubicMode { ExactSecular, InexactGradient };

/// Result of minimizing <g,s> + 0.5 <s,Hs> + (sigma/3) ||s||^3, carrying the
/// certificates for the inexactness conditions: model decrease and
/// ||grad m(s)|| <= kappa ||s|| ||g||.
struct CubicSolution {
  Eigen::VectorXd s;
  double model_value{0.0};      // m(s) - m(0)
  double model_grad_norm{0.0};  // ||g + Hs + sigma ||s|| s||
  int inner_iters{0};
  CubicMode mode{CubicMode::ExactSecular};
  bool decrease_ok{false};
  bool gradient_cond_ok{false};
};

/// Pseudo-inverse Newton step -H^+ g; eigenvalues with magnitude below
/// rank_tol * ||H|| are truncated.
Eigen::VectorXd newton_step(const ModelData& md, double rank_tol);

/// Minimizer of the quadratic model along -g within the radius.
Eigen::VectorXd cauchy_step(const ModelData& md, double delta);

/// Dense exact trust-region subproblem solver (secular equation with the
/// hard case). `tol` is the absolute tolerance of the secular root.
TrsSolution solve_trs_exact(const ModelData& md, double delta, double tol = 1e-12);

/// Steihaug-Toint truncated conjugate gradients. Stops on boundary crossing,
/// negative curvature, or residual <= ||g|| min(kappa_tcg, ||g||^theta_tcg).
Eigen::VectorXd solve_trs_tcg(const ModelData& md, double delta, double kappa_tcg,
                              double theta_tcg, int max_iter);

CubicSolution solve_cubic(const ModelData& md, double sigma, double kappa, CubicMode mode);

/// Step-norm bound sqrt(3||g||/sigma) + (3/(2 sigma)) max(0, beta_h ||g|| - lambda_min(H))
/// satisfied by every cubic model minimizer with nonpositive model value.
double cubic_step_norm_bound(double grad_norm, double sigma, double lambda_min_h,
                             double beta_h = 0.0);

}  // namespace singopt
