#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "singopt/geometry.hpp"
#include "singopt/problems.hpp"
#include "singopt/subsolvers.hpp"

namespace singopt {

enum class Algorithm { GD, Newton, ARC, RTR };
enum class GDStepMode { Constant, Armijo };
enum class RtrSubsolver { Cauchy, Exact, Tcg };

const char* algorithm_name(Algorithm a);

struct GDOptions {
  GDStepMode mode{GDStepMode::Constant};
  double gamma{0.0};  // required in constant mode
  double alpha_bar{1.0};
  double beta{0.5};
  double sigma_armijo{0.1};
};

struct NewtonOptions {
  double rank_tol{1e-14};
};

struct ArcOptions {
  double sigma0{1.0};
  double sigma_min{1e-6};
  double rho_c{0.1};
  double gamma_inc{2.0};
  double gamma_dec{0.5};
  double kappa{0.1};
  // When positive, the Hessian handed to the subproblem is perturbed by a
  // random symmetric matrix of norm beta_h_budget * ||grad f||.
  double beta_h_budget{0.0};
  std::uint64_t perturb_seed{0};
  CubicMode subsolver{CubicMode::ExactSecular};
};

struct RtrOptions {
  double delta0{1.0};
  double delta_bar{16.0};
  double rho_prime{0.1};
  RtrSubsolver subsolver{RtrSubsolver::Cauchy};
  double kappa_tcg{0.1};
  double theta_tcg{1.0};
  int tcg_max_iter{0};  // <= 0 means 2 * dim
};

struct SolverConfig {
  Algorithm algorithm{Algorithm::GD};
  GDOptions gd;
  NewtonOptions newton;
  ArcOptions arc;
  RtrOptions rtr;
  double grad_tol{1e-12};
  int max_iters{500};
  bool record_points{false};
  std::string name;  // defaults to the algorithm name
};

void validate(const SolverConfig& cfg);

enum class Termination { GradTol, MaxIters, Stall, Diverged };

const char* termination_name(Termination t);

/// One row per iterate. Rows 0..K-1 describe the iterate plus the step
/// attempted from it; the last row is the final iterate with NaN step fields.
/// `reg` holds the regularization state (sigma for ARC, Delta for RTR, the
/// accepted step size for GD, NaN for Newton).
struct IterRecord {
  int k{0};
  double f{0.0};
  double grad_norm{0.0};
  double dist_S{0.0};  // NaN without an oracle
  double step_norm{0.0};
  double ratio{0.0};
  double reg{0.0};
  bool accepted{true};
  std::optional<Point> x;
};

struct Trace {
  std::vector<IterRecord> rows;
  Termination termination{Termination::MaxIters};
  Point final_point;
  std::string solver_name;
  double grad_tol{1e-12};

  int iterations() const { return static_cast<int>(rows.size()) - 1; }
  std::vector<double> dist_sequence() const;
  std::vector<double> grad_norm_sequence() const;
  std::vector<double> f_sequence() const;
};

Trace run_gd(const Problem& p, const Point& x0, const SolverConfig& cfg);
Trace run_newton(const Problem& p, const Point& x0, const SolverConfig& cfg);
Trace run_arc(const Problem& p, const Point& x0, const SolverConfig& cfg);
Trace run_rtr(const Problem& p, const Point& x0, const SolverConfig& cfg);

/// Dispatch on cfg.algorithm.
Trace run_solver(const Problem& p, const Point& x0, const SolverConfig& cfg);

}  // namespace singopt
