#include "singopt/solvers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "singopt/errors.hpp"

namespace singopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Recorder {
  Trace trace;
  const Problem* problem;
  bool record_points;

  void step_row(int k, const Point& x, double f, double gn, double step_norm, double ratio,
                double reg, bool accepted) {
    IterRecord r;
    r.k = k;
    r.f = f;
    r.grad_norm = gn;
    r.dist_S = problem->dist_S(x);
    r.step_norm = step_norm;
    r.ratio = ratio;
    r.reg = reg;
    r.accepted = accepted;
    if (record_points) r.x = x;
    trace.rows.push_back(std::move(r));
  }

  Trace finish(int k, const Point& x, double reg, Termination why) {
    IterRecord r;
    r.k = k;
    r.f = problem->value(x);
    r.grad_norm = problem->gradient(x).norm();
    r.dist_S = problem->dist_S(x);
    r.step_norm = kNaN;
    r.ratio = kNaN;
    r.reg = reg;
    r.accepted = true;
    if (record_points) r.x = x;
    trace.rows.push_back(std::move(r));
    trace.termination = why;
    trace.final_point = x;
    return std::move(trace);
  }
};

// Local model in orthonormal tangent coordinates. For Euclidean manifolds the
// basis is the identity and is skipped.
struct LocalModel {
  ModelData md;
  MatrixXd basis;  // empty for Euclidean
  bool euclidean{true};

  Tangent step_to_tangent(const Point& x, const VectorXd& s) const {
    if (euclidean) return make_tangent(x, s);
    return make_tangent(x, (basis * s).eval());
  }
};

LocalModel build_local_model(const Problem& p, const Point& x, const Tangent& grad) {
  LocalModel lm;
  lm.euclidean = x.manifold.kind == ManifoldKind::Euclidean;
  if (lm.euclidean) {
    lm.md = make_model_data(grad.vec, p.hessian(x));
  } else {
    lm.basis = tangent_basis(x);
    lm.md = make_model_data((lm.basis.transpose() * grad.vec).eval(),
                            (lm.basis.transpose() * p.hessian(x) * lm.basis).eval());
  }
  return lm;
}

// Random symmetric matrix with unit spectral norm, for the perturbed-Hessian
// test mode.
MatrixXd unit_symmetric_noise(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  MatrixXd w = (a + a.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(w);
  const double spectral = es.eigenvalues().cwiseAbs().maxCoeff();
  if (spectral > 0.0) w /= spectral;
  return w;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::GD: return "gd";
    case Algorithm::Newton: return "newton";
    case Algorithm::ARC: return "arc";
    case Algorithm::RTR: return "rtr";
  }
  return "?";
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::GradTol: return "grad_tol";
    case Termination::MaxIters: return "max_iters";
    case Termination::Stall: return "stall";
    case Termination::Diverged: return "diverged";
  }
  return "?";
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.grad_tol > 0.0)) throw std::invalid_argument("SolverConfig: grad_tol must be positive");
  if (cfg.max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
  switch (cfg.algorithm) {
    case Algorithm::GD:
      if (cfg.gd.mode == GDStepMode::Constant && !(cfg.gd.gamma > 0.0)) {
        throw std::invalid_argument("SolverConfig: constant-step GD needs gamma > 0");
      }
      if (!(cfg.gd.alpha_bar > 0.0) || !(cfg.gd.beta > 0.0 && cfg.gd.beta < 1.0) ||
          !(cfg.gd.sigma_armijo > 0.0 && cfg.gd.sigma_armijo < 1.0)) {
        throw std::invalid_argument("SolverConfig: invalid Armijo parameters");
      }
      break;
    case Algorithm::Newton:
      if (!(cfg.newton.rank_tol > 0.0)) {
        throw std::invalid_argument("SolverConfig: Newton rank_tol must be positive");
      }
      break;
    case Algorithm::ARC: {
      const auto& a = cfg.arc;
      if (!(a.sigma0 > 0.0) || !(a.sigma_min > 0.0) || !(a.rho_c > 0.0 && a.rho_c < 1.0) ||
          !(a.gamma_inc > 1.0) || !(a.gamma_dec > 0.0 && a.gamma_dec <= 1.0) ||
          !(a.kappa >= 0.0) || !(a.beta_h_budget >= 0.0)) {
        throw std::invalid_argument("SolverConfig: invalid ARC parameters");
      }
      break;
    }
    case Algorithm::RTR: {
      const auto& r = cfg.rtr;
      if (!(r.delta0 > 0.0) || !(r.delta_bar >= r.delta0) ||
          !(r.rho_prime > 0.0 && r.rho_prime < 0.25)) {
        throw std::invalid_argument("SolverConfig: invalid RTR parameters");
      }
      break;
    }
  }
}

std::vector<double> Trace::dist_sequence() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.dist_S);
  return out;
}

std::vector<double> Trace::grad_norm_sequence() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.grad_norm);
  return out;
}

std::vector<double> Trace::f_sequence() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.f);
  return out;
}

Trace run_gd(const Problem& p, const Point& x0, const SolverConfig& cfg) {
  validate(cfg);
  Recorder rec{{}, &p, cfg.record_points};
  rec.trace.solver_name = cfg.name.empty() ? "gd" : cfg.name;
  rec.trace.grad_tol = cfg.grad_tol;

  Point x = x0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double f = p.value(x);
    if (!std::isfinite(f)) return rec.finish(k, x, kNaN, Termination::Diverged);
    const Tangent g = p.gradient(x);
    const double gn = g.norm();
    if (gn <= cfg.grad_tol) return rec.finish(k, x, kNaN, Termination::GradTol);

    double alpha = cfg.gd.mode == GDStepMode::Constant ? cfg.gd.gamma : cfg.gd.alpha_bar;
    Point x_next = retract(x, make_tangent(x, (-alpha * g.vec).eval()));
    if (cfg.gd.mode == GDStepMode::Armijo) {
      bool ok = false;
      for (int bt = 0; bt < 100; ++bt) {
        if (f - p.value(x_next) >= cfg.gd.sigma_armijo * alpha * gn * gn) {
          ok = true;
          break;
        }
        alpha *= cfg.gd.beta;
        x_next = retract(x, make_tangent(x, (-alpha * g.vec).eval()));
      }
      if (!ok) return rec.finish(k, x, alpha, Termination::Stall);
    }
    const double fn = p.value(x_next);
    if (!std::isfinite(fn)) {
      rec.step_row(k, x, f, gn, alpha * gn, kNaN, alpha, true);
      return rec.finish(k + 1, x_next, alpha, Termination::Diverged);
    }
    rec.step_row(k, x, f, gn, alpha * gn, kNaN, alpha, true);
    x = x_next;
  }
  return rec.finish(cfg.max_iters, x, kNaN, Termination::MaxIters);
}

Trace run_newton(const Problem& p, const Point& x0, const SolverConfig& cfg) {
  validate(cfg);
  if (!p.has_hessian()) throw std::invalid_argument("run_newton: problem must be C2");
  Recorder rec{{}, &p, cfg.record_points};
  rec.trace.solver_name = cfg.name.empty() ? "newton" : cfg.name;
  rec.trace.grad_tol = cfg.grad_tol;

  Point x = x0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double f = p.value(x);
    if (!std::isfinite(f) || !x.coords.allFinite()) {
      return rec.finish(k, x, kNaN, Termination::Diverged);
    }
    const Tangent g = p.gradient(x);
    const double gn = g.norm();
    if (gn <= cfg.grad_tol) return rec.finish(k, x, kNaN, Termination::GradTol);

    const LocalModel lm = build_local_model(p, x, g);
    const VectorXd s = newton_step(lm.md, cfg.newton.rank_tol);
    const Tangent step = lm.step_to_tangent(x, s);
    if (!step.vec.allFinite()) return rec.finish(k, x, kNaN, Termination::Diverged);
    rec.step_row(k, x, f, gn, step.norm(), kNaN, kNaN, true);
    x = retract(x, step);
  }
  return rec.finish(cfg.max_iters, x, kNaN, Termination::MaxIters);
}

Trace run_arc(const Problem& p, const Point& x0, const SolverConfig& cfg) {
  validate(cfg);
  if (!p.has_hessian()) throw std::invalid_argument("run_arc: problem must be C2");
  Recorder rec{{}, &p, cfg.record_points};
  rec.trace.solver_name = cfg.name.empty() ? "arc" : cfg.name;
  rec.trace.grad_tol = cfg.grad_tol;

  std::mt19937_64 perturb_rng(cfg.arc.perturb_seed);
  Point x = x0;
  double sigma = cfg.arc.sigma0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double f = p.value(x);
    if (!std::isfinite(f)) return rec.finish(k, x, sigma, Termination::Diverged);
    const Tangent g = p.gradient(x);
    const double gn = g.norm();
    if (gn <= cfg.grad_tol) return rec.finish(k, x, sigma, Termination::GradTol);

    LocalModel lm = build_local_model(p, x, g);
    if (cfg.arc.beta_h_budget > 0.0) {
      const MatrixXd w = unit_symmetric_noise(lm.md.dim, perturb_rng);
      lm.md.H += (0.999 * cfg.arc.beta_h_budget * gn) * w;
    }

    CubicSolution cs;
    try {
      cs = solve_cubic(lm.md, sigma, cfg.arc.kappa, cfg.arc.subsolver);
    } catch (const SubsolverStallError&) {
      return rec.finish(k, x, sigma, Termination::Stall);
    }
    const Tangent step = lm.step_to_tangent(x, cs.s);
    const Point x_trial = retract(x, step);
    const double f_trial = p.value(x_trial);
    if (!std::isfinite(f_trial)) {
      rec.step_row(k, x, f, gn, step.norm(), kNaN, sigma, false);
      return rec.finish(k + 1, x_trial, sigma, Termination::Diverged);
    }

    // Adequacy ratio; the denominator is the decrease of the quadratic part
    // of the model, which the cubic decrease condition keeps positive.
    const double denom = -(lm.md.g.dot(cs.s) + 0.5 * cs.s.dot(lm.md.H * cs.s));
    const double rho = denom > 0.0 ? (f - f_trial) / denom : -1.0;
    const bool accepted = rho >= cfg.arc.rho_c;
    rec.step_row(k, x, f, gn, step.norm(), rho, sigma, accepted);
    if (accepted) {
      x = x_trial;
      sigma = std::max(cfg.arc.sigma_min, cfg.arc.gamma_dec * sigma);
    } else {
      sigma = cfg.arc.gamma_inc * sigma;
    }
  }
  return rec.finish(cfg.max_iters, x, sigma, Termination::MaxIters);
}

Trace run_rtr(const Problem& p, const Point& x0, const SolverConfig& cfg) {
  validate(cfg);
  if (!p.has_hessian()) throw std::invalid_argument("run_rtr: problem must be C2");
  Recorder rec{{}, &p, cfg.record_points};
  rec.trace.solver_name = cfg.name.empty() ? "rtr" : cfg.name;
  rec.trace.grad_tol = cfg.grad_tol;

  Point x = x0;
  double delta = cfg.rtr.delta0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double f = p.value(x);
    if (!std::isfinite(f)) return rec.finish(k, x, delta, Termination::Diverged);
    const Tangent g = p.gradient(x);
    const double gn = g.norm();
    if (gn <= cfg.grad_tol) return rec.finish(k, x, delta, Termination::GradTol);

    const LocalModel lm = build_local_model(p, x, g);
    VectorXd s;
    switch (cfg.rtr.subsolver) {
      case RtrSubsolver::Cauchy:
        s = cauchy_step(lm.md, delta);
        break;
      case RtrSubsolver::Exact:
        s = solve_trs_exact(lm.md, delta).s;
        break;
      case RtrSubsolver::Tcg: {
        const int cap = cfg.rtr.tcg_max_iter > 0 ? cfg.rtr.tcg_max_iter : 2 * lm.md.dim;
        s = solve_trs_tcg(lm.md, delta, cfg.rtr.kappa_tcg, cfg.rtr.theta_tcg, cap);
        break;
      }
    }
    const Tangent step = lm.step_to_tangent(x, s);
    const Point x_trial = retract(x, step);
    const double f_trial = p.value(x_trial);
    if (!std::isfinite(f_trial)) {
      rec.step_row(k, x, f, gn, step.norm(), kNaN, delta, false);
      return rec.finish(k + 1, x_trial, delta, Termination::Diverged);
    }

    const double denom = -(lm.md.g.dot(s) + 0.5 * s.dot(lm.md.H * s));
    const double rho = denom != 0.0 ? (f - f_trial) / denom : 1.0;
    const bool accepted = rho > cfg.rtr.rho_prime;
    rec.step_row(k, x, f, gn, s.norm(), rho, delta, accepted);

    const bool at_boundary = std::abs(s.norm() - delta) <= 1e-12 * std::max(1.0, delta);
    if (rho < 0.25) {
      delta *= 0.25;
    } else if (rho > 0.75 && at_boundary) {
      delta = std::min(2.0 * delta, cfg.rtr.delta_bar);
    }
    if (accepted) x = x_trial;
  }
  return rec.finish(cfg.max_iters, x, delta, Termination::MaxIters);
}

Trace run_solver(const Problem& p, const Point& x0, const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::GD: return run_gd(p, x0, cfg);
    case Algorithm::Newton: return run_newton(p, x0, cfg);
    case Algorithm::ARC: return run_arc(p, x0, cfg);
    case Algorithm::RTR: return run_rtr(p, x0, cfg);
  }
  throw std::logic_error("run_solver: unreachable");
}

}  // namespace singopt
