#include "singopt/subsolvers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "singopt/errors.hpp"

namespace singopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Spectrum {
  VectorXd lam;   // ascending
  MatrixXd vecs;  // matching columns
  VectorXd ghat;  // vecs' * g
};

Spectrum decompose(const ModelData& md) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(md.H);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("subsolvers: eigendecomposition failed");
  }
  Spectrum sp;
  sp.lam = es.eigenvalues();
  sp.vecs = es.eigenvectors();
  sp.ghat = sp.vecs.transpose() * md.g;
  return sp;
}

// Unit eigenvector of the smallest eigenvalue, signed so that its first
// nonzero coordinate is positive (deterministic hard-case tie-break).
VectorXd signed_min_eigvec(const Spectrum& sp) {
  VectorXd u = sp.vecs.col(0);
  for (int i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > 1e-14) {
      if (u[i] < 0.0) u = -u;
      break;
    }
  }
  return u;
}

// ||(H + nu I)^+ g|| restricted to eigenvalues with lam + nu > floor.
double shifted_norm(const Spectrum& sp, double nu, double floor_tol) {
  double s = 0.0;
  for (int i = 0; i < sp.lam.size(); ++i) {
    const double d = sp.lam[i] + nu;
    if (d > floor_tol) s += (sp.ghat[i] / d) * (sp.ghat[i] / d);
  }
  return std::sqrt(s);
}

VectorXd shifted_solution(const Spectrum& sp, double nu, double floor_tol) {
  VectorXd s = VectorXd::Zero(sp.lam.size());
  for (int i = 0; i < sp.lam.size(); ++i) {
    const double d = sp.lam[i] + nu;
    if (d > floor_tol) s -= (sp.ghat[i] / d) * sp.vecs.col(i);
  }
  return s;
}

// Sum of ghat_i^2 over the minimal eigenspace.
double min_space_overlap(const Spectrum& sp, double eig_tol) {
  double s = 0.0;
  for (int i = 0; i < sp.lam.size(); ++i) {
    if (sp.lam[i] - sp.lam[0] <= eig_tol) s += sp.ghat[i] * sp.ghat[i];
  }
  return s;
}

void require_symmetric(const ModelData& md) {
  const double scale = std::max(1.0, md.H.cwiseAbs().maxCoeff());
  if ((md.H - md.H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("subsolvers: H is not symmetric");
  }
}

// Root of w(nu) = target(nu) on (lo, inf), where w is the shifted-solution
// norm (decreasing) and target is delta (TRS) or nu/sigma (cubic). Safeguarded
// Newton on the residual with a bisection bracket. Uses a zero exclusion
// floor so that w blows up continuously as nu approaches the pole from above.
double secular_root(const Spectrum& sp, double lo, bool cubic, double delta_or_sigma,
                    double tol) {
  auto target = [&](double nu) { return cubic ? nu / delta_or_sigma : delta_or_sigma; };
  auto resid = [&](double nu) { return shifted_norm(sp, nu, 0.0) - target(nu); };

  const double lam_max = sp.lam[sp.lam.size() - 1];
  // w(nu) <= ||g||/(nu + lam_min), so pushing hi far enough flips the sign.
  // hi must land strictly above lo, where the pole may sit.
  double hi = 2.0 * std::max(lo, 1.0) + std::abs(lam_max) + 1.0;
  for (int i = 0; i < 200 && resid(hi) > 0.0; ++i) {
    hi = 2.0 * hi + std::abs(lam_max) + 1.0;
  }
  double a = lo, b = hi;
  double nu = 0.5 * (a + b);
  double best_nu = nu;
  double best_r = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double w = shifted_norm(sp, nu, 0.0);
    const double r = w - target(nu);
    if (std::abs(r) < best_r) {
      best_r = std::abs(r);
      best_nu = nu;
    }
    if (r > 0.0) {
      a = nu;
    } else {
      b = nu;
    }
    // w w' = -sum ghat^2/(lam+nu)^3
    double wp = 0.0;
    for (int i = 0; i < sp.lam.size(); ++i) {
      const double d = sp.lam[i] + nu;
      if (d > 0.0) wp -= sp.ghat[i] * sp.ghat[i] / (d * d * d);
    }
    wp = w > 0.0 ? wp / w : 0.0;
    const double rp = wp - (cubic ? 1.0 / delta_or_sigma : 0.0);
    double nu_next = (rp != 0.0) ? nu - r / rp : 0.5 * (a + b);
    if (!(nu_next > a && nu_next < b)) nu_next = 0.5 * (a + b);
    if (std::abs(r) <= tol * std::max(1.0, target(nu)) && b - a <= tol * std::max(1.0, nu)) {
      return nu;
    }
    nu = nu_next;
  }
  return best_nu;
}

}  // namespace

ModelData make_model_data(Eigen::VectorXd g, Eigen::MatrixXd H) {
  ModelData md;
  md.dim = static_cast<int>(g.size());
  if (H.rows() != md.dim || H.cols() != md.dim) {
    throw std::invalid_argument("make_model_data: dimension mismatch between g and H");
  }
  md.g = std::move(g);
  md.H = std::move(H);
  require_symmetric(md);
  return md;
}

Eigen::VectorXd newton_step(const ModelData& md, double rank_tol) {
  if (!(rank_tol > 0.0)) throw std::invalid_argument("newton_step: rank_tol must be positive");
  const Spectrum sp = decompose(md);
  const double spectral = sp.lam.cwiseAbs().maxCoeff();
  if (spectral == 0.0) return VectorXd::Zero(md.dim);
  const double cut = rank_tol * spectral;
  bool full_rank = true;
  for (int i = 0; i < sp.lam.size(); ++i) {
    if (std::abs(sp.lam[i]) < cut) full_rank = false;
  }
  if (full_rank) {
    // Direct solve keeps small pivots accurate on near-singular systems.
    return Eigen::PartialPivLU<MatrixXd>(md.H).solve((-md.g).eval());
  }
  VectorXd s = VectorXd::Zero(md.dim);
  for (int i = 0; i < sp.lam.size(); ++i) {
    if (std::abs(sp.lam[i]) >= cut) s -= (sp.ghat[i] / sp.lam[i]) * sp.vecs.col(i);
  }
  return s;
}

Eigen::VectorXd cauchy_step(const ModelData& md, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("cauchy_step: delta must be positive");
  const double gn = md.g.norm();
  if (gn == 0.0) return VectorXd::Zero(md.dim);
  const double ghg = md.g.dot(md.H * md.g);
  const double t_boundary = delta / gn;
  const double t = ghg > 0.0 ? std::min(gn * gn / ghg, t_boundary) : t_boundary;
  return (-t * md.g).eval();
}

TrsSolution solve_trs_exact(const ModelData& md, double delta, double tol) {
  if (!(delta > 0.0)) throw std::invalid_argument("solve_trs_exact: delta must be positive");
  require_symmetric(md);
  const Spectrum sp = decompose(md);
  const int n = md.dim;
  const double lam_min = sp.lam[0];
  const double scale = std::max(1.0, sp.lam.cwiseAbs().maxCoeff());
  const double eig_tol = 1e-10 * scale;
  const double gn = md.g.norm();

  TrsSolution out;
  if (gn == 0.0) {
    if (lam_min >= -eig_tol) {
      out.s = VectorXd::Zero(n);
      return out;
    }
    out.lambda = -lam_min;
    out.s = delta * signed_min_eigvec(sp);
    out.on_boundary = true;
    out.hard_case = true;
    return out;
  }

  const double nu0 = std::max(0.0, -lam_min);
  const double overlap = min_space_overlap(sp, eig_tol);
  const bool grad_touches_min_space = overlap > (1e-7 * gn) * (1e-7 * gn);

  if (lam_min > eig_tol) {
    // Positive definite: try the interior Newton point first.
    const VectorXd s_newton = Eigen::PartialPivLU<MatrixXd>(md.H).solve((-md.g).eval());
    if (s_newton.norm() <= delta) {
      out.s = s_newton;
      out.lambda = 0.0;
      return out;
    }
  } else if (!grad_touches_min_space) {
    const VectorXd p = shifted_solution(sp, nu0, eig_tol);
    const double pn = p.norm();
    if (lam_min < -eig_tol) {
      if (pn < delta * (1.0 - 1e-12)) {
        // Hard case: pad with the minimal eigenvector up to the boundary.
        const double tau = std::sqrt(std::max(0.0, delta * delta - pn * pn));
        out.s = p + tau * signed_min_eigvec(sp);
        out.lambda = nu0;
        out.on_boundary = true;
        out.hard_case = true;
        return out;
      }
    } else {
      // Singular PSD with g orthogonal to the kernel.
      if (pn <= delta) {
        out.s = p;
        out.lambda = 0.0;
        return out;
      }
    }
  }

  const double nu = secular_root(sp, nu0, /*cubic=*/false, delta, tol);
  out.s = shifted_solution(sp, nu, 0.0);
  out.lambda = nu;
  out.on_boundary = true;
  return out;
}

Eigen::VectorXd solve_trs_tcg(const ModelData& md, double delta, double kappa_tcg,
                              double theta_tcg, int max_iter) {
  if (!(delta > 0.0)) throw std::invalid_argument("solve_trs_tcg: delta must be positive");
  const int n = md.dim;
  const double gn = md.g.norm();
  VectorXd s = VectorXd::Zero(n);
  if (gn == 0.0) return s;

  const double tol_r = gn * std::min(kappa_tcg, std::pow(gn, theta_tcg));
  VectorXd r = md.g;
  VectorXd d = -r;
  double rr = r.squaredNorm();

  auto to_boundary = [&](const VectorXd& base, const VectorXd& dir) {
    const double dd = dir.squaredNorm();
    const double bd = base.dot(dir);
    const double disc = bd * bd + dd * (delta * delta - base.squaredNorm());
    const double tau = (-bd + std::sqrt(std::max(0.0, disc))) / dd;
    return (base + tau * dir).eval();
  };

  for (int j = 0; j < max_iter; ++j) {
    const VectorXd hd = md.H * d;
    const double dhd = d.dot(hd);
    if (dhd <= 0.0) return to_boundary(s, d);
    const double alpha = rr / dhd;
    if ((s + alpha * d).norm() >= delta) return to_boundary(s, d);
    s += alpha * d;
    r += alpha * hd;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= tol_r) return s;
    d = -r + (rr_new / rr) * d;
    rr = rr_new;
  }
  return s;
}

double cubic_step_norm_bound(double grad_norm, double sigma, double lambda_min_h,
                             double beta_h) {
  const double lam_term = std::max(0.0, beta_h * grad_norm - lambda_min_h);
  return std::sqrt(3.0 * grad_norm / sigma) + 1.5 * lam_term / sigma;
}

namespace {

double cubic_model_value(const ModelData& md, double sigma, const VectorXd& s) {
  const double sn = s.norm();
  return md.g.dot(s) + 0.5 * s.dot(md.H * s) + sigma / 3.0 * sn * sn * sn;
}

VectorXd cubic_model_grad(const ModelData& md, double sigma, const VectorXd& s) {
  return md.g + md.H * s + sigma * s.norm() * s;
}

CubicSolution finish_cubic(const ModelData& md, double sigma, double kappa, CubicMode mode,
                           VectorXd s, int iters) {
  CubicSolution out;
  out.mode = mode;
  out.inner_iters = iters;
  out.model_value = cubic_model_value(md, sigma, s);
  const VectorXd gm = cubic_model_grad(md, sigma, s);
  out.model_grad_norm = gm.norm();
  const double gn = md.g.norm();
  const double sn = s.norm();
  // Tiny absolute slack absorbs floating-point residue in the certificates.
  const double fp_slack =
      64.0 * std::numeric_limits<double>::epsilon() *
      (gn + md.H.cwiseAbs().maxCoeff() * sn + sigma * sn * sn);
  out.decrease_ok = out.model_value <= fp_slack;
  out.gradient_cond_ok = out.model_grad_norm <= kappa * sn * gn + fp_slack;
  out.s = std::move(s);
  return out;
}

CubicSolution solve_cubic_exact(const ModelData& md, double sigma, double kappa) {
  const Spectrum sp = decompose(md);
  const int n = md.dim;
  const double lam_min = sp.lam[0];
  const double scale = std::max(1.0, sp.lam.cwiseAbs().maxCoeff());
  const double eig_tol = 1e-10 * scale;
  const double gn = md.g.norm();

  if (gn == 0.0) {
    if (lam_min >= -eig_tol) {
      return finish_cubic(md, sigma, kappa, CubicMode::ExactSecular, VectorXd::Zero(n), 0);
    }
    const double nu = -lam_min;
    return finish_cubic(md, sigma, kappa, CubicMode::ExactSecular,
                        (nu / sigma) * signed_min_eigvec(sp), 0);
  }

  const double nu0 = std::max(0.0, -lam_min);
  const double overlap = min_space_overlap(sp, eig_tol);
  const bool grad_touches_min_space = overlap > (1e-7 * gn) * (1e-7 * gn);

  if (lam_min < -eig_tol && !grad_touches_min_space) {
    const VectorXd p = shifted_solution(sp, nu0, eig_tol);
    const double radius = nu0 / sigma;
    if (p.norm() <= radius * (1.0 - 1e-12)) {
      const double tau = std::sqrt(std::max(0.0, radius * radius - p.squaredNorm()));
      return finish_cubic(md, sigma, kappa, CubicMode::ExactSecular,
                          p + tau * signed_min_eigvec(sp), 0);
    }
  }

  const double nu = secular_root(sp, nu0, /*cubic=*/true, sigma, 1e-15);
  return finish_cubic(md, sigma, kappa, CubicMode::ExactSecular,
                      shifted_solution(sp, nu, 0.0), 0);
}

// Descent on the cubic model from its Cauchy point, with damped-Newton
// directions and Armijo backtracking, until the gradient condition holds.
CubicSolution solve_cubic_inexact(const ModelData& md, double sigma, double kappa) {
  const int n = md.dim;
  const double gn = md.g.norm();
  if (gn == 0.0) {
    CubicSolution ex = solve_cubic_exact(md, sigma, kappa);
    ex.mode = CubicMode::InexactGradient;
    return ex;
  }

  // Cauchy point of the cubic model along -g.
  const double q = md.g.dot(md.H * md.g) / (gn * gn);
  const double t = (-q + std::sqrt(q * q + 4.0 * sigma * gn)) / (2.0 * sigma);
  VectorXd s = (-t / gn) * md.g;

  const double h_scale = std::max(1.0, md.H.cwiseAbs().maxCoeff());
  const int max_iters = 10000;
  for (int it = 0; it < max_iters; ++it) {
    const VectorXd gm = cubic_model_grad(md, sigma, s);
    const double sn = s.norm();
    const double fp_slack = 64.0 * std::numeric_limits<double>::epsilon() *
                            (gn + h_scale * sn + sigma * sn * sn);
    if (gm.norm() <= kappa * sn * gn + fp_slack) {
      return finish_cubic(md, sigma, kappa, CubicMode::InexactGradient, std::move(s), it);
    }

    MatrixXd curv = md.H + sigma * sn * MatrixXd::Identity(n, n);
    if (sn > 0.0) curv += (sigma / sn) * s * s.transpose();

    VectorXd dir;
    double ridge = 0.0;
    for (int tries = 0; tries < 60; ++tries) {
      MatrixXd b = curv + ridge * MatrixXd::Identity(n, n);
      dir = Eigen::PartialPivLU<MatrixXd>(std::move(b)).solve((-gm).eval());
      const bool descent =
          dir.allFinite() && gm.dot(dir) < -1e-14 * gm.norm() * dir.norm();
      if (descent) break;
      ridge = std::max(2.0 * ridge, 1e-8 * (h_scale + sigma * sn));
      dir = -gm;  // fallback if damping keeps failing
    }

    const double m0 = cubic_model_value(md, sigma, s);
    const double slope = gm.dot(dir);
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const VectorXd s_try = s + alpha * dir;
      if (cubic_model_value(md, sigma, s_try) <= m0 + 1e-4 * alpha * slope) {
        s = s_try;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) {
      // Flat to machine precision: accept if certificates already hold.
      CubicSolution out = finish_cubic(md, sigma, kappa, CubicMode::InexactGradient, s, it);
      if (out.decrease_ok && out.gradient_cond_ok) return out;
      throw SubsolverStallError("solve_cubic: no further descent on the model");
    }
  }
  throw SubsolverStallError("solve_cubic: inexact mode exceeded its iteration cap");
}

}  // namespace

CubicSolution solve_cubic(const ModelData& md, double sigma, double kappa, CubicMode mode) {
  if (!(sigma > 0.0)) throw std::invalid_argument("solve_cubic: sigma must be positive");
  if (!(kappa >= 0.0)) throw std::invalid_argument("solve_cubic: kappa must be nonnegative");
  require_symmetric(md);
  return mode == CubicMode::ExactSecular ? solve_cubic_exact(md, sigma, kappa)
                                         : solve_cubic_inexact(md, sigma, kappa);
}

}  // namespace singopt
