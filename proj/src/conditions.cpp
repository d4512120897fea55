#include "singopt/conditions.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "singopt/errors.hpp"

namespace singopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void validate_region(const RegionSpec& rs) {
  if (!(rs.r_inner >= 0.0 && rs.r_inner < rs.r_outer)) {
    throw std::invalid_argument("RegionSpec: requires 0 <= r_inner < r_outer");
  }
  if (rs.n_samples < 100) {
    throw std::invalid_argument("RegionSpec: requires n_samples >= 100");
  }
  if (rs.center.manifold.kind == ManifoldKind::UnitSphere && rs.r_outer >= M_PI) {
    throw std::invalid_argument("RegionSpec: sphere annulus must stay below radius pi");
  }
}

double require_f_star(const Problem& p, const std::optional<double>& override_value) {
  if (override_value) return *override_value;
  if (p.oracle) return p.oracle->f_star;
  throw std::invalid_argument("conditions: f_star unavailable (no oracle and no override)");
}

const SolutionSetOracle& require_oracle(const Problem& p) {
  if (!p.oracle) throw std::invalid_argument("conditions: estimator needs a solution-set oracle");
  return *p.oracle;
}

struct InfTracker {
  double best = std::numeric_limits<double>::infinity();
  int used = 0;
  Point arg;

  void offer(double value, const Point& x) {
    ++used;
    if (value < best) {
      best = value;
      arg = x;
    }
  }
};

ConditionEstimate finish(ConditionKind kind, const InfTracker& t, const RegionSpec& rs) {
  if (t.used == 0) {
    throw EmptyRegionError("conditions: no usable samples in the region");
  }
  ConditionEstimate est;
  est.kind = kind;
  est.mu_hat = t.best;
  est.argmin_sample = t.arg;
  est.n_used = t.used;
  (void)rs;
  return est;
}

}  // namespace

const char* condition_kind_name(ConditionKind k) {
  switch (k) {
    case ConditionKind::PL: return "PL";
    case ConditionKind::EB: return "EB";
    case ConditionKind::QG: return "QG";
    case ConditionKind::RSI: return "RSI";
    case ConditionKind::Loja: return "Loja";
  }
  return "?";
}

std::vector<Point> sample_annulus(const RegionSpec& rs) {
  validate_region(rs);
  const int m = rs.center.manifold.tangent_dim();
  const MatrixXd basis = tangent_basis(rs.center);
  std::mt19937_64 rng(rs.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Point> out;
  out.reserve(rs.n_samples);
  const double lo_pow = std::pow(rs.r_inner, m);
  const double hi_pow = std::pow(rs.r_outer, m);
  while (static_cast<int>(out.size()) < rs.n_samples) {
    VectorXd dir(m);
    for (int i = 0; i < m; ++i) dir[i] = gauss(rng);
    const double n = dir.norm();
    if (n < 1e-12) continue;
    dir /= n;
    // Volume-uniform radius in the annulus.
    const double rho = std::pow(lo_pow + unif(rng) * (hi_pow - lo_pow), 1.0 / m);
    const VectorXd v = rho * (basis * dir);
    out.push_back(exp_map(rs.center, make_tangent(rs.center, v)));
  }
  return out;
}

ConditionEstimate estimate_pl(const Problem& p, const RegionSpec& rs,
                              std::optional<double> f_star_override) {
  const double f_star = require_f_star(p, f_star_override);
  InfTracker t;
  for (const Point& x : sample_annulus(rs)) {
    const double gap = p.value(x) - f_star;
    if (gap < rs.eps_f) continue;
    const double gn = p.gradient(x).norm();
    t.offer(gn * gn / (2.0 * gap), x);
  }
  return finish(ConditionKind::PL, t, rs);
}

ConditionEstimate estimate_eb(const Problem& p, const RegionSpec& rs) {
  const auto& oracle = require_oracle(p);
  const double floor = std::sqrt(rs.eps_f);
  InfTracker t;
  for (const Point& x : sample_annulus(rs)) {
    const double d = oracle.dist_to_S(x);
    if (d < floor) continue;
    t.offer(p.gradient(x).norm() / d, x);
  }
  return finish(ConditionKind::EB, t, rs);
}

ConditionEstimate estimate_qg(const Problem& p, const RegionSpec& rs) {
  const auto& oracle = require_oracle(p);
  const double floor = std::sqrt(rs.eps_f);
  InfTracker t;
  for (const Point& x : sample_annulus(rs)) {
    const double d = oracle.dist_to_S(x);
    if (d < floor) continue;
    t.offer(2.0 * (p.value(x) - oracle.f_star) / (d * d), x);
  }
  return finish(ConditionKind::QG, t, rs);
}

ConditionEstimate estimate_rsi(const Problem& p, const RegionSpec& rs) {
  const auto& oracle = require_oracle(p);
  if (!oracle.project_to_S) {
    throw std::invalid_argument("estimate_rsi: oracle has no projection");
  }
  const double floor = std::sqrt(rs.eps_f);
  InfTracker t;
  for (const Point& x : sample_annulus(rs)) {
    const double d = oracle.dist_to_S(x);
    if (d < floor) continue;
    const Point y = oracle.project_to_S(x);
    const VectorXd v = -log_map(x, y).vec;  // points away from S, based at x
    t.offer(p.gradient(x).vec.dot(v) / (d * d), x);
  }
  return finish(ConditionKind::RSI, t, rs);
}

ConditionEstimate fit_loja_exponent(const Problem& p, const RegionSpec& rs,
                                    std::optional<double> f_star_override) {
  const double f_star = require_f_star(p, f_star_override);
  std::vector<double> xs, ys;
  Point smallest_gap_sample;
  double smallest_gap = std::numeric_limits<double>::infinity();
  for (const Point& x : sample_annulus(rs)) {
    const double gap = p.value(x) - f_star;
    if (gap < rs.eps_f) continue;
    const double gn = p.gradient(x).norm();
    if (!(gn > 0.0)) continue;
    xs.push_back(std::log(gap));
    ys.push_back(std::log(gn));
    if (gap < smallest_gap) {
      smallest_gap = gap;
      smallest_gap_sample = x;
    }
  }
  if (xs.empty()) throw EmptyRegionError("fit_loja_exponent: no usable samples");

  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx < 1e-12 * n * std::max(1.0, mx * mx)) {
    throw IllConditionedFitError("fit_loja_exponent: samples concentrate on one level set");
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;  // = 0.5 log(2 mu)

  ConditionEstimate est;
  est.kind = ConditionKind::Loja;
  est.theta_hat = std::min(std::max(slope, 0.0), 1.0 - 1e-9);
  est.mu_hat = 0.5 * std::exp(2.0 * intercept);
  est.argmin_sample = smallest_gap_sample;
  est.n_used = static_cast<int>(xs.size());
  return est;
}

namespace {

// Eigen-structure of the intrinsic Hessian at a point of S.
struct SpectrumOnS {
  VectorXd evals_desc;
  MatrixXd evecs_desc;
  int rank;
  double mu;
};

SpectrumOnS hessian_spectrum(const Problem& p, const Point& x) {
  const MatrixXd basis = tangent_basis(x);
  const MatrixXd a = basis.transpose() * p.hessian(x) * basis;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const int m = static_cast<int>(a.rows());
  SpectrumOnS out;
  out.evals_desc = es.eigenvalues().reverse();
  out.evecs_desc = es.eigenvectors().rowwise().reverse();
  const double lam_max = out.evals_desc[0];
  const double rank_tol = 1e-7 * std::max(1.0, lam_max);
  out.rank = 0;
  out.mu = 0.0;
  for (int i = 0; i < m; ++i) {
    if (out.evals_desc[i] > rank_tol) {
      ++out.rank;
      out.mu = out.evals_desc[i];
    }
  }
  return out;
}

}  // namespace

MBReport check_mb(const Problem& p, const Point& anchor, int n_probe, double probe_radius,
                  std::uint64_t seed) {
  if (!p.has_hessian()) {
    throw std::invalid_argument("check_mb: problem has no Hessian (C1 smoothness)");
  }
  const auto& oracle = require_oracle(p);
  if (oracle.dist_to_S(anchor) > 1e-8) {
    throw std::invalid_argument("check_mb: anchor is not on the solution set");
  }

  const int m = anchor.manifold.tangent_dim();
  const SpectrumOnS at_anchor = hessian_spectrum(p, anchor);

  MBReport rep;
  rep.anchor = anchor;
  rep.eigenvalues = at_anchor.evals_desc;
  rep.numerical_rank_d = at_anchor.rank;
  rep.mu_mb = at_anchor.mu;
  rep.kernel_dim = m - at_anchor.rank;

  // Probe the rank at nearby points of S and collect tangent directions.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const MatrixXd basis = tangent_basis(anchor);
  bool rank_constant = true;
  MatrixXd tangent_dirs(m, std::max(1, n_probe));
  int n_dirs = 0;
  for (int j = 0; j < n_probe; ++j) {
    VectorXd dir(m);
    for (int i = 0; i < m; ++i) dir[i] = gauss(rng);
    if (dir.norm() < 1e-12) continue;
    dir *= probe_radius / dir.norm();
    const VectorXd ambient = basis * dir;
    const Point plus = oracle.project_to_S(exp_map(anchor, make_tangent(anchor, ambient)));
    const Point minus =
        oracle.project_to_S(exp_map(anchor, make_tangent(anchor, (-ambient).eval())));
    if (hessian_spectrum(p, plus).rank != at_anchor.rank) rank_constant = false;
    // Symmetric difference of the two projections cancels the curvature bias
    // of a one-sided secant direction.
    const VectorXd step = log_map(anchor, plus).vec - log_map(anchor, minus).vec;
    if (step.norm() > 1e-12) {
      tangent_dirs.col(n_dirs++) = basis.transpose() * step / step.norm();
    }
  }
  rep.rank_constant_along_S = rank_constant;

  // Largest principal angle between the Hessian kernel and the sampled
  // tangent space of S.
  rep.tangent_alignment_err = std::numeric_limits<double>::quiet_NaN();
  if (oracle.dim_S == 0) {
    rep.tangent_alignment_err = 0.0;
  } else if (rep.kernel_dim > 0 && n_dirs >= oracle.dim_S) {
    Eigen::JacobiSVD<MatrixXd> svd(tangent_dirs.leftCols(n_dirs), Eigen::ComputeThinU);
    if (svd.singularValues()(oracle.dim_S - 1) > 1e-8 * svd.singularValues()(0)) {
      const MatrixXd t_hat = svd.matrixU().leftCols(oracle.dim_S);
      const MatrixXd kernel = at_anchor.evecs_desc.rightCols(rep.kernel_dim);
      Eigen::JacobiSVD<MatrixXd> angles(kernel.transpose() * t_hat);
      const double c = std::min(1.0, angles.singularValues().minCoeff());
      rep.tangent_alignment_err = std::acos(c);
    }
  }
  return rep;
}

ImplicationTable verify_implications(const std::vector<ConditionEstimate>& estimates,
                                     const MBReport& mb, double slack) {
  auto find = [&](ConditionKind k) -> const ConditionEstimate* {
    for (const auto& e : estimates) {
      if (e.kind == k) return &e;
    }
    return nullptr;
  };
  const ConditionEstimate* pl = find(ConditionKind::PL);
  const ConditionEstimate* eb = find(ConditionKind::EB);
  const ConditionEstimate* qg = find(ConditionKind::QG);
  if (!pl || !eb || !qg) {
    throw std::invalid_argument("verify_implications: needs PL, EB, and QG estimates");
  }

  ImplicationTable table;
  auto add = [&](const std::string& name, double lhs, double rhs, bool pass) {
    table.edges.push_back(ImplicationEdge{name, lhs, rhs, pass});
  };
  add("pl_implies_qg", pl->mu_hat, qg->mu_hat / slack, pl->mu_hat <= qg->mu_hat / slack);
  add("mb_implies_qg", mb.mu_mb, slack * qg->mu_hat, mb.mu_mb >= slack * qg->mu_hat);
  add("qg_implies_eb", eb->mu_hat, slack * qg->mu_hat, eb->mu_hat >= slack * qg->mu_hat);
  add("eb_implies_pl", pl->mu_hat, slack * eb->mu_hat, pl->mu_hat >= slack * eb->mu_hat);
  add("pl_implies_eb", eb->mu_hat, slack * pl->mu_hat, eb->mu_hat >= slack * pl->mu_hat);

  table.all_pass = true;
  for (const auto& e : table.edges) table.all_pass = table.all_pass && e.pass;
  return table;
}

}  // namespace singopt
