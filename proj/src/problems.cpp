#include "singopt/problems.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace singopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double get_param(const ProblemSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

int get_int_param(const ProblemSpec& spec, const std::string& key, int fallback) {
  const double v = get_param(spec, key, static_cast<double>(fallback));
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9) {
    throw std::invalid_argument("build_problem: parameter '" + key + "' must be an integer");
  }
  return static_cast<int>(r);
}

Problem quartic_1d() {
  Problem p;
  p.name = "quartic1d";
  p.manifold = ManifoldDescriptor::euclidean(1);
  p.smoothness = Smoothness::Analytic;
  p.f_raw = [](const VectorXd& v) { const double x = v[0]; return x * x * x * x; };
  p.grad_raw = [](const VectorXd& v) {
    const double x = v[0];
    return VectorXd::Constant(1, 4.0 * x * x * x).eval();
  };
  p.hess_raw = [](const VectorXd& v) {
    const double x = v[0];
    return MatrixXd::Constant(1, 1, 12.0 * x * x).eval();
  };
  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = 0;
  o.hessian_rank_d = 0;
  const auto m = p.manifold;
  o.dist_to_S = [](const Point& x) { return std::abs(x.coords[0]); };
  o.project_to_S = [m](const Point&) { return make_point(m, VectorXd::Zero(1)); };
  p.oracle = o;
  return p;
}

Problem newton_trap() {
  Problem p;
  p.name = "newton_trap";
  p.manifold = ManifoldDescriptor::euclidean(2);
  p.smoothness = Smoothness::Analytic;
  p.f_raw = [](const VectorXd& v) {
    const double x = v[0], y = v[1];
    return 0.5 * (x * x + 1.0) * y * y;
  };
  p.grad_raw = [](const VectorXd& v) {
    const double x = v[0], y = v[1];
    VectorXd g(2);
    g << x * y * y, (x * x + 1.0) * y;
    return g;
  };
  p.hess_raw = [](const VectorXd& v) {
    const double x = v[0], y = v[1];
    MatrixXd h(2, 2);
    h << y * y, 2.0 * x * y, 2.0 * x * y, x * x + 1.0;
    return h;
  };
  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = 1;
  o.hessian_rank_d = 1;
  const auto m = p.manifold;
  o.dist_to_S = [](const Point& x) { return std::abs(x.coords[1]); };
  o.project_to_S = [m](const Point& x) {
    VectorXd c(2);
    c << x.coords[0], 0.0;
    return make_point(m, c);
  };
  p.oracle = o;
  return p;
}

Problem circle() {
  Problem p;
  p.name = "circle";
  p.manifold = ManifoldDescriptor::euclidean(2);
  p.smoothness = Smoothness::Analytic;
  p.f_raw = [](const VectorXd& v) {
    const double r2 = v.squaredNorm();
    return (r2 - 1.0) * (r2 - 1.0);
  };
  p.grad_raw = [](const VectorXd& v) {
    const double r2 = v.squaredNorm();
    return (4.0 * (r2 - 1.0) * v).eval();
  };
  p.hess_raw = [](const VectorXd& v) {
    const double r2 = v.squaredNorm();
    MatrixXd h = 4.0 * (r2 - 1.0) * MatrixXd::Identity(2, 2);
    h += 8.0 * v * v.transpose();
    return h;
  };
  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = 1;
  o.hessian_rank_d = 1;
  const auto m = p.manifold;
  o.dist_to_S = [](const Point& x) { return std::abs(x.coords.norm() - 1.0); };
  o.project_to_S = [m](const Point& x) {
    const double n = x.coords.norm();
    if (n < 1e-12) {
      VectorXd c(2);
      c << 1.0, 0.0;  // center of the circle: pick a fixed representative
      return make_point(m, c);
    }
    return make_point(m, (x.coords / n).eval());
  };
  p.oracle = o;
  return p;
}

Problem cross_c1() {
  Problem p;
  p.name = "cross_c1";
  p.manifold = ManifoldDescriptor::euclidean(2);
  p.smoothness = Smoothness::C1;
  p.f_raw = [](const VectorXd& v) {
    const double x = v[0], y = v[1];
    const double d = x * x + y * y;
    if (d == 0.0) return 0.0;
    return x * x * y * y / d;
  };
  p.grad_raw = [](const VectorXd& v) {
    const double x = v[0], y = v[1];
    const double d = x * x + y * y;
    VectorXd g = VectorXd::Zero(2);
    if (d == 0.0) return g;
    const double d2 = d * d;
    g << 2.0 * x * y * y * y * y / d2, 2.0 * x * x * x * x * y / d2;
    return g;
  };
  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = 1;
  o.hessian_rank_d = -1;
  o.solution_set_is_manifold = false;  // union of the two axes
  const auto m = p.manifold;
  o.dist_to_S = [](const Point& x) {
    return std::min(std::abs(x.coords[0]), std::abs(x.coords[1]));
  };
  o.project_to_S = [m](const Point& x) {
    VectorXd c = x.coords;
    if (std::abs(c[0]) < std::abs(c[1])) {
      c[0] = 0.0;
    } else {
      c[1] = 0.0;
    }
    return make_point(m, c);
  };
  p.oracle = o;
  return p;
}

Problem qg_not_eb() {
  Problem p;
  p.name = "qg_not_eb";
  p.manifold = ManifoldDescriptor::euclidean(1);
  p.smoothness = Smoothness::C1;
  p.f_raw = [](const VectorXd& v) {
    const double x = v[0];
    if (x == 0.0) return 0.0;
    return 2.0 * x * x + x * x * std::sin(1.0 / std::sqrt(std::abs(x)));
  };
  p.grad_raw = [](const VectorXd& v) {
    const double x = v[0];
    VectorXd g = VectorXd::Zero(1);
    if (x == 0.0) return g;
    const double ax = std::abs(x);
    const double u = 1.0 / std::sqrt(ax);
    const double sgn = x > 0.0 ? 1.0 : -1.0;
    g[0] = 4.0 * x + 2.0 * x * std::sin(u) - 0.5 * sgn * std::sqrt(ax) * std::cos(u);
    return g;
  };
  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = 0;
  o.hessian_rank_d = -1;
  const auto m = p.manifold;
  o.dist_to_S = [](const Point& x) { return std::abs(x.coords[0]); };
  o.project_to_S = [m](const Point&) { return make_point(m, VectorXd::Zero(1)); };
  p.oracle = o;
  return p;
}

// f(x) = 0.5 ||F(x) - b||^2 with F(x) = A x + 0.5 (x' Q_i x)_i and b = F(x*).
Problem overparam_regression(const ProblemSpec& spec) {
  const int m = get_int_param(spec, "m", 6);
  const int n = get_int_param(spec, "n", 3);
  if (n < 1 || m <= n) {
    throw std::invalid_argument("overparam_regression: requires m > n >= 1");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw_matrix = [&](int rows, int cols, double scale) {
    MatrixXd a(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a(i, j) = scale * gauss(rng);
    return a;
  };

  MatrixXd a;
  std::vector<MatrixXd> qs;
  VectorXd xstar(m);
  // Redraw until the Jacobian at x* has full row rank.
  for (int attempt = 0; attempt < 64; ++attempt) {
    a = draw_matrix(n, m, 1.0 / std::sqrt(static_cast<double>(m)));
    qs.clear();
    for (int i = 0; i < n; ++i) {
      MatrixXd b = draw_matrix(m, m, 1.0 / static_cast<double>(m));
      qs.push_back(((b + b.transpose()) / 2.0).eval());
    }
    for (int i = 0; i < m; ++i) xstar[i] = gauss(rng);
    MatrixXd jac = a;
    for (int i = 0; i < n; ++i) jac.row(i) += (qs[i] * xstar).transpose();
    Eigen::JacobiSVD<MatrixXd> svd(jac);
    if (svd.singularValues()(n - 1) > 1e-3) break;
  }

  auto eval_f_vec = [a, qs, n](const VectorXd& x) {
    VectorXd fx = a * x;
    for (int i = 0; i < n; ++i) fx[i] += 0.5 * x.dot(qs[i] * x);
    return fx;
  };
  auto eval_jac = [a, qs, n](const VectorXd& x) {
    MatrixXd j = a;
    for (int i = 0; i < n; ++i) j.row(i) += (qs[i] * x).transpose();
    return j;
  };
  const VectorXd b = eval_f_vec(xstar);

  Problem p;
  p.name = "overparam_regression";
  p.manifold = ManifoldDescriptor::euclidean(m);
  p.smoothness = Smoothness::Analytic;
  p.f_raw = [eval_f_vec, b](const VectorXd& x) {
    return 0.5 * (eval_f_vec(x) - b).squaredNorm();
  };
  p.grad_raw = [eval_f_vec, eval_jac, b](const VectorXd& x) {
    return (eval_jac(x).transpose() * (eval_f_vec(x) - b)).eval();
  };
  p.hess_raw = [eval_f_vec, eval_jac, qs, b, n](const VectorXd& x) {
    const MatrixXd j = eval_jac(x);
    const VectorXd r = eval_f_vec(x) - b;
    MatrixXd h = j.transpose() * j;
    for (int i = 0; i < n; ++i) h += r[i] * qs[i];
    return ((h + h.transpose()) / 2.0).eval();
  };

  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = m - n;
  o.hessian_rank_d = n;
  const auto desc = p.manifold;
  // Numerical oracle: damped Gauss-Newton projection onto {F(x) = b}.
  auto project = [eval_f_vec, eval_jac, b, desc](const Point& x0) {
    VectorXd z = x0.coords;
    for (int it = 0; it < 200; ++it) {
      const VectorXd r = eval_f_vec(z) - b;
      if (r.norm() <= 1e-12) break;
      const MatrixXd j = eval_jac(z);
      const VectorXd delta = j.transpose() * (j * j.transpose()).ldlt().solve(r);
      double step = 1.0;
      VectorXd z_new = z - delta;
      while ((eval_f_vec(z_new) - b).norm() > r.norm() && step > 1e-8) {
        step *= 0.5;
        z_new = z - step * delta;
      }
      z = z_new;
    }
    return make_point(desc, z);
  };
  o.project_to_S = project;
  o.dist_to_S = [project](const Point& x) {
    return (project(x).coords - x.coords).norm();
  };
  p.oracle = o;
  return p;
}

// f(Y) = 0.5 ||Y Y' - Y* Y*'||_F^2 over R^{p x r}, flattened column-major.
Problem burer_monteiro(const ProblemSpec& spec) {
  const int rows = get_int_param(spec, "p", 3);
  const int rank = get_int_param(spec, "r", 2);
  if (rank < 1 || rows < rank) {
    throw std::invalid_argument("burer_monteiro: requires p >= r >= 1");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd ystar(rows, rank);
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < rank; ++j) ystar(i, j) = gauss(rng);
    Eigen::JacobiSVD<MatrixXd> svd(ystar);
    if (svd.singularValues()(rank - 1) > 0.3) break;
  }
  const MatrixXd target = ystar * ystar.transpose();
  const int dim = rows * rank;

  auto as_matrix = [rows, rank](const VectorXd& v) {
    return Eigen::Map<const MatrixXd>(v.data(), rows, rank);
  };

  Problem p;
  p.name = "burer_monteiro";
  p.manifold = ManifoldDescriptor::euclidean(dim);
  p.smoothness = Smoothness::Analytic;
  p.f_raw = [as_matrix, target](const VectorXd& v) {
    const MatrixXd y = as_matrix(v);
    return 0.5 * (y * y.transpose() - target).squaredNorm();
  };
  p.grad_raw = [as_matrix, target](const VectorXd& v) {
    const MatrixXd y = as_matrix(v);
    const MatrixXd g = 2.0 * (y * y.transpose() - target) * y;
    return VectorXd(Eigen::Map<const VectorXd>(g.data(), g.size()));
  };
  p.hess_raw = [as_matrix, target, rows, rank, dim](const VectorXd& v) {
    const MatrixXd y = as_matrix(v);
    const MatrixXd e = y * y.transpose() - target;
    MatrixXd h(dim, dim);
    MatrixXd basis = MatrixXd::Zero(rows, rank);
    for (int j = 0; j < dim; ++j) {
      basis(j % rows, j / rows) = 1.0;
      const MatrixXd w =
          2.0 * ((basis * y.transpose() + y * basis.transpose()) * y + e * basis);
      h.col(j) = Eigen::Map<const VectorXd>(w.data(), w.size());
      basis(j % rows, j / rows) = 0.0;
    }
    return ((h + h.transpose()) / 2.0).eval();
  };

  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = rank * (rank - 1) / 2;  // orthogonal-group orbit of Y*
  o.hessian_rank_d = dim - rank * (rank - 1) / 2;
  const auto desc = p.manifold;
  // Orthogonal Procrustes alignment onto the orbit {Y* Q : Q in O(r)}.
  auto project = [as_matrix, ystar, desc](const Point& x) {
    const MatrixXd y = as_matrix(x.coords);
    Eigen::JacobiSVD<MatrixXd> svd(ystar.transpose() * y,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    const MatrixXd q = svd.matrixU() * svd.matrixV().transpose();
    const MatrixXd proj = ystar * q;
    return make_point(desc, VectorXd(Eigen::Map<const VectorXd>(proj.data(), proj.size())));
  };
  o.project_to_S = project;
  o.dist_to_S = [project](const Point& x) {
    return (project(x).coords - x.coords).norm();
  };
  p.oracle = o;
  return p;
}

// f(x) = x_3^2 on the unit sphere in R^3; S is the equator.
Problem sphere_band() {
  Problem p;
  p.name = "sphere_band";
  p.manifold = ManifoldDescriptor::unit_sphere(3, RetractionKind::MetricProjection);
  p.smoothness = Smoothness::Analytic;
  p.f_raw = [](const VectorXd& v) { return v[2] * v[2]; };
  p.grad_raw = [](const VectorXd& v) {
    VectorXd g = VectorXd::Zero(3);
    g[2] = 2.0 * v[2];
    return g;
  };
  p.hess_raw = [](const VectorXd&) {
    MatrixXd h = MatrixXd::Zero(3, 3);
    h(2, 2) = 2.0;
    return h;
  };
  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = 1;
  o.hessian_rank_d = 1;
  const auto desc = p.manifold;
  o.dist_to_S = [](const Point& x) {
    const double z = std::min(1.0, std::max(-1.0, x.coords[2]));
    return std::abs(std::asin(z));
  };
  o.project_to_S = [desc](const Point& x) {
    VectorXd c(3);
    const double nxy = std::hypot(x.coords[0], x.coords[1]);
    if (nxy < 1e-12) {
      c << 1.0, 0.0, 0.0;  // poles project to a fixed equator point
    } else {
      c << x.coords[0] / nxy, x.coords[1] / nxy, 0.0;
    }
    return make_point(desc, c);
  };
  p.oracle = o;
  return p;
}

}  // namespace

Problem make_diag_quadratic(const Eigen::VectorXd& curvatures, std::string name) {
  const int n = static_cast<int>(curvatures.size());
  if (n < 1) throw std::invalid_argument("make_diag_quadratic: empty curvature vector");
  if ((curvatures.array() < 0.0).any()) {
    throw std::invalid_argument("make_diag_quadratic: curvatures must be nonnegative");
  }
  Problem p;
  p.name = std::move(name);
  p.manifold = ManifoldDescriptor::euclidean(n);
  p.smoothness = Smoothness::Analytic;
  const VectorXd c = curvatures;
  p.f_raw = [c](const VectorXd& x) { return 0.5 * (c.array() * x.array().square()).sum(); };
  p.grad_raw = [c](const VectorXd& x) { return (c.array() * x.array()).matrix().eval(); };
  p.hess_raw = [c](const VectorXd&) { return MatrixXd(c.asDiagonal()); };

  SolutionSetOracle o;
  o.f_star = 0.0;
  o.dim_S = static_cast<int>((c.array() == 0.0).count());
  o.hessian_rank_d = n - o.dim_S;
  const auto desc = p.manifold;
  o.dist_to_S = [c](const Point& x) {
    double s = 0.0;
    for (int i = 0; i < c.size(); ++i)
      if (c[i] > 0.0) s += x.coords[i] * x.coords[i];
    return std::sqrt(s);
  };
  o.project_to_S = [c, desc](const Point& x) {
    VectorXd z = x.coords;
    for (int i = 0; i < c.size(); ++i)
      if (c[i] > 0.0) z[i] = 0.0;
    return make_point(desc, z);
  };
  p.oracle = o;
  return p;
}

Problem build_problem(const ProblemSpec& spec) {
  if (spec.name == "quartic1d") return quartic_1d();
  if (spec.name == "newton_trap") return newton_trap();
  if (spec.name == "circle") return circle();
  if (spec.name == "cross_c1") return cross_c1();
  if (spec.name == "qg_not_eb") return qg_not_eb();
  if (spec.name == "overparam_regression") return overparam_regression(spec);
  if (spec.name == "burer_monteiro") return burer_monteiro(spec);
  if (spec.name == "sphere_band") return sphere_band();
  if (spec.name == "aniso_quad") {
    const double a = get_param(spec, "a", 2.0);
    const double b = get_param(spec, "b", 8.0);
    if (!(a > 0.0) || !(b >= a)) {
      throw std::invalid_argument("aniso_quad: requires 0 < a <= b");
    }
    Eigen::Vector3d c(0.0, a, b);
    return make_diag_quadratic(c, "aniso_quad");
  }
  throw std::invalid_argument("build_problem: unknown problem '" + spec.name + "'");
}

double Problem::value(const Point& x) const { return f_raw(x.coords); }

Tangent Problem::gradient(const Point& x) const {
  Eigen::VectorXd g = grad_raw(x.coords);
  if (manifold.kind == ManifoldKind::UnitSphere) {
    g = project_to_tangent(x, g);
  }
  return Tangent{std::move(g), x};
}

Eigen::MatrixXd Problem::hessian(const Point& x) const {
  if (!has_hessian()) {
    throw std::logic_error("Problem::hessian: unsupported operation on a C1 problem");
  }
  Eigen::MatrixXd h = hess_raw(x.coords);
  if (manifold.kind == ManifoldKind::UnitSphere) {
    const int n = manifold.ambient_dim;
    const Eigen::MatrixXd proj =
        Eigen::MatrixXd::Identity(n, n) - x.coords * x.coords.transpose();
    const double normal_slope = x.coords.dot(grad_raw(x.coords));
    h = proj * h * proj - normal_slope * proj;
    h = ((h + h.transpose()) / 2.0).eval();
  }
  return h;
}

double Problem::dist_S(const Point& x) const {
  if (!oracle) return std::numeric_limits<double>::quiet_NaN();
  return oracle->dist_to_S(x);
}

EvalBundle eval_bundle(const Problem& p, const Point& x, bool with_hessian) {
  EvalBundle out;
  out.f = p.value(x);
  out.grad = p.gradient(x);
  if (with_hessian) {
    out.hess = p.hessian(x);  // throws for C1 problems
  }
  return out;
}

DerivativeReport check_derivatives(const Problem& p, const Point& x, double h) {
  if (!(h >= 1e-8 && h <= 1e-2)) {
    throw std::invalid_argument("check_derivatives: h must lie in [1e-8, 1e-2]");
  }
  DerivativeReport rep;
  const Eigen::MatrixXd basis = tangent_basis(x);
  const int m = static_cast<int>(basis.cols());
  const Tangent g = p.gradient(x);

  double max_abs_grad = 0.0, max_err_grad = 0.0;
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd dir = basis.col(i);
    const double an = g.vec.dot(dir);
    const Point xp = exp_map(x, make_tangent(x, (h * dir).eval()));
    const Point xm = exp_map(x, make_tangent(x, (-h * dir).eval()));
    const double fd = (p.value(xp) - p.value(xm)) / (2.0 * h);
    max_abs_grad = std::max(max_abs_grad, std::abs(an));
    max_err_grad = std::max(max_err_grad, std::abs(fd - an));
  }
  rep.max_rel_err_grad = max_err_grad / std::max(1.0, max_abs_grad);

  if (p.has_hessian()) {
    const Eigen::MatrixXd a = basis.transpose() * p.hessian(x) * basis;
    Eigen::MatrixXd fd(m, m);
    if (p.manifold.kind == ManifoldKind::Euclidean) {
      // Central differences of the gradient, column by column.
      for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd gp = p.grad_raw(x.coords + h * basis.col(j));
        const Eigen::VectorXd gm = p.grad_raw(x.coords - h * basis.col(j));
        fd.col(j) = (gp - gm) / (2.0 * h);
      }
      fd = ((fd + fd.transpose()) / 2.0).eval();
    } else {
      // Second differences of f along geodesics, polarized for off-diagonals.
      const double f0 = p.value(x);
      auto second_diff = [&](const Eigen::VectorXd& u) {
        const Point xp = exp_map(x, make_tangent(x, (h * u).eval()));
        const Point xm = exp_map(x, make_tangent(x, (-h * u).eval()));
        return (p.value(xp) - 2.0 * f0 + p.value(xm)) / (h * h);
      };
      Eigen::VectorXd diag(m);
      for (int i = 0; i < m; ++i) diag[i] = second_diff(basis.col(i));
      for (int i = 0; i < m; ++i) {
        fd(i, i) = diag[i];
        for (int j = i + 1; j < m; ++j) {
          const Eigen::VectorXd u = ((basis.col(i) + basis.col(j)) / std::sqrt(2.0)).eval();
          const double v = second_diff(u) - 0.5 * (diag[i] + diag[j]);
          fd(i, j) = v;
          fd(j, i) = v;
        }
      }
    }
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    rep.max_rel_err_hess = (fd - a).cwiseAbs().maxCoeff() / scale;
  }

  rep.pass = rep.max_rel_err_grad <= 1e-4 && rep.max_rel_err_hess <= 1e-4;
  return rep;
}

}  // namespace singopt
