#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "singopt/errors.hpp"
#include "singopt/subsolvers.hpp"

using namespace singopt;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

ModelData model2(double h00, double h01, double h11, double g0, double g1) {
  MatrixXd h(2, 2);
  h << h00, h01, h01, h11;
  VectorXd g(2);
  g << g0, g1;
  return make_model_data(g, h);
}

double quad_model(const ModelData& md, const VectorXd& s) {
  return md.g.dot(s) + 0.5 * s.dot(md.H * s);
}

double cubic_model(const ModelData& md, double sigma, const VectorXd& s) {
  const double n = s.norm();
  return quad_model(md, s) + sigma / 3.0 * n * n * n;
}

// Dense grid minimum of the quadratic model over the ball (dim <= 3),
// random sampling otherwise.
double brute_force_ball_min(const ModelData& md, double radius, std::mt19937_64& rng,
                            bool cubic, double sigma) {
  auto value = [&](const VectorXd& s) {
    return cubic ? cubic_model(md, sigma, s) : quad_model(md, s);
  };
  double best = 0.0;
  const int dim = md.dim;
  if (dim <= 3) {
    const int n_grid = dim <= 2 ? 201 : 81;
    std::vector<int> idx(dim, 0);
    VectorXd s(dim);
    while (true) {
      for (int d = 0; d < dim; ++d) {
        s[d] = radius * (2.0 * idx[d] / (n_grid - 1) - 1.0);
      }
      if (s.norm() <= radius) best = std::min(best, value(s));
      int d = 0;
      while (d < dim && ++idx[d] == n_grid) idx[d++] = 0;
      if (d == dim) break;
    }
    return best;
  }
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd s(dim);
  for (int trial = 0; trial < 200000; ++trial) {
    for (int i = 0; i < dim; ++i) s[i] = gauss(rng);
    s *= radius * std::pow(unif(rng), 1.0 / dim) / s.norm();
    best = std::min(best, value(s));
  }
  return best;
}

ModelData random_model(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = gauss(rng);
  MatrixXd h = (a + a.transpose()) / 2.0;
  VectorXd g(dim);
  for (int i = 0; i < dim; ++i) g[i] = gauss(rng);
  return make_model_data(g, h);
}

}  // namespace

TEST_CASE("newton step basics") {
  const ModelData identity = model2(1, 0, 1, 0.3, -0.7);
  const VectorXd s = newton_step(identity, 1e-12);
  CHECK((s + identity.g).norm() < 1e-14);

  const ModelData zero = model2(0, 0, 0, 1.0, 2.0);
  CHECK(newton_step(zero, 1e-12).norm() == 0.0);

  CHECK_THROWS_AS(newton_step(identity, 0.0), std::invalid_argument);
}

TEST_CASE("newton step reproduces the closed-form escape step") {
  // f(x, y) = (x^2 + 1) y^2 / 2 at x = sqrt((1 - t)/3), y = sqrt(t):
  // the full step is -(x^3 + x, (x^2 - 1) y) / (3 x^2 - 1).
  const double t = 0.01;
  const double x = std::sqrt((1.0 - t) / 3.0);
  const double y = std::sqrt(t);
  const ModelData md = model2(y * y, 2 * x * y, x * x + 1.0, x * y * y, (x * x + 1.0) * y);
  const VectorXd s = newton_step(md, 1e-14);
  const double denom = 3 * x * x - 1.0;
  const double expect_y = y - (x * x - 1.0) * y / denom;
  CHECK(std::abs((y + s[1]) - expect_y) <= 1e-9 * std::abs(expect_y));
  // lands at distance (2/3)(1 - t)/sqrt(t) from the x-axis
  CHECK(std::abs(std::abs(y + s[1]) - (2.0 / 3.0) * (1.0 - t) / std::sqrt(t)) <=
        1e-9 * (2.0 / 3.0) * (1.0 - t) / std::sqrt(t));
}

TEST_CASE("cauchy step branches") {
  // exact line minimum inside the region
  VectorXd s = cauchy_step(model2(1, 0, 1, 2.0, 0.0), 5.0);
  CHECK(s[0] == doctest::Approx(-2.0));
  CHECK(s[1] == 0.0);

  // negative curvature: go to the boundary
  s = cauchy_step(model2(-1, 0, -1, 1.0, 0.0), 0.3);
  CHECK(s[0] == doctest::Approx(-0.3));

  // interior minimum when the radius is large
  const ModelData md = model2(2, 0, 8, 0.5, 2.0);
  const double ghg = md.g.dot(md.H * md.g);
  const double t_exact = md.g.squaredNorm() / ghg;
  s = cauchy_step(md, 100.0);
  CHECK((s + t_exact * md.g).norm() < 1e-14);

  // zero gradient
  CHECK(cauchy_step(model2(1, 0, 1, 0, 0), 1.0).norm() == 0.0);

  // model decrease of at least ||g|| ||s|| / 2
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const ModelData m = random_model(3, rng);
    const VectorXd sc = cauchy_step(m, 0.7);
    CHECK(-quad_model(m, sc) >= 0.5 * m.g.norm() * sc.norm() - 1e-12);
  }
}

TEST_CASE("exact TRS: interior and boundary") {
  TrsSolution sol = solve_trs_exact(model2(2, 0, 2, -2.0, 0.0), 10.0);
  CHECK(sol.s[0] == doctest::Approx(1.0));
  CHECK(sol.lambda == 0.0);
  CHECK(!sol.on_boundary);

  sol = solve_trs_exact(model2(1, 0, 1, -4.0, 0.0), 1.0);
  CHECK(sol.s[0] == doctest::Approx(1.0));
  CHECK(sol.lambda == doctest::Approx(3.0));
  CHECK(sol.on_boundary);
  CHECK(!sol.hard_case);
}

TEST_CASE("exact TRS reproduces the circle hard case") {
  // Hessian of (x^2 + y^2 - 1)^2 at (0, 1 - t) with t = 0.1, Delta = 0.5.
  const double t = 0.1;
  const double r = 1.0 - t;
  const double lam1 = 4.0 * (r * r - 1.0);
  const double lam2 = 12.0 * r * r - 4.0;
  const double gy = 4.0 * (r * r - 1.0) * r;
  const double delta = 0.5;
  const TrsSolution sol = solve_trs_exact(model2(lam1, 0, lam2, 0.0, gy), delta);

  CHECK(sol.hard_case);
  CHECK(sol.on_boundary);
  CHECK(sol.lambda == doctest::Approx(4.0 * t * (2.0 - t)).epsilon(1e-10));
  const double sy = t * (2.0 - t) / (2.0 * (1.0 - t));
  CHECK(sol.s[1] == doctest::Approx(sy));
  CHECK(sol.s[0] == doctest::Approx(std::sqrt(delta * delta - sy * sy)));  // positive tie-break
  CHECK(sol.s.norm() == doctest::Approx(delta));

  // dominates a dense grid over the disk
  std::mt19937_64 rng(1);
  ModelData md = model2(lam1, 0, lam2, 0.0, gy);
  const double grid_min = brute_force_ball_min(md, delta, rng, false, 0.0);
  CHECK(quad_model(md, sol.s) <= grid_min + 1e-6);
}

TEST_CASE("exact TRS rejects a non-symmetric Hessian") {
  MatrixXd h(2, 2);
  h << 1, 0.5, -0.5, 1;
  VectorXd g(2);
  g << 1, 1;
  ModelData md;
  md.g = g;
  md.H = h;
  md.dim = 2;
  CHECK_THROWS_AS(solve_trs_exact(md, 1.0), std::invalid_argument);
}

TEST_CASE("exact TRS satisfies the KKT conditions on random instances") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  std::uniform_int_distribution<int> dims(1, 6);
  for (int trial = 0; trial < 500; ++trial) {
    const int dim = dims(rng);
    const ModelData md = random_model(dim, rng);
    const double delta = unif(rng);
    const TrsSolution sol = solve_trs_exact(md, delta);

    CHECK(sol.s.norm() <= delta * (1 + 1e-10));
    CHECK(std::abs(sol.lambda * (delta - sol.s.norm())) <= 1e-8 * std::max(1.0, sol.lambda));
    // stationarity
    const VectorXd resid = md.H * sol.s + sol.lambda * sol.s + md.g;
    CHECK(resid.norm() <= 1e-7 * std::max(1.0, md.g.norm()));
    // H + lambda I is positive semidefinite
    const Eigen::VectorXd eigs =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(md.H).eigenvalues();
    CHECK(eigs[0] + sol.lambda >= -1e-8);
  }
}

TEST_CASE("exact TRS dominates brute force") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  std::uniform_int_distribution<int> dims(1, 4);
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = dims(rng);
    const ModelData md = random_model(dim, rng);
    const double delta = unif(rng);
    const TrsSolution sol = solve_trs_exact(md, delta);
    const double sampled = brute_force_ball_min(md, delta, rng, false, 0.0);
    CHECK(quad_model(md, sol.s) <= sampled + 1e-6);
  }
}

TEST_CASE("truncated CG basics") {
  // PD with a huge radius: solves the Newton system
  const ModelData md = model2(4, 1, 3, 1.0, -2.0);
  const VectorXd s = solve_trs_tcg(md, 1e6, 1e-10, 1.0, 50);
  CHECK((md.H * s + md.g).norm() < 1e-8);

  // first iterate is the Cauchy point
  const VectorXd s1 = solve_trs_tcg(md, 0.3, 0.0, 1.0, 1);
  const VectorXd sc = cauchy_step(md, 0.3);
  CHECK((s1 - sc).norm() < 1e-14);

  // negative curvature exits on the boundary
  const ModelData neg = model2(-1, 0, 2, 1.0, 1.0);
  const VectorXd sn = solve_trs_tcg(neg, 0.5, 0.1, 1.0, 50);
  CHECK(sn.norm() == doctest::Approx(0.5));

  // zero gradient
  CHECK(solve_trs_tcg(model2(1, 0, 1, 0, 0), 1.0, 0.1, 1.0, 10).norm() == 0.0);
}

TEST_CASE("truncated CG never loses to the Cauchy point") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const ModelData md = random_model(4, rng);
    const double delta = unif(rng);
    const VectorXd s = solve_trs_tcg(md, delta, 0.1, 1.0, 20);
    const VectorXd sc = cauchy_step(md, delta);
    CHECK(s.norm() <= delta * (1 + 1e-12));
    CHECK(quad_model(md, s) <= quad_model(md, sc) + 1e-12);
  }
}

TEST_CASE("truncated CG decreases the model monotonically over inner iterations") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelData md = random_model(5, rng);
    double prev = 0.0;
    for (int cap = 1; cap <= 8; ++cap) {
      const VectorXd s = solve_trs_tcg(md, 1.0, 1e-14, 1.0, cap);
      const double value = quad_model(md, s);
      CHECK(value <= prev + 1e-12);
      prev = value;
    }
  }
}

TEST_CASE("cubic subproblem scalar secular solutions") {
  // H = I, g = e1, sigma = 1: t (1 + t) = 1
  CubicSolution sol = solve_cubic(model2(1, 0, 1, 1.0, 0.0), 1.0, 0.1,
                                  CubicMode::ExactSecular);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  CHECK(sol.s[0] == doctest::Approx(-golden).epsilon(1e-10));
  CHECK(std::abs(sol.s[1]) < 1e-12);
  CHECK(sol.decrease_ok);
  CHECK(sol.gradient_cond_ok);
  CHECK(sol.model_grad_norm <= 1e-10 * 1.0);

  // zero gradient with PSD Hessian
  sol = solve_cubic(model2(1, 0, 0, 0, 0), 1.0, 0.1, CubicMode::ExactSecular);
  CHECK(sol.s.norm() == 0.0);
  CHECK(sol.decrease_ok);
  CHECK(sol.gradient_cond_ok);

  // singular direction with the gradient on the stiff axis: t (8 + t) = 0.1
  sol = solve_cubic(model2(8, 0, 0, 0.1, 0.0), 1.0, 0.1, CubicMode::ExactSecular);
  const double expect = (-8.0 + std::sqrt(64.0 + 0.4)) / 2.0;
  CHECK(sol.s[0] == doctest::Approx(-expect).epsilon(1e-8));
  CHECK(sol.model_grad_norm <= 1e-10 * 0.1);
}

TEST_CASE("both cubic modes certify the inexactness conditions") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> sig(0.05, 5.0);
  std::uniform_int_distribution<int> dims(1, 6);
  for (int trial = 0; trial < 400; ++trial) {
    const int dim = dims(rng);
    const ModelData md = random_model(dim, rng);
    const double sigma = sig(rng);
    for (const CubicMode mode : {CubicMode::ExactSecular, CubicMode::InexactGradient}) {
      const CubicSolution sol = solve_cubic(md, sigma, 0.1, mode);
      INFO("mode ", static_cast<int>(mode), " dim ", dim);
      CHECK(sol.decrease_ok);
      CHECK(sol.gradient_cond_ok);
      // step-norm bound from the model decrease
      const double lam_min =
          Eigen::SelfAdjointEigenSolver<MatrixXd>(md.H).eigenvalues()[0];
      CHECK(sol.s.norm() <=
            cubic_step_norm_bound(md.g.norm(), sigma, lam_min) * (1 + 1e-9) + 1e-12);
      if (mode == CubicMode::ExactSecular) {
        CHECK(sol.model_grad_norm <= 1e-10 * std::max(1.0, md.g.norm()));
      }
    }
  }
}

TEST_CASE("cubic exact mode dominates brute force") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> sig(0.2, 3.0);
  std::uniform_int_distribution<int> dims(1, 3);
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = dims(rng);
    const ModelData md = random_model(dim, rng);
    const double sigma = sig(rng);
    const CubicSolution sol = solve_cubic(md, sigma, 0.1, CubicMode::ExactSecular);
    const double radius = std::max(3.0 * sol.s.norm(), 0.3);
    const double sampled = brute_force_ball_min(md, radius, rng, true, sigma);
    CHECK(cubic_model(md, sigma, sol.s) <= sampled + 1e-6);
  }
}

TEST_CASE("inexact mode starts no worse than the cubic Cauchy point") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelData md = random_model(3, rng);
    const double sigma = 0.7;
    const CubicSolution sol = solve_cubic(md, sigma, 0.1, CubicMode::InexactGradient);
    // cubic Cauchy point along -g
    const double gn = md.g.norm();
    const double q = md.g.dot(md.H * md.g) / (gn * gn);
    const double t = (-q + std::sqrt(q * q + 4.0 * sigma * gn)) / (2.0 * sigma);
    const VectorXd s_c = (-t / gn) * md.g;
    CHECK(cubic_model(md, sigma, sol.s) <= cubic_model(md, sigma, s_c) + 1e-12);
  }
}

TEST_CASE("cubic hard case pads with the minimal eigenvector") {
  // g lies entirely on the stiff axis while the soft axis has negative
  // curvature; the solution gains a component along the soft axis.
  const ModelData md = model2(-2.0, 0.0, 5.0, 0.0, 1.0);
  const CubicSolution sol = solve_cubic(md, 1.0, 0.1, CubicMode::ExactSecular);
  CHECK(sol.s.norm() == doctest::Approx(2.0).epsilon(1e-9));  // nu/sigma with nu = 2
  CHECK(sol.s[0] > 0.0);  // positive tie-break
  CHECK(sol.decrease_ok);
  CHECK(sol.gradient_cond_ok);
}

TEST_CASE("invalid cubic arguments") {
  const ModelData md = model2(1, 0, 1, 1, 0);
  CHECK_THROWS_AS(solve_cubic(md, 0.0, 0.1, CubicMode::ExactSecular), std::invalid_argument);
  CHECK_THROWS_AS(solve_cubic(md, 1.0, -1.0, CubicMode::ExactSecular), std::invalid_argument);
}
