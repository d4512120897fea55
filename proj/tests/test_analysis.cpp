#include <cmath>
#include <vector>

#include "doctest.h"
#include "singopt/analysis.hpp"
#include "singopt/errors.hpp"
#include "singopt/solvers.hpp"

using namespace singopt;

TEST_CASE("fit_rate recovers a quadratic order") {
  std::vector<double> errors;
  for (int k = 0; k <= 4; ++k) errors.push_back(std::pow(10.0, -std::pow(2.0, k)));
  const RateReport r = fit_rate(errors, 6);
  CHECK(r.order_q == doctest::Approx(2.0).epsilon(0.005));
  CHECK(r.classification == RateClass::Quadratic);
}

TEST_CASE("fit_rate recovers a linear rate") {
  std::vector<double> errors;
  for (int k = 0; k < 30; ++k) errors.push_back(std::pow(0.5, k));
  const RateReport r = fit_rate(errors, 6);
  CHECK(r.order_q == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.rate_c == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.classification == RateClass::Linear);
  CHECK(r.fit_residual < 1e-10);
}

TEST_CASE("fit_rate classifies harmonic decay as sublinear") {
  std::vector<double> errors;
  for (int k = 1; k <= 100000; ++k) errors.push_back(1.0 / k);
  const RateReport r = fit_rate(errors, 6);
  CHECK(r.order_q == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.rate_c >= 1.0 - 1e-3);
  CHECK(r.classification == RateClass::Sublinear);
}

TEST_CASE("fit_rate order is scale invariant") {
  std::vector<double> errors;
  for (int k = 0; k < 12; ++k) errors.push_back(std::pow(0.3, k * 1.3 + 1));
  const RateReport a = fit_rate(errors, 6);
  for (double& e : errors) e *= 1234.5;
  const RateReport b = fit_rate(errors, 6);
  CHECK(std::abs(a.order_q - b.order_q) < 1e-9);
}

TEST_CASE("fit_rate guards its inputs") {
  CHECK_THROWS_AS(fit_rate({1.0, 0.5, 0.25}, 6), InsufficientDataError);
  CHECK_THROWS_AS(fit_rate({1.0, 1e-20, 1e-21, 1e-22, 1e-23}, 6), InsufficientDataError);
  CHECK_THROWS_AS(fit_rate({1.0, 0.5, 0.25, 0.125, 0.06}, 3), std::invalid_argument);
  // floor truncation keeps the usable prefix
  std::vector<double> errors = {1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-30, 1e-31};
  const RateReport r = fit_rate(errors, 6);
  CHECK(r.window_end == 5);
  CHECK(r.classification == RateClass::Linear);
}

namespace {

Problem square_1d() { return make_diag_quadratic(Eigen::VectorXd::Constant(1, 2.0), "sq1d"); }

Trace gd_trace_on_square(double gamma, double x0) {
  const Problem p = square_1d();
  SolverConfig cfg;
  cfg.algorithm = Algorithm::GD;
  cfg.gd.mode = GDStepMode::Constant;
  cfg.gd.gamma = gamma;
  cfg.record_points = true;
  return run_gd(p, make_point(p.manifold, Eigen::VectorXd::Constant(1, x0)), cfg);
}

}  // namespace

TEST_CASE("measure_decrease on constant-step GD is exact") {
  const Trace tr = gd_trace_on_square(0.25, 1.0);
  const DecreaseReport d = measure_decrease(tr, square_1d(), 0.5, 2.0);
  CHECK(d.omega_hat == doctest::Approx(0.1875).epsilon(1e-12));
  CHECK(d.violations == 0);
  // the iterates halve each step, so the path length is 2 |x0 - x1| = 2 * 0.5
  CHECK(d.path_length == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(d.path_length <= d.bpl_bound);
}

TEST_CASE("measure_decrease requires steps and an oracle") {
  const Trace empty{};
  CHECK_THROWS_AS(measure_decrease(empty, square_1d(), 0.5, 2.0), IncompleteTraceError);
  const Trace tr = gd_trace_on_square(0.25, 1.0);
  CHECK_THROWS_AS(measure_decrease(tr, square_1d(), 1.5, 2.0), std::invalid_argument);
}

TEST_CASE("verify_linear_rate matches the GD contraction exactly") {
  const Trace tr = gd_trace_on_square(0.25, 1.0);
  const LinearRateCheck c = verify_linear_rate(tr, square_1d(), 2.0, 0.1875);
  CHECK(c.fgap_bound == doctest::Approx(0.27));  // 1 - 2 omega mu + 0.02
  CHECK(c.fgap_ratio == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(c.dist_ratio == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(c.pass);
}

TEST_CASE("verify_linear_rate refuses short or unconverged traces") {
  Trace stub;
  stub.rows.push_back(IterRecord{});
  CHECK_THROWS_AS(verify_linear_rate(stub, square_1d(), 2.0, 0.1), NotApplicableError);

  const Problem quartic = build_problem({"quartic1d", {}, 0});
  SolverConfig cfg;
  cfg.algorithm = Algorithm::GD;
  cfg.gd.mode = GDStepMode::Constant;
  cfg.gd.gamma = 0.1;
  cfg.max_iters = 50;
  const Trace tr = run_gd(quartic, make_point(quartic.manifold,
                                              Eigen::VectorXd::Constant(1, 1.0)),
                          cfg);
  CHECK(tr.termination == Termination::MaxIters);
  CHECK_THROWS_AS(verify_linear_rate(tr, quartic, 2.0, 0.1), NotApplicableError);
}

TEST_CASE("quadratic dist fits imply quadratic grad and f-gap fits on circle ARC") {
  const Problem p = build_problem({"circle", {}, 0});
  SolverConfig cfg;
  cfg.algorithm = Algorithm::ARC;
  cfg.record_points = true;
  Eigen::VectorXd x0(2);
  x0 << 1.25, 0.3;
  const Trace tr = run_arc(p, make_point(p.manifold, x0), cfg);
  const RateReport dist_rate = fit_rate(tr.dist_sequence());
  REQUIRE(dist_rate.classification == RateClass::Quadratic);
  const RateReport grad_rate = fit_rate(tr.grad_norm_sequence());
  CHECK(grad_rate.order_q >= 1.8);
  std::vector<double> fgap = tr.f_sequence();
  // f-gaps scale like dist^2, so the fitted order matches up to noise
  const RateReport f_rate = fit_rate(fgap);
  CHECK(f_rate.order_q >= 1.8);
}
