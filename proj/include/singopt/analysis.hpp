#pragma once

#include <vector>

#include "singopt/problems.hpp"
#include "singopt/solvers.hpp"

namespace singopt {

enum class RateClass { Sublinear, Linear, Superlinear, Quadratic };

const char* rate_class_name(RateClass c);

/// Fitted convergence order from log e_{k+1} = q log e_k + log c over the
/// tail of a positive error sequence.
struct RateReport {
  double order_q{0.0};
  double rate_c{0.0};
  int window_begin{0};
  int window_end{0};  // one past the last entry used
  double fit_residual{0.0};
  RateClass classification{RateClass::Sublinear};
};

/// Entries below 1e2 * machine epsilon are dropped (suffix truncation); the
/// fit uses the last `tail` surviving entries. Throws InsufficientDataError
/// when fewer than four usable entries remain.
RateReport fit_rate(const std::vector<double>& errors, int tail = 6);

struct DecreaseReport {
  double omega_hat{0.0};   // inf (f_k - f_{k+1}) / ||grad f_k||^2
  double sigma_hat{0.0};   // inf (f_k - f_{k+1}) / (||grad f_k|| dist(x_k, x_{k+1}))
  double path_length{0.0};
  double bpl_bound{0.0};
  int violations{0};  // accepted steps that increased f
};

/// Per-iteration decrease constants, iterate path length, and the path-length
/// bound (f(x_0) - f_star)^(1-theta) / (sigma_hat (1-theta) sqrt(2 mu_hat)),
/// with (theta, mu_hat) supplied by the landscape estimators.
DecreaseReport measure_decrease(const Trace& trace, const Problem& p, double theta,
                                double mu_hat);

struct LinearRateCheck {
  bool pass{false};
  double fgap_ratio{0.0};
  double dist_ratio{0.0};
  double fgap_bound{0.0};
  double dist_bound{0.0};
};

/// Checks the tail of a converged trace against the linear rates implied by
/// sufficient decrease omega and a PL constant mu: f-gap ratio <= 1 - 2 omega mu
/// and distance ratio <= sqrt(1 - 2 omega mu), each with +0.02 slack.
/// Throws NotApplicableError for non-converged or trivial traces.
LinearRateCheck verify_linear_rate(const Trace& trace, const Problem& p, double mu,
                                   double omega);

}  // namespace singopt
