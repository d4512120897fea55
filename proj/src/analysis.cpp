#include "singopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "singopt/errors.hpp"

namespace singopt {

namespace {

constexpr double kErrorFloor = 1e2 * std::numeric_limits<double>::epsilon();

}  // namespace

const char* rate_class_name(RateClass c) {
  switch (c) {
    case RateClass::Sublinear: return "sublinear";
    case RateClass::Linear: return "linear";
    case RateClass::Superlinear: return "superlinear";
    case RateClass::Quadratic: return "quadratic";
  }
  return "?";
}

RateReport fit_rate(const std::vector<double>& errors, int tail) {
  if (tail < 4) throw std::invalid_argument("fit_rate: tail must be >= 4");

  // Keep the prefix before the first entry at or below the floor, so that the
  // fitted pairs are consecutive.
  int usable = 0;
  while (usable < static_cast<int>(errors.size()) && errors[usable] > kErrorFloor) ++usable;
  if (usable < 4) throw InsufficientDataError("fit_rate: fewer than four usable entries");

  const int begin = std::max(0, usable - tail);
  const int count = usable - begin;
  const int pairs = count - 1;

  double mx = 0, my = 0;
  for (int i = begin; i < usable - 1; ++i) {
    mx += std::log(errors[i]);
    my += std::log(errors[i + 1]);
  }
  mx /= pairs;
  my /= pairs;
  double sxx = 0, sxy = 0;
  for (int i = begin; i < usable - 1; ++i) {
    const double dx = std::log(errors[i]) - mx;
    const double dy = std::log(errors[i + 1]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0)) {
    throw IllConditionedFitError("fit_rate: error sequence has no spread");
  }

  RateReport rep;
  rep.order_q = sxy / sxx;
  const double intercept = my - rep.order_q * mx;
  rep.rate_c = std::exp(intercept);
  rep.window_begin = begin;
  rep.window_end = usable;

  double ss = 0;
  for (int i = begin; i < usable - 1; ++i) {
    const double r = std::log(errors[i + 1]) - (rep.order_q * std::log(errors[i]) + intercept);
    ss += r * r;
  }
  rep.fit_residual = std::sqrt(ss / pairs);

  if (rep.order_q >= 1.8) {
    rep.classification = RateClass::Quadratic;
  } else if (rep.order_q > 1.1) {
    rep.classification = RateClass::Superlinear;
  } else if (rep.order_q >= 0.9 && rep.rate_c < 1.0 - 1e-3) {
    rep.classification = RateClass::Linear;
  } else {
    rep.classification = RateClass::Sublinear;
  }
  return rep;
}

namespace {

// Distance between consecutive iterates: from recorded points when present,
// otherwise from the step norm (exact for the Euclidean retraction).
double iterate_distance(const Trace& trace, const Problem& p, size_t k) {
  const auto& row = trace.rows[k];
  const auto& next = trace.rows[k + 1];
  if (row.x && next.x) return dist(*row.x, *next.x);
  if (p.manifold.kind == ManifoldKind::Euclidean) return row.step_norm;
  throw IncompleteTraceError(
      "analysis: manifold trace must record points to measure iterate distances");
}

}  // namespace

DecreaseReport measure_decrease(const Trace& trace, const Problem& p, double theta,
                                double mu_hat) {
  if (trace.rows.size() < 2) {
    throw IncompleteTraceError("measure_decrease: trace has no steps");
  }
  if (!p.oracle) {
    throw IncompleteTraceError("measure_decrease: needs f_star from the oracle");
  }
  if (!(theta >= 0.0 && theta < 1.0) || !(mu_hat > 0.0)) {
    throw std::invalid_argument("measure_decrease: invalid theta or mu_hat");
  }

  DecreaseReport rep;
  rep.omega_hat = std::numeric_limits<double>::infinity();
  rep.sigma_hat = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    const auto& row = trace.rows[k];
    if (!row.accepted) continue;
    const double decrease = row.f - trace.rows[k + 1].f;
    if (decrease < 0.0) ++rep.violations;
    const double d = iterate_distance(trace, p, k);
    rep.path_length += d;
    if (row.grad_norm <= trace.grad_tol) continue;
    rep.omega_hat = std::min(rep.omega_hat, decrease / (row.grad_norm * row.grad_norm));
    if (d > 0.0) {
      rep.sigma_hat = std::min(rep.sigma_hat, decrease / (row.grad_norm * d));
    }
  }
  const double f_gap0 = trace.rows.front().f - p.oracle->f_star;
  rep.bpl_bound = std::pow(std::max(f_gap0, 0.0), 1.0 - theta) /
                  (rep.sigma_hat * (1.0 - theta) * std::sqrt(2.0 * mu_hat));
  return rep;
}

LinearRateCheck verify_linear_rate(const Trace& trace, const Problem& p, double mu,
                                   double omega) {
  if (trace.rows.size() < 3) {
    throw NotApplicableError("verify_linear_rate: trace too short");
  }
  if (trace.termination != Termination::GradTol) {
    throw NotApplicableError("verify_linear_rate: trace did not converge");
  }
  if (!p.oracle) {
    throw NotApplicableError("verify_linear_rate: needs oracle distances");
  }
  const double f_star = p.oracle->f_star;
  const double contraction = std::max(0.0, 1.0 - 2.0 * omega * mu);

  LinearRateCheck out;
  out.fgap_bound = contraction + 0.02;
  out.dist_bound = std::sqrt(contraction) + 0.02;

  // Per-step ratios over the last few accepted steps above the noise floor.
  const int tail = 6;
  int counted = 0;
  out.fgap_ratio = 0.0;
  out.dist_ratio = 0.0;
  for (size_t k = trace.rows.size() - 1; k-- > 0 && counted < tail;) {
    const auto& row = trace.rows[k];
    const auto& next = trace.rows[k + 1];
    if (!row.accepted) continue;
    const double gap = row.f - f_star;
    const double gap_next = next.f - f_star;
    if (gap <= kErrorFloor || gap_next < 0.0) continue;
    out.fgap_ratio = std::max(out.fgap_ratio, gap_next / gap);
    if (std::isfinite(row.dist_S) && row.dist_S > kErrorFloor && std::isfinite(next.dist_S)) {
      out.dist_ratio = std::max(out.dist_ratio, next.dist_S / row.dist_S);
    }
    ++counted;
  }
  if (counted == 0) {
    throw NotApplicableError("verify_linear_rate: no usable tail iterations");
  }
  out.pass = out.fgap_ratio <= out.fgap_bound && out.dist_ratio <= out.dist_bound;
  return out;
}

}  // namespace singopt
