#include "singopt/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace singopt {

namespace {

constexpr double kPointTol = 1e-12;
constexpr double kAntipodalTol = 1e-9;

double clamp_unit(double t) { return std::min(1.0, std::max(-1.0, t)); }

void require_same_space(const ManifoldDescriptor& a, const ManifoldDescriptor& b) {
  if (!a.same_space(b)) {
    throw std::invalid_argument("geometry: points live on different manifolds");
  }
}

void require_base(const Point& x, const Tangent& v) {
  require_same_space(x.manifold, v.base.manifold);
  if ((x.coords - v.base.coords).lpNorm<Eigen::Infinity>() > 1e-10) {
    throw std::invalid_argument("geometry: tangent vector is not based at the given point");
  }
}

}  // namespace

ManifoldDescriptor ManifoldDescriptor::euclidean(int n) {
  if (n <= 0) throw std::invalid_argument("ManifoldDescriptor: dimension must be positive");
  return ManifoldDescriptor{ManifoldKind::Euclidean, n, RetractionKind::Exponential, 1.0};
}

ManifoldDescriptor ManifoldDescriptor::unit_sphere(int n, RetractionKind retraction) {
  if (n < 2) throw std::invalid_argument("ManifoldDescriptor: sphere needs ambient dimension >= 2");
  return ManifoldDescriptor{ManifoldKind::UnitSphere, n, retraction, 1.0};
}

Point make_point(const ManifoldDescriptor& m, Eigen::VectorXd coords) {
  if (coords.size() != m.ambient_dim) {
    throw std::invalid_argument("make_point: coordinate dimension mismatch");
  }
  if (m.kind == ManifoldKind::UnitSphere) {
    if (std::abs(coords.norm() - 1.0) > kPointTol) {
      throw std::invalid_argument("make_point: sphere point is not unit norm");
    }
  }
  return Point{std::move(coords), m};
}

Tangent make_tangent(const Point& base, Eigen::VectorXd vec) {
  if (vec.size() != base.manifold.ambient_dim) {
    throw std::invalid_argument("make_tangent: vector dimension mismatch");
  }
  if (base.manifold.kind == ManifoldKind::UnitSphere) {
    const double d = vec.dot(base.coords);
    if (std::abs(d) > kPointTol * std::max(1.0, vec.norm())) {
      throw std::invalid_argument("make_tangent: sphere tangent not orthogonal to base");
    }
    vec -= d * base.coords;  // kill residual normal component
  }
  return Tangent{std::move(vec), base};
}

double dist(const Point& x, const Point& y) {
  require_same_space(x.manifold, y.manifold);
  if (x.manifold.kind == ManifoldKind::Euclidean) {
    return (x.coords - y.coords).norm();
  }
  // Chord-based arc length; well conditioned at small separations where the
  // direct arccos of the inner product loses half the digits.
  const double half_chord = 0.5 * (x.coords - y.coords).norm();
  return 2.0 * std::asin(std::min(1.0, half_chord));
}

Point exp_map(const Point& x, const Tangent& v) {
  require_base(x, v);
  if (x.manifold.kind == ManifoldKind::Euclidean) {
    return Point{x.coords + v.vec, x.manifold};
  }
  const double n = v.vec.norm();
  if (n < 1e-300) return x;
  Eigen::VectorXd c = std::cos(n) * x.coords + (std::sin(n) / n) * v.vec;
  c /= c.norm();
  return Point{std::move(c), x.manifold};
}

Tangent log_map(const Point& x, const Point& y) {
  require_same_space(x.manifold, y.manifold);
  if (x.manifold.kind == ManifoldKind::Euclidean) {
    return Tangent{y.coords - x.coords, x};
  }
  const double c = clamp_unit(x.coords.dot(y.coords));
  const double d = dist(x, y);
  if (d > M_PI - kAntipodalTol) {
    throw std::domain_error("log_map: antipodal points on the sphere");
  }
  Eigen::VectorXd u = y.coords - c * x.coords;
  const double un = u.norm();
  if (un < 1e-15) return Tangent{Eigen::VectorXd::Zero(x.coords.size()), x};
  u *= d / un;
  u -= u.dot(x.coords) * x.coords;
  return Tangent{std::move(u), x};
}

Point retract(const Point& x, const Tangent& v) {
  require_base(x, v);
  if (x.manifold.kind == ManifoldKind::Euclidean ||
      x.manifold.retraction == RetractionKind::Exponential) {
    return exp_map(x, v);
  }
  Eigen::VectorXd c = x.coords + v.vec;
  const double n = c.norm();
  if (n < 1e-300) throw std::domain_error("retract: metric projection undefined at the origin");
  c /= n;
  return Point{std::move(c), x.manifold};
}

Tangent transport(const Point& x, const Point& y, const Tangent& v) {
  require_base(x, v);
  require_same_space(x.manifold, y.manifold);
  if (x.manifold.kind == ManifoldKind::Euclidean) {
    return Tangent{v.vec, y};
  }
  const Tangent u = log_map(x, y);  // throws on antipodal pairs
  const double d = u.vec.norm();
  if (d < 1e-15) return Tangent{v.vec, y};
  const Eigen::VectorXd e = u.vec / d;
  const double a = v.vec.dot(e);
  Eigen::VectorXd w = v.vec + a * ((std::cos(d) - 1.0) * e - std::sin(d) * x.coords);
  w -= w.dot(y.coords) * y.coords;
  return Tangent{std::move(w), y};
}

Eigen::MatrixXd tangent_basis(const Point& x) {
  const int n = x.manifold.ambient_dim;
  if (x.manifold.kind == ManifoldKind::Euclidean) {
    return Eigen::MatrixXd::Identity(n, n);
  }
  // Columns 1..n-1 of the full Householder Q of x span the complement of x.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x.coords);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - 1);
}

Eigen::VectorXd project_to_tangent(const Point& x, const Eigen::VectorXd& ambient) {
  if (ambient.size() != x.manifold.ambient_dim) {
    throw std::invalid_argument("project_to_tangent: dimension mismatch");
  }
  if (x.manifold.kind == ManifoldKind::Euclidean) return ambient;
  return ambient - ambient.dot(x.coords) * x.coords;
}

}  // namespace singopt
