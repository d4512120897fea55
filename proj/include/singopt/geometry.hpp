#pragma once

#include <Eigen/Core>

namespace singopt {

enum class ManifoldKind { Euclidean, UnitSphere };
enum class RetractionKind { Exponential, MetricProjection };

/// Minimal manifold descriptor: R^n or the unit sphere S^{n-1} embedded in
/// R^n. `c_r` bounds the retraction distortion:
/// dist(retract(x, s), x) <= c_r * ||s||.
struct ManifoldDescriptor {
  ManifoldKind kind{ManifoldKind::Euclidean};
  int ambient_dim{0};
  RetractionKind retraction{RetractionKind::Exponential};
  double c_r{1.0};

  static ManifoldDescriptor euclidean(int n);
  static ManifoldDescriptor unit_sphere(
      int n, RetractionKind retraction = RetractionKind::MetricProjection);

  int tangent_dim() const {
    return kind == ManifoldKind::UnitSphere ? ambient_dim - 1 : ambient_dim;
  }
  bool same_space(const ManifoldDescriptor& other) const {
    return kind == other.kind && ambient_dim == other.ambient_dim;
  }
};

struct Point {
  Eigen::VectorXd coords;
  ManifoldDescriptor manifold;
};

struct Tangent {
  Eigen::VectorXd vec;
  Point base;

  double norm() const { return vec.norm(); }
};

/// Validating constructors. Sphere points must be unit within 1e-12 and
/// sphere tangents orthogonal to their base point.
Point make_point(const ManifoldDescriptor& m, Eigen::VectorXd coords);
Tangent make_tangent(const Point& base, Eigen::VectorXd vec);

double dist(const Point& x, const Point& y);
Point exp_map(const Point& x, const Tangent& v);

/// Riemannian logarithm; requires dist(x, y) below the injectivity radius
/// (antipodal sphere points throw std::domain_error).
Tangent log_map(const Point& x, const Point& y);

Point retract(const Point& x, const Tangent& v);

/// Parallel transport of v along the minimizing geodesic from x to y.
Tangent transport(const Point& x, const Point& y, const Tangent& v);

/// Orthonormal basis of T_x M, returned as the columns of an
/// ambient_dim x tangent_dim matrix. Identity for Euclidean space.
Eigen::MatrixXd tangent_basis(const Point& x);

/// Orthogonal projection of an ambient vector onto T_x M.
Eigen::VectorXd project_to_tangent(const Point& x, const Eigen::VectorXd& ambient);

}  // namespace singopt
