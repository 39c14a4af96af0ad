#pragma once

// Constant-curvature model spaces (kappa <= 0) and the comparison functions
// S_k, C_k that govern distance spheres in them.

#include <Eigen/Dense>

namespace tamed::kernel {

using Vec = Eigen::VectorXd;

/// S_k(t): sinh(sqrt(-k) t)/sqrt(-k) for k < 0, t for k = 0. Requires t >= 0.
double s_kappa(double kappa, double t);
/// C_k(t) = S_k'(t).
double c_kappa(double kappa, double t);
/// C_k/S_k at t > 0: principal curvature of the geodesic sphere of radius t.
double ct_over_st(double kappa, double t);
/// S_k/C_k, continuous at t = 0 where it vanishes; this is the tamedness weight.
double st_over_ct(double kappa, double t);

/// Simply connected space form of curvature kappa <= 0 and dimension n.
///
/// Euclidean points live in R^n. Hyperbolic points live on the upper sheet of
/// the hyperboloid <x,x>_L = 1/kappa in R^{n+1}, with the Lorentz form
/// <x,y>_L = -x0 y0 + sum_i xi yi.
class AmbientModel {
 public:
  AmbientModel(double curvature, int dim);

  static AmbientModel euclidean(int dim) { return {0.0, dim}; }
  static AmbientModel hyperbolic(double curvature, int dim) { return {curvature, dim}; }

  double curvature() const noexcept { return kappa_; }
  int dim() const noexcept { return dim_; }
  bool is_hyperboloid() const noexcept { return kappa_ < 0.0; }
  /// Coordinates per point: n (Euclidean) or n + 1 (hyperboloid).
  int coord_count() const noexcept { return is_hyperboloid() ? dim_ + 1 : dim_; }

  double inner(const Vec& a, const Vec& b) const;
  double norm(const Vec& v) const;

  /// The distinguished point: 0, or (1/sqrt(-k), 0, ..., 0) on the hyperboloid.
  Vec origin() const;
  /// Hyperboloid point above the spatial coordinates (x1..xn); identity for Euclidean.
  Vec lift(const Vec& spatial) const;

  /// Rescales onto the sheet <x,x>_L = 1/kappa. Throws DomainError if x is not timelike future-pointing.
  Vec renormalize(const Vec& x) const;
  /// |kappa <x,x>_L - 1| <= tol and x0 > 0 (always true for Euclidean points of the right size).
  bool contains(const Vec& x, double tol = 1e-10) const;
  /// Orthogonal projection of w onto T_y N.
  Vec tangent_project(const Vec& y, const Vec& w) const;

  /// Point reached at unit time along the geodesic with initial velocity v at y.
  Vec exp(const Vec& y, const Vec& v) const;

  double distance(const Vec& p, const Vec& q) const;
  /// Unit gradient of the distance to `pole`, evaluated at y != pole.
  Vec grad_distance(const Vec& pole, const Vec& y) const;
  /// Hessian of the distance to `pole` at y applied to tangent vectors X, Y:
  /// (C_k/S_k)(rho) (<X,Y> - <X,grad rho><Y,grad rho>).
  double hess_distance(const Vec& pole, const Vec& y, const Vec& X, const Vec& Y) const;

 private:
  double kappa_;
  int dim_;
};

/// A validated point of a model space.
class AmbientPoint {
 public:
  AmbientPoint(const AmbientModel& model, Vec coords);
  const Vec& coords() const noexcept { return x_; }

 private:
  Vec x_;
};

/// Tangent vector together with its base point.
struct AmbientVector {
  Vec base;
  Vec coords;
};

double model_distance(const AmbientModel& model, const AmbientPoint& p, const AmbientPoint& q);
AmbientVector grad_rho(const AmbientModel& model, const AmbientPoint& pole, const AmbientPoint& y);
double hess_rho(const AmbientModel& model, const AmbientPoint& pole, const AmbientPoint& y,
                const Vec& X, const Vec& Y);

}  // namespace tamed::kernel
