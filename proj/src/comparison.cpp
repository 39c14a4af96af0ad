#include "tamed/comparison.hpp"

#include <cmath>
#include <string>

#include "tamed/errors.hpp"

namespace tamed::kernel {

namespace {

// Below this value of |k| t^2 the hyperbolic forms lose digits to cancellation
// and the Taylor expansion about k = 0 is used instead.
constexpr double kSeriesThreshold = 1e-8;

void require_kappa(double kappa) {
  if (!(kappa <= 0.0)) throw DomainError("curvature must be <= 0, got " + std::to_string(kappa));
}

void require_length(double t) {
  if (!(t >= 0.0)) throw DomainError("length must be >= 0, got " + std::to_string(t));
}

}  // namespace

double s_kappa(double kappa, double t) {
  require_kappa(kappa);
  require_length(t);
  const double k = -kappa;
  if (k == 0.0) return t;
  if (k * t * t < kSeriesThreshold) return t * (1.0 + k * t * t / 6.0);
  const double s = std::sqrt(k);
  return std::sinh(s * t) / s;
}

double c_kappa(double kappa, double t) {
  require_kappa(kappa);
  require_length(t);
  const double k = -kappa;
  if (k == 0.0) return 1.0;
  if (k * t * t < kSeriesThreshold) return 1.0 + k * t * t / 2.0;
  return std::cosh(std::sqrt(k) * t);
}

double ct_over_st(double kappa, double t) {
  require_kappa(kappa);
  require_length(t);
  if (t == 0.0) throw DomainError("C_k/S_k is singular at t = 0");
  const double k = -kappa;
  if (k == 0.0) return 1.0 / t;
  if (k * t * t < kSeriesThreshold) return (1.0 + k * t * t / 3.0) / t;
  const double s = std::sqrt(k);
  return s / std::tanh(s * t);
}

double st_over_ct(double kappa, double t) {
  require_kappa(kappa);
  require_length(t);
  const double k = -kappa;
  if (k == 0.0) return t;
  if (k * t * t < kSeriesThreshold) return t * (1.0 - k * t * t / 3.0);
  const double s = std::sqrt(k);
  return std::tanh(s * t) / s;
}

AmbientModel::AmbientModel(double curvature, int dim) : kappa_(curvature), dim_(dim) {
  require_kappa(curvature);
  if (dim < 2) throw DomainError("ambient dimension must be >= 2");
}

double AmbientModel::inner(const Vec& a, const Vec& b) const {
  if (!is_hyperboloid()) return a.dot(b);
  return -a[0] * b[0] + a.tail(dim_).dot(b.tail(dim_));
}

double AmbientModel::norm(const Vec& v) const { return std::sqrt(std::max(inner(v, v), 0.0)); }

Vec AmbientModel::origin() const {
  Vec o = Vec::Zero(coord_count());
  if (is_hyperboloid()) o[0] = 1.0 / std::sqrt(-kappa_);
  return o;
}

Vec AmbientModel::lift(const Vec& spatial) const {
  if (spatial.size() != dim_) throw DomainError("lift expects " + std::to_string(dim_) + " coordinates");
  if (!is_hyperboloid()) return spatial;
  Vec x(dim_ + 1);
  x[0] = std::sqrt(-1.0 / kappa_ + spatial.squaredNorm());
  x.tail(dim_) = spatial;
  return x;
}

Vec AmbientModel::renormalize(const Vec& x) const {
  if (x.size() != coord_count()) throw DomainError("point has wrong number of coordinates");
  if (!is_hyperboloid()) return x;
  const double q = inner(x, x);
  if (!(q < 0.0) || !(x[0] > 0.0)) throw DomainError("point is not on the future sheet of the hyperboloid");
  return x * std::sqrt((1.0 / kappa_) / q);
}

bool AmbientModel::contains(const Vec& x, double tol) const {
  if (x.size() != coord_count() || !x.allFinite()) return false;
  if (!is_hyperboloid()) return true;
  return x[0] > 0.0 && std::abs(kappa_ * inner(x, x) - 1.0) <= tol;
}

Vec AmbientModel::tangent_project(const Vec& y, const Vec& w) const {
  if (!is_hyperboloid()) return w;
  // <y,y>_L = 1/k, so the normal component of w is k <w,y>_L y.
  return w - kappa_ * inner(w, y) * y;
}

Vec AmbientModel::exp(const Vec& y, const Vec& v) const {
  if (!is_hyperboloid()) return y + v;
  const double len = norm(v);
  if (len == 0.0) return y;
  const double s = std::sqrt(-kappa_);
  return std::cosh(s * len) * y + (std::sinh(s * len) / (s * len)) * v;
}

double AmbientModel::distance(const Vec& p, const Vec& q) const {
  if (!is_hyperboloid()) return (p - q).norm();
  const double arg = kappa_ * inner(p, q);
  if (arg < 1.0 - 1e-9) throw DomainError("points are numerically off the hyperboloid sheet");
  const double s = std::sqrt(-kappa_);
  if (arg >= 2.0) return std::acosh(arg) / s;
  // Chord form: <p-q,p-q>_L = (2 sinh(s d / 2) / s)^2 keeps short distances accurate.
  const Vec diff = p - q;
  const double chord = std::sqrt(std::max(inner(diff, diff), 0.0));
  return 2.0 * std::asinh(s * chord / 2.0) / s;
}

Vec AmbientModel::grad_distance(const Vec& pole, const Vec& y) const {
  const Vec w = tangent_project(y, y - pole);
  const double len = norm(w);
  if (!(len > 1e-14 * std::max(1.0, y.norm()))) throw DomainError("distance function is not differentiable at its pole");
  return w / len;
}

double AmbientModel::hess_distance(const Vec& pole, const Vec& y, const Vec& X, const Vec& Y) const {
  const Vec grad = grad_distance(pole, y);
  const Vec Xt = tangent_project(y, X);
  const Vec Yt = tangent_project(y, Y);
  const double rho = distance(pole, y);
  return ct_over_st(kappa_, rho) * (inner(Xt, Yt) - inner(Xt, grad) * inner(Yt, grad));
}

AmbientPoint::AmbientPoint(const AmbientModel& model, Vec coords) : x_(model.renormalize(coords)) {
  if (!model.contains(x_)) throw DomainError("point violates the model constraint");
}

double model_distance(const AmbientModel& model, const AmbientPoint& p, const AmbientPoint& q) {
  return model.distance(p.coords(), q.coords());
}

AmbientVector grad_rho(const AmbientModel& model, const AmbientPoint& pole, const AmbientPoint& y) {
  return {y.coords(), model.grad_distance(pole.coords(), y.coords())};
}

double hess_rho(const AmbientModel& model, const AmbientPoint& pole, const AmbientPoint& y, const Vec& X,
                const Vec& Y) {
  return model.hess_distance(pole.coords(), y.coords(), X, Y);
}

}  // namespace tamed::kernel
