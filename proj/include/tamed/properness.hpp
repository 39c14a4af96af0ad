#pragma once

// f = h o rho_N o phi: its Hessian and Laplacian through the composition
// formulas, the lower bounds outside B_M(r0), and a growth certificate.

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tamed/sampling.hpp"

namespace tamed::properness {

using immersion::Mat;
using immersion::Vec;

enum class Branch { Flat, Hyperbolic };

/// h(t) = t^2 when kappa = 0, cosh(sqrt(-kappa) t) when kappa < 0.
class Profile {
 public:
  explicit Profile(double kappa);
  Branch branch() const noexcept { return branch_; }
  double kappa() const noexcept { return kappa_; }
  double h(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  /// Lower bound for Hess f outside B_M(r0): 2(1-c) or -kappa (1-c).
  double outer_bound(double c) const;

 private:
  Branch branch_;
  double kappa_;
};

/// Hess f(X, X) at chart point u for the distance to `pole`. Throws DomainError at the pole.
double hessian_composed(const immersion::ImmersionChart& chart, const Vec& u, const Vec& X, const Vec& pole,
                        const Profile& h);

/// Hess f in chart coordinates. At the pole the limit h''(0) g is used (h'(0) = 0 for both profiles).
Mat hessian_matrix(const immersion::ImmersionChart& chart, const immersion::FundamentalForms& ff, const Vec& pole,
                   const Profile& h);

/// Smallest eigenvalue of Hess f relative to g, i.e. min over g-unit X of Hess f(X, X).
double min_relative_eigenvalue(const Mat& hess, const Mat& g);

/// Delta f from the trace formula: h'' |grad rho^T|^2 + h' ((C/S)(m - |grad rho^T|^2) + <grad rho, H>).
double laplacian_composed(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole, const Profile& h);
/// g^{ij} (Hess f)_{ij}.
double laplacian_trace(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole, const Profile& h);

/// |grad (rho_N o phi)|_g at u, zero at the pole.
double gradient_norm(const immersion::ImmersionChart& chart, const immersion::FundamentalForms& ff, const Vec& pole);

struct HessianCheck {
  double bound = 0.0;
  double tol = 0.0;
  double min_eigenvalue_outside = 0.0;
  int checked = 0;
  std::vector<int> violations;
};

HessianCheck hess_lower_bound_check(const sampling::SampledSubmanifold& s, double c, double r0, double tol);
HessianCheck hess_lower_bound_check(const sampling::SampledSubmanifold& s, double c, double r0);

/// Minimum over vertices with rho_M <= r0 of the smallest relative eigenvalue of Hess f.
double compute_b(const sampling::SampledSubmanifold& s, double r0, const Profile& h);

/// Piecewise quadratic lower bound for f along unit-speed geodesics from the base point.
struct Envelope {
  double f0 = 0.0;  // f at the base vertex
  double g0 = 0.0;  // |grad f| at the base vertex
  double b = 0.0;
  double q = 0.0;
  double r0 = 0.0;

  double operator()(double s) const;
  /// min of the envelope over [lo, hi].
  double min_on(double lo, double hi) const;
  bool unbounded() const;
  /// Radius beyond which the envelope is nondecreasing.
  double monotone_from() const;
};

struct PropernessCertificate {
  Branch branch = Branch::Flat;
  double c = 0.0;
  double r0 = 0.0;
  double b = 0.0;
  double tol = 0.0;
  Envelope envelope;
  std::vector<double> slack;
  double min_slack = 0.0;
  std::vector<int> violations;
  double literal_min_slack = 0.0;
  double literal_holds_beyond = 0.0;
  std::vector<double> witness_radii;
  std::vector<double> witness_min_rho_N;
  bool witness_monotone = true;
  HessianCheck hessian;

  bool ok() const { return violations.empty() && hessian.violations.empty() && witness_monotone; }
};

/// Envelope slack at every vertex with rho_M shifted down by up to tol.
PropernessCertificate verify_growth(const sampling::SampledSubmanifold& s, double c, double r0, double b,
                                    double tol);
PropernessCertificate verify_growth(const sampling::SampledSubmanifold& s, double c, double r0, double b);

/// compute_b, hess_lower_bound_check and verify_growth with tol = 5 eps_mesh.
PropernessCertificate certify(const sampling::SampledSubmanifold& s, double c, double r0);

nlohmann::json to_json(const PropernessCertificate& cert);

}  // namespace tamed::properness
