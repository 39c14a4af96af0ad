#include "tamed/properness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "tamed/errors.hpp"

namespace tamed::properness {

namespace {

// Below this extrinsic distance a vertex is treated as the pole itself.
constexpr double kPoleRadius = 1e-9;

Vec distance_gradient_coords(const kernel::AmbientModel& amb, const immersion::FundamentalForms& ff, const Vec& pole,
                             Vec* grad_out) {
  const Vec grad = amb.grad_distance(pole, ff.point);
  if (grad_out) *grad_out = grad;
  Vec d(ff.m);
  for (int i = 0; i < ff.m; ++i) d[i] = amb.inner(grad, ff.tangent.col(i));
  return d;
}

const immersion::FundamentalForms& forms_at(const sampling::SampledSubmanifold& s, int v,
                                            immersion::FundamentalForms& scratch) {
  if (!s.forms().empty()) return s.forms()[static_cast<std::size_t>(v)];
  scratch = immersion::fundamental_forms(s.chart(), s.vertex(v).u);
  return scratch;
}

}  // namespace

Profile::Profile(double kappa) : branch_(kappa < 0.0 ? Branch::Hyperbolic : Branch::Flat), kappa_(kappa) {
  if (kappa > 0.0) throw DomainError("curvature must be <= 0");
}

double Profile::h(double t) const {
  if (branch_ == Branch::Flat) return t * t;
  return std::cosh(std::sqrt(-kappa_) * t);
}

double Profile::d1(double t) const {
  if (branch_ == Branch::Flat) return 2.0 * t;
  const double s = std::sqrt(-kappa_);
  return s * std::sinh(s * t);
}

double Profile::d2(double t) const {
  if (branch_ == Branch::Flat) return 2.0;
  return -kappa_ * std::cosh(std::sqrt(-kappa_) * t);
}

double Profile::outer_bound(double c) const {
  return branch_ == Branch::Flat ? 2.0 * (1.0 - c) : -kappa_ * (1.0 - c);
}

double hessian_composed(const immersion::ImmersionChart& chart, const Vec& u, const Vec& X, const Vec& pole,
                        const Profile& h) {
  const auto ff = immersion::fundamental_forms(chart, u);
  const auto& amb = chart.ambient();
  const double rho = amb.distance(pole, ff.point);
  if (!(rho > kPoleRadius)) throw DomainError("f = h(rho_N) is evaluated at the pole");
  const Vec grad = amb.grad_distance(pole, ff.point);
  const Vec Xa = ff.tangent * X;
  const double gx = amb.inner(grad, Xa);
  const double hr = amb.hess_distance(pole, ff.point, Xa, Xa);
  const double ar = amb.inner(grad, immersion::alpha_apply(ff, X, X));
  return h.d2(rho) * gx * gx + h.d1(rho) * (hr + ar);
}

Mat hessian_matrix(const immersion::ImmersionChart& chart, const immersion::FundamentalForms& ff, const Vec& pole,
                   const Profile& h) {
  const auto& amb = chart.ambient();
  const int m = ff.m;
  const double rho = amb.distance(pole, ff.point);
  if (!(rho > kPoleRadius)) return h.d2(0.0) * ff.g;
  Vec grad;
  const Vec d = distance_gradient_coords(amb, ff, pole, &grad);
  const double cs = kernel::ct_over_st(amb.curvature(), rho);
  Mat H(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      const double hess_rho = cs * (ff.g(i, j) - d[i] * d[j]);
      const double val = h.d2(rho) * d[i] * d[j] + h.d1(rho) * (hess_rho + amb.inner(grad, ff.a(i, j)));
      H(i, j) = val;
      H(j, i) = val;
    }
  return H;
}

double min_relative_eigenvalue(const Mat& hess, const Mat& g) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(hess, g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double gradient_norm(const immersion::ImmersionChart& chart, const immersion::FundamentalForms& ff, const Vec& pole) {
  const auto& amb = chart.ambient();
  if (!(amb.distance(pole, ff.point) > kPoleRadius)) return 0.0;
  const Vec d = distance_gradient_coords(amb, ff, pole, nullptr);
  return std::sqrt(std::max(d.dot(ff.g.ldlt().solve(d)), 0.0));
}

double laplacian_composed(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole, const Profile& h) {
  const auto ff = immersion::fundamental_forms(chart, u);
  const auto& amb = chart.ambient();
  const double rho = amb.distance(pole, ff.point);
  if (!(rho > kPoleRadius)) throw DomainError("f = h(rho_N) is evaluated at the pole");
  Vec grad;
  const Vec d = distance_gradient_coords(amb, ff, pole, &grad);
  const double tangential2 = d.dot(ff.g.ldlt().solve(d));
  const double cs = kernel::ct_over_st(amb.curvature(), rho);
  return h.d2(rho) * tangential2 + h.d1(rho) * (cs * (ff.m - tangential2) + amb.inner(grad, ff.H_trace));
}

double laplacian_trace(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole, const Profile& h) {
  const auto ff = immersion::fundamental_forms(chart, u);
  if (!(chart.ambient().distance(pole, ff.point) > kPoleRadius))
    throw DomainError("f = h(rho_N) is evaluated at the pole");
  const Mat H = hessian_matrix(chart, ff, pole, h);
  return ff.g.ldlt().solve(H).trace();
}

HessianCheck hess_lower_bound_check(const sampling::SampledSubmanifold& s, double c, double r0) {
  return hess_lower_bound_check(s, c, r0, 5.0 * s.eps_mesh());
}

HessianCheck hess_lower_bound_check(const sampling::SampledSubmanifold& s, double c, double r0, double tol) {
  const Profile h(s.chart().ambient().curvature());
  HessianCheck out;
  out.bound = h.outer_bound(c);
  out.tol = tol;
  out.min_eigenvalue_outside = std::numeric_limits<double>::infinity();
  immersion::FundamentalForms scratch;
  for (int v = 0; v < s.vertex_count(); ++v) {
    if (!(s.vertex(v).rho_M > r0)) continue;
    const auto& ff = forms_at(s, v, scratch);
    const double lam = min_relative_eigenvalue(hessian_matrix(s.chart(), ff, s.pole(), h), ff.g);
    out.min_eigenvalue_outside = std::min(out.min_eigenvalue_outside, lam);
    ++out.checked;
    if (lam < out.bound - tol) out.violations.push_back(v);
  }
  return out;
}

double compute_b(const sampling::SampledSubmanifold& s, double r0, const Profile& h) {
  double b = std::numeric_limits<double>::infinity();
  immersion::FundamentalForms scratch;
  for (int v = 0; v < s.vertex_count(); ++v) {
    if (!(s.vertex(v).rho_M <= r0)) continue;
    const auto& ff = forms_at(s, v, scratch);
    b = std::min(b, min_relative_eigenvalue(hessian_matrix(s.chart(), ff, s.pole(), h), ff.g));
  }
  if (!std::isfinite(b)) throw DomainError("no sampled vertex inside B_M(r0)");
  return b;
}

double Envelope::operator()(double s) const {
  if (s <= r0) return f0 - g0 * s + 0.5 * b * s * s;
  const double at_r0 = f0 - g0 * r0 + 0.5 * b * r0 * r0;
  const double t = s - r0;
  return at_r0 + (b * r0 - g0) * t + 0.5 * q * t * t;
}

double Envelope::min_on(double lo, double hi) const {
  double best = std::min((*this)(lo), (*this)(hi));
  // Interior critical points of each quadratic piece.
  if (b > 0.0) {
    const double s = g0 / b;
    if (s > lo && s < hi && s <= r0) best = std::min(best, (*this)(s));
  }
  if (q > 0.0) {
    const double s = r0 - (b * r0 - g0) / q;
    if (s > lo && s < hi && s > r0) best = std::min(best, (*this)(s));
  }
  return best;
}

bool Envelope::unbounded() const { return q > 0.0 || (q == 0.0 && b * r0 - g0 > 0.0); }

double Envelope::monotone_from() const {
  // Derivative: -g0 + b s on [0, r0], (b r0 - g0) + q (s - r0) beyond.
  const double slope_r0 = b * r0 - g0;
  if (slope_r0 >= 0.0) {
    if (b > 0.0) return std::clamp(g0 / b, 0.0, r0);
    return g0 <= 0.0 && b == 0.0 ? 0.0 : r0;
  }
  if (q > 0.0) return r0 - slope_r0 / q;
  return std::numeric_limits<double>::infinity();
}

PropernessCertificate verify_growth(const sampling::SampledSubmanifold& s, double c, double r0, double b) {
  return verify_growth(s, c, r0, b, 5.0 * s.eps_mesh());
}

PropernessCertificate verify_growth(const sampling::SampledSubmanifold& s, double c, double r0, double b,
                                    double tol) {
  const auto& amb = s.chart().ambient();
  const Profile h(amb.curvature());
  PropernessCertificate cert;
  cert.branch = h.branch();
  cert.c = c;
  cert.r0 = r0;
  cert.b = b;
  cert.tol = tol;

  const int base = s.base_vertex();
  const auto ff0 = immersion::fundamental_forms(s.chart(), s.vertex(base).u);
  const double rho0 = s.vertex(base).rho_N;
  cert.envelope = {h.h(rho0), h.d1(rho0) * gradient_norm(s.chart(), ff0, s.pole()), b, h.outer_bound(c), r0};

  const double kappa = amb.curvature();
  const double sk = std::sqrt(-kappa);
  auto literal = [&](double rho_m) {
    if (h.branch() == Branch::Flat) return (1.0 - c) * rho_m * rho_m + (b - 2.0 * (1.0 - c)) * r0 * rho_m;
    return sk * (1.0 - c) * rho_m * rho_m + (b / sk - sk * (1.0 - c)) * r0 * rho_m + 1.0;
  };

  cert.min_slack = std::numeric_limits<double>::infinity();
  cert.literal_min_slack = std::numeric_limits<double>::infinity();
  cert.slack.assign(static_cast<std::size_t>(s.vertex_count()), 0.0);
  for (int v = 0; v < s.vertex_count(); ++v) {
    const auto& vd = s.vertex(v);
    if (!std::isfinite(vd.rho_M)) continue;
    const double f = h.h(vd.rho_N);
    const double sl = f - cert.envelope.min_on(std::max(vd.rho_M - tol, 0.0), vd.rho_M);
    cert.slack[static_cast<std::size_t>(v)] = sl;
    cert.min_slack = std::min(cert.min_slack, sl);
    if (sl < -1e-9 * std::max(1.0, std::abs(f))) cert.violations.push_back(v);
    const double lit = f - literal(vd.rho_M);
    cert.literal_min_slack = std::min(cert.literal_min_slack, lit);
    if (lit < 0.0) cert.literal_holds_beyond = std::max(cert.literal_holds_beyond, vd.rho_M);
  }

  // Properness witness on intrinsic annuli that stay clear of the truncation boundary.
  double edge = std::numeric_limits<double>::infinity();
  double far = 0.0;
  for (int v = 0; v < s.vertex_count(); ++v) {
    const double rm = s.vertex(v).rho_M;
    if (!std::isfinite(rm)) continue;
    far = std::max(far, rm);
    if (s.on_truncation_edge(v)) edge = std::min(edge, rm);
  }
  const double limit = std::min(edge, far);
  for (double r = 0.0; r + 1.0 <= limit; r += 1.0) {
    double mn = std::numeric_limits<double>::infinity();
    for (int v = 0; v < s.vertex_count(); ++v) {
      const double rm = s.vertex(v).rho_M;
      if (rm >= r && rm <= r + 1.0) mn = std::min(mn, s.vertex(v).rho_N);
    }
    if (!std::isfinite(mn)) continue;
    if (!cert.witness_min_rho_N.empty() && mn < cert.witness_min_rho_N.back() - 1e-9) cert.witness_monotone = false;
    cert.witness_radii.push_back(r);
    cert.witness_min_rho_N.push_back(mn);
  }
  return cert;
}

PropernessCertificate certify(const sampling::SampledSubmanifold& s, double c, double r0) {
  const Profile h(s.chart().ambient().curvature());
  const double b = compute_b(s, r0, h);
  auto cert = verify_growth(s, c, r0, b);
  cert.hessian = hess_lower_bound_check(s, c, r0);
  return cert;
}

nlohmann::json to_json(const PropernessCertificate& cert) {
  nlohmann::json j;
  j["branch"] = cert.branch == Branch::Flat ? "flat" : "hyperbolic";
  j["c"] = cert.c;
  j["r0"] = cert.r0;
  j["b"] = cert.b;
  j["tol"] = cert.tol;
  j["min_slack"] = cert.min_slack;
  j["literal_min_slack"] = cert.literal_min_slack;
  j["literal_holds_beyond"] = cert.literal_holds_beyond;
  j["violations"] = cert.violations;
  j["envelope"] = {{"f0", cert.envelope.f0},
                   {"g0", cert.envelope.g0},
                   {"b", cert.envelope.b},
                   {"q", cert.envelope.q},
                   {"r0", cert.envelope.r0},
                   {"unbounded", cert.envelope.unbounded()},
                   {"monotone_from", cert.envelope.monotone_from()}};
  j["hessian"] = {{"bound", cert.hessian.bound},
                  {"tol", cert.hessian.tol},
                  {"min_eigenvalue_outside", cert.hessian.min_eigenvalue_outside},
                  {"checked", cert.hessian.checked},
                  {"violations", cert.hessian.violations}};
  j["witness"] = {{"radii", cert.witness_radii},
                  {"min_rho_N", cert.witness_min_rho_N},
                  {"monotone", cert.witness_monotone}};
  j["certified"] = cert.ok();
  return j;
}

}  // namespace tamed::properness
