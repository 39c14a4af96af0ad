#include "tamed/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <nlohmann/json.hpp>

#include "tamed/comparison.hpp"
#include "tamed/errors.hpp"

namespace tamed::spectral {

namespace {

namespace odeint = boost::numeric::odeint;

// Modified Pruefer variables: v = rho sin(theta) / sqrt(lambda), v' = rho cos(theta).
using State = std::array<double, 2>;  // theta, log rho

constexpr double kOdeTol = 1e-13;
constexpr double kSeriesFraction = 1e-3;

struct Radial {
  int l;
  double mu;
  double lambda;

  double drift(double t) const { return (l - 1) * kernel::ct_over_st(mu, t); }

  void operator()(const State& x, State& dxdt, double t) const {
    const double P = drift(t);
    const double s = std::sin(x[0]);
    const double c = std::cos(x[0]);
    dxdt[0] = std::sqrt(lambda) + P * s * c;
    dxdt[1] = -P * c * c;
  }

  // Second-order series about the regular singular point t = 0.
  void series(double t, double& v, double& dv) const {
    const double k = -mu;
    const double a = -lambda / (2.0 * l);
    const double b = lambda * (lambda + 2.0 * k * (l - 1) / 3.0) / (2.0 * l * (4.0 * l + 8.0));
    v = 1.0 + a * t * t + b * t * t * t * t;
    dv = 2.0 * a * t + 4.0 * b * t * t * t;
  }

  State start(double ts) const {
    double v = 0.0;
    double dv = 0.0;
    series(ts, v, dv);
    const double k = std::sqrt(lambda);
    return {std::atan2(k * v, dv), 0.5 * std::log(k * k * v * v + dv * dv)};
  }

  State shoot(double ts, double t_end) const {
    State x = start(ts);
    auto stepper = odeint::make_controlled(kOdeTol, kOdeTol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, *this, x, ts, t_end, (t_end - ts) * 1e-3);
    return x;
  }

  double v_of(const State& x) const { return std::exp(x[1]) * std::sin(x[0]) / std::sqrt(lambda); }
  double dv_of(const State& x) const { return std::exp(x[1]) * std::cos(x[0]); }
};

double radial_v(int l, double mu, double lambda, double R, double t) {
  const Radial sys{l, mu, lambda};
  const double ts = kSeriesFraction * R;
  if (t <= ts) {
    double v = 0.0;
    double dv = 0.0;
    sys.series(t, v, dv);
    return v;
  }
  return sys.v_of(sys.shoot(ts, t));
}

}  // namespace

double RadialEigenSolution::v_at(double tq) const {
  if (!(tq >= 0.0) || tq > R * (1.0 + 1e-12)) throw DomainError("v_at expects t in [0, R]");
  return radial_v(l, mu, lambda1, R, std::min(tq, R));
}

RadialEigenSolution radial_eigenvalue(int l, double mu, double R, const RadialOptions& opts) {
  if (l < 2) throw DomainError("l must be >= 2");
  if (mu > 0.0) throw DomainError("mu must be <= 0");
  if (!(R > 0.0)) throw DomainError("R must be positive");
  const double ts = kSeriesFraction * R;

  auto F = [&](double lambda) {
    const Radial sys{l, mu, lambda};
    return sys.shoot(ts, R)[0] - std::numbers::pi;
  };

  double lo = 0.0;
  double hi = 4.0 * std::numbers::pi * std::numbers::pi * l / (R * R);
  double f_hi = F(hi);
  int widen = 0;
  while (f_hi <= 0.0) {
    lo = hi;
    hi *= 2.0;
    f_hi = F(hi);
    if (++widen > 60) throw NumericalError("could not bracket the first eigenvalue");
  }
  const double f_lo = lo > 0.0 ? F(lo) : -std::numbers::pi / 2.0;

  std::uintmax_t iters = static_cast<std::uintmax_t>(opts.max_iterations);
  auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(std::abs(a), std::abs(b)); };
  const auto [a, b] = boost::math::tools::toms748_solve(F, lo > 0.0 ? lo : 1e-300, hi, f_lo, f_hi, tol, iters);
  const double lambda = std::abs(F(a)) <= std::abs(F(b)) ? a : b;

  RadialEigenSolution sol;
  sol.l = l;
  sol.mu = mu;
  sol.R = R;
  sol.lambda1 = lambda;

  const Radial sys{l, mu, lambda};
  const int n = std::max(opts.grid_points, 3);
  std::vector<double> times;
  for (int k = 0; k < n; ++k) times.push_back(R * k / (n - 1));
  sol.t = times;
  sol.v.assign(times.size(), 0.0);
  sol.dv.assign(times.size(), 0.0);

  std::vector<double> ode_times{ts};
  for (double t : times)
    if (t > ts) ode_times.push_back(t);
  std::vector<State> states;
  State x = sys.start(ts);
  auto stepper = odeint::make_controlled(kOdeTol, kOdeTol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, sys, x, ode_times.begin(), ode_times.end(), (R - ts) * 1e-3,
                          [&](const State& s, double) { states.push_back(s); });
  std::size_t next = 1;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] <= ts) {
      sys.series(times[k], sol.v[k], sol.dv[k]);
    } else {
      sol.v[k] = sys.v_of(states[next]);
      sol.dv[k] = sys.dv_of(states[next]);
      ++next;
    }
  }
  if (!(std::abs(sol.v.back()) <= opts.tol))
    throw NumericalError("shooting tolerance not reached: |v(R)| = " + std::to_string(std::abs(sol.v.back())));
  return sol;
}

double lemma2_check(const RadialEigenSolution& sol) {
  double worst = sol.lambda1 / sol.l - sol.lambda1;
  for (std::size_t k = 0; k < sol.t.size(); ++k) {
    if (sol.t[k] <= 0.0) continue;
    worst = std::max(worst, -sol.dv[k] / sol.t[k] - sol.lambda1);
  }
  return worst;
}

double ode_residual(const RadialEigenSolution& sol) {
  const std::size_t n = sol.t.size();
  if (n < 7) return 0.0;
  const double h = sol.t[1] - sol.t[0];
  const double ts = kSeriesFraction * sol.R;
  const auto& w = sol.dv;
  double worst = 0.0;
  for (std::size_t k = 3; k + 3 < n; ++k) {
    if (sol.t[k - 3] <= ts) continue;
    const double d2 =
        (w[k + 3] - 9.0 * w[k + 2] + 45.0 * w[k + 1] - 45.0 * w[k - 1] + 9.0 * w[k - 2] - w[k - 3]) / (60.0 * h);
    const double P = (sol.l - 1) * kernel::ct_over_st(sol.mu, sol.t[k]);
    worst = std::max(worst, std::abs(d2 + P * sol.dv[k] + sol.lambda1 * sol.v[k]));
  }
  return worst;
}

int choose_l(int m, double c) {
  if (m < 1) throw DomainError("m must be >= 1");
  if (!(c > 0.0) || !(c < 1.0)) throw LevelError("c must lie in (0, 1)");
  const double q = (1.0 + c) * (1.0 + c) / 4.0;
  for (int l = 1;; ++l)
    if (m - l + l * q + c <= 0.0) return l;
}

double constant_C(int m, double c, double mu, double r0, double v_at_r0) {
  if (!(r0 > 0.0)) throw DomainError("r0 must be positive");
  if (!(v_at_r0 > 0.0) || v_at_r0 > 1.0 + 1e-12) throw DomainError("v(r0) must lie in (0, 1]");
  return 1.0 + r0 * kernel::ct_over_st(mu, r0) / v_at_r0 * (m + c);
}

double extrapolate_lambda_star(int l, double mu, std::vector<double>* radii, std::vector<double>* lambdas) {
  if (!(mu < 0.0)) return 0.0;
  const double s = std::sqrt(-mu);
  const std::array<double, 3> Rs{10.0 / s, 20.0 / s, 40.0 / s};
  std::array<double, 3> lam{};
  Eigen::Matrix3d A;
  Eigen::Vector3d rhs;
  for (int k = 0; k < 3; ++k) {
    lam[static_cast<std::size_t>(k)] = radial_eigenvalue(l, mu, Rs[static_cast<std::size_t>(k)]).lambda1;
    const double R = Rs[static_cast<std::size_t>(k)];
    A.row(k) << 1.0, 1.0 / (R * R), 1.0 / (R * R * R);
    rhs[k] = lam[static_cast<std::size_t>(k)];
  }
  if (radii) radii->assign(Rs.begin(), Rs.end());
  if (lambdas) lambdas->assign(lam.begin(), lam.end());
  const double star = A.fullPivLu().solve(rhs)[0];
  if (!(lam[0] > lam[1] && lam[1] > lam[2] && lam[2] > star))
    throw NumericalError("lambda_1(R) is not monotone toward its extrapolated limit");
  return star;
}

ToneBound tone_upper_bound(int m, double c, double mu, double r0, std::optional<int> l) {
  if (mu > 0.0) throw DomainError("mu must be <= 0");
  ToneBound tb;
  tb.m = m;
  tb.c = c;
  tb.mu = mu;
  tb.r0 = r0;
  tb.l = choose_l(m, c);
  if (l) {
    if (*l < tb.l) throw LevelError("l = " + std::to_string(*l) + " is below the least admissible " + std::to_string(tb.l));
    tb.l = *l;
  }
  tb.mckean = (tb.l - 1) * (tb.l - 1) * (0.0 - mu) / 4.0;
  tb.printed_form = (tb.l - 1) * (tb.l - 1) * mu * mu / 4.0;
  tb.forms_differ = std::abs(tb.mckean - tb.printed_form) > 1e-12 * std::max(1.0, tb.mckean);
  double R_ref = 0.0;
  if (mu < 0.0) {
    tb.lambda_star = extrapolate_lambda_star(tb.l, mu, &tb.radii, &tb.lambdas);
    R_ref = tb.radii.back();
  } else {
    tb.lambda_star = 0.0;
    R_ref = 40.0 * r0;
  }
  if (!(r0 < R_ref)) throw DomainError("r0 exceeds the reference radius");
  const auto ref = radial_eigenvalue(tb.l, mu, R_ref);
  tb.v_r0 = ref.v_at(r0);
  tb.C = constant_C(m, c, mu, r0, tb.v_r0);
  tb.bound = tb.C * tb.lambda_star;
  return tb;
}

void write_solution_csv(const RadialEigenSolution& sol, std::ostream& out) {
  out << "t,v,dv\n";
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < sol.t.size(); ++k) out << sol.t[k] << ',' << sol.v[k] << ',' << sol.dv[k] << '\n';
  out.precision(old);
}

nlohmann::json to_json(const RadialEigenSolution& sol) {
  nlohmann::json j;
  j["l"] = sol.l;
  j["mu"] = sol.mu;
  j["R"] = sol.R;
  j["lambda1"] = sol.lambda1;
  j["v_R"] = sol.v.empty() ? 0.0 : sol.v.back();
  j["lemma2_max_violation"] = lemma2_check(sol);
  j["ode_residual"] = ode_residual(sol);
  j["mckean_limit"] = (sol.l - 1) * (sol.l - 1) * (0.0 - sol.mu) / 4.0;
  j["printed_form"] = (sol.l - 1) * (sol.l - 1) * sol.mu * sol.mu / 4.0;
  return j;
}

nlohmann::json to_json(const ToneBound& tb) {
  nlohmann::json j;
  j["m"] = tb.m;
  j["c"] = tb.c;
  j["mu"] = tb.mu;
  j["r0"] = tb.r0;
  j["l"] = tb.l;
  j["v_r0"] = tb.v_r0;
  j["C"] = tb.C;
  j["radii"] = tb.radii;
  j["lambda_R"] = tb.lambdas;
  j["lambda_star_extrapolated"] = tb.lambda_star;
  j["lambda_star_mckean"] = tb.mckean;
  j["lambda_star_printed_form"] = tb.printed_form;
  j["closed_forms_differ"] = tb.forms_differ;
  j["c_squared_step"] = "not used: the outside-ball c^2/4 coefficient is unverified; C-form bound only";
  j["bound"] = tb.bound;
  return j;
}

}  // namespace tamed::spectral
