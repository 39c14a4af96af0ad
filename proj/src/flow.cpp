#include "tamed/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <queue>

#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "tamed/errors.hpp"

namespace tamed::flow {

namespace {

constexpr double kLevelTol = 1e-8;
constexpr double kTinySin = 1e-8;

struct PointData {
  double R = 0.0;
  double psi = 0.0;
  double sin_beta = 0.0;
  double alpha_term = 0.0;
  Vec nu_star;
  Vec velocity;
};

// psi, sin beta and <nu*, alpha(nu,nu)> from one evaluation of the fundamental forms.
PointData analyze_point(const immersion::ImmersionChart& chart, const Vec& pole, const Vec& u) {
  const auto ff = immersion::fundamental_forms(chart, u);
  const auto& amb = chart.ambient();
  PointData p;
  p.R = amb.distance(pole, ff.point);
  Vec grad;
  try {
    grad = amb.grad_distance(pole, ff.point);
  } catch (const DomainError&) {
    throw CriticalPointError("R is not differentiable at the pole");
  }
  Vec dR(ff.m);
  for (int i = 0; i < ff.m; ++i) dR[i] = amb.inner(grad, ff.tangent.col(i));
  const Vec gi = ff.g.ldlt().solve(dR);
  p.psi = std::sqrt(std::max(dR.dot(gi), 0.0));
  const Vec perp = grad - ff.tangent * gi;
  p.sin_beta = amb.norm(perp);
  if (p.psi > 0.0) {
    const Vec nu = gi / p.psi;
    p.velocity = gi / (p.psi * p.psi);
    if (p.sin_beta > kTinySin) {
      p.nu_star = perp / p.sin_beta;
      p.alpha_term = amb.inner(p.nu_star, immersion::alpha_apply(ff, nu, nu));
    }
  }
  return p;
}

Vec velocity(const immersion::ImmersionChart& chart, const Vec& pole, const Vec& u) {
  return nu_and_psi(chart, u, pole).velocity;
}

}  // namespace

NuPsi nu_and_psi(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole, double tol_crit) {
  const auto jet = chart.eval_jet2(u);
  const auto& amb = chart.ambient();
  const int m = chart.m();
  Mat T(jet.first.rows(), m);
  for (int i = 0; i < m; ++i) T.col(i) = amb.tangent_project(jet.value, jet.first.col(i));
  Mat g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) g(i, j) = amb.inner(T.col(i), T.col(j));
  Vec grad;
  try {
    grad = amb.grad_distance(pole, jet.value);
  } catch (const DomainError&) {
    throw CriticalPointError("R is not differentiable at the pole");
  }
  NuPsi out;
  out.dR.resize(m);
  for (int i = 0; i < m; ++i) out.dR[i] = amb.inner(grad, T.col(i));
  const Vec gi = g.ldlt().solve(out.dR);
  out.psi = std::sqrt(std::max(out.dR.dot(gi), 0.0));
  if (!(out.psi > tol_crit)) throw CriticalPointError("critical point of R (psi = " + std::to_string(out.psi) + ")");
  out.nu = gi / out.psi;
  out.velocity = gi / (out.psi * out.psi);
  return out;
}

double extrinsic_R(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole) {
  return chart.ambient().distance(pole, chart.point(u));
}

LevelSet level_set_gamma(const sampling::SampledSubmanifold& s, double r0) {
  LevelSet out;
  out.r0 = r0;
  const auto& chart = s.chart();
  for (int v = 0; v < s.vertex_count(); ++v) {
    const double Ra = s.vertex(v).rho_N - r0;
    for (int axis = 0; axis < s.m(); ++axis) {
      std::array<int, 4> d{};
      d[static_cast<std::size_t>(axis)] = 1;
      const int w = s.offset(v, d);
      if (w < 0) continue;
      const double Rb = s.vertex(w).rho_N - r0;
      if (Ra == 0.0) {
        out.seeds.push_back(s.vertex(v).u);
        continue;
      }
      if (!(Ra * Rb < 0.0)) continue;
      const Vec ua = s.vertex(v).u;
      Vec step = Vec::Zero(s.m());
      step[axis] = s.spacing(axis);
      auto fn = [&](double x) { return extrinsic_R(chart, ua + x * step, s.pole()) - r0; };
      std::uintmax_t iters = 100;
      auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15; };
      const auto [lo, hi] = boost::math::tools::toms748_solve(fn, 0.0, 1.0, Ra, Rb, tol, iters);
      const double x = std::abs(fn(lo)) <= std::abs(fn(hi)) ? lo : hi;
      if (std::abs(fn(x)) > kLevelTol) throw NumericalError("level-set root finding did not converge");
      out.seeds.push_back(chart.wrap(ua + x * step));
    }
  }
  if (out.seeds.empty()) throw LevelError("the level set {R = " + std::to_string(r0) + "} is empty on this sample");
  for (int v = 0; v < s.vertex_count(); ++v) {
    if (std::abs(s.vertex(v).rho_N - r0) > s.eps_mesh()) continue;
    try {
      nu_and_psi(chart, s.vertex(v).u, s.pole());
    } catch (const CriticalPointError&) {
      out.regular = false;
    }
  }
  return out;
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::DomainBoundary: return "domain_boundary";
    case Termination::MaxTime: return "max_time";
    case Termination::CriticalPoint: return "critical_point";
  }
  return "unknown";
}

FlowTrajectory integrate_flow(const immersion::ImmersionChart& chart, const Vec& pole, const Vec& seed, double r0,
                              double c, double T, double step) {
  if (!(step > 0.0) || !(T >= 0.0)) throw DomainError("flow needs step > 0 and T >= 0");
  const double kappa = chart.ambient().curvature();
  FlowTrajectory traj;
  traj.seed = seed;
  traj.r0 = r0;
  traj.c = c;
  traj.step = step;

  auto record = [&](double t, const Vec& u, double sin0) {
    const auto p = analyze_point(chart, pole, u);
    FlowNode n;
    n.t = t;
    n.u = u;
    n.R = p.R;
    n.psi = p.psi;
    n.sin_beta = p.sin_beta;
    n.alpha_term = p.alpha_term;
    n.nu_star = p.nu_star;
    n.bound_rhs = kernel::s_kappa(kappa, r0) / kernel::s_kappa(kappa, t + r0) * (sin0 - c) + c;
    traj.nodes.push_back(std::move(n));
  };

  double sin0 = 0.0;
  try {
    sin0 = analyze_point(chart, pole, seed).sin_beta;
    record(0.0, seed, sin0);
  } catch (const CriticalPointError&) {
    traj.termination = Termination::CriticalPoint;
    return traj;
  }

  Vec u = seed;
  double t = 0.0;
  const auto n_steps = static_cast<long>(std::ceil(T / step - 1e-9));
  for (long k = 0; k < n_steps; ++k) {
    const double h = std::min(step, T - t);
    try {
      const Vec k1 = velocity(chart, pole, u);
      const Vec u2 = u + 0.5 * h * k1;
      if (!chart.contains(u2)) {
        traj.termination = Termination::DomainBoundary;
        return traj;
      }
      const Vec k2 = velocity(chart, pole, u2);
      const Vec u3 = u + 0.5 * h * k2;
      if (!chart.contains(u3)) {
        traj.termination = Termination::DomainBoundary;
        return traj;
      }
      const Vec k3 = velocity(chart, pole, u3);
      const Vec u4 = u + h * k3;
      if (!chart.contains(u4)) {
        traj.termination = Termination::DomainBoundary;
        return traj;
      }
      const Vec k4 = velocity(chart, pole, u4);
      const Vec next = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!chart.contains(next)) {
        traj.termination = Termination::DomainBoundary;
        return traj;
      }
      u = next;
      t = (k + 1 == n_steps) ? T : t + h;
      record(t, u, sin0);
    } catch (const CriticalPointError&) {
      traj.termination = Termination::CriticalPoint;
      return traj;
    }
  }
  traj.termination = Termination::MaxTime;
  return traj;
}

TrajectoryCheck check_trajectory(const immersion::ImmersionChart& chart, const FlowTrajectory& traj) {
  const double kappa = chart.ambient().curvature();
  TrajectoryCheck chk;
  chk.tol_flow = std::max(1e-4, 10.0 * std::pow(traj.step, 4));
  chk.max_bound_excess = -std::numeric_limits<double>::infinity();
  double max_src = 0.0;
  for (const auto& n : traj.nodes) {
    chk.max_level_error = std::max(chk.max_level_error, std::abs(n.R - n.t - traj.r0));
    chk.max_bound_excess = std::max(chk.max_bound_excess, n.sin_beta - n.bound_rhs);
    chk.max_bound_rhs = std::max(chk.max_bound_rhs, n.bound_rhs);
    chk.min_psi = std::min(chk.min_psi, n.psi);
    max_src = std::max(max_src, std::abs(kernel::s_kappa(kappa, n.t + traj.r0) * n.alpha_term));
  }
  for (std::size_t k = 1; k + 1 < traj.nodes.size(); ++k) {
    const auto& a = traj.nodes[k - 1];
    const auto& b = traj.nodes[k];
    const auto& c = traj.nodes[k + 1];
    if (a.sin_beta < kTinySin || b.sin_beta < kTinySin || c.sin_beta < kTinySin) continue;
    // sin beta = |normal part| has a corner where nu* reverses; the identity holds on either side only.
    if (chart.ambient().inner(a.nu_star, b.nu_star) <= 0.0 || chart.ambient().inner(b.nu_star, c.nu_star) <= 0.0) continue;
    const double lhs = (kernel::s_kappa(kappa, c.t + traj.r0) * c.sin_beta -
                        kernel::s_kappa(kappa, a.t + traj.r0) * a.sin_beta) /
                       (c.t - a.t);
    const double rhs = -kernel::s_kappa(kappa, b.t + traj.r0) * b.alpha_term;
    chk.max_dif4_defect = std::max(chk.max_dif4_defect, lhs - rhs);
  }
  const double dif4_tol = chk.tol_flow + traj.step * (1.0 + max_src);
  if (traj.nodes.empty()) chk.max_bound_excess = 0.0;
  chk.ok = !traj.nodes.empty() && traj.termination != Termination::CriticalPoint &&
           chk.max_level_error <= chk.tol_flow && chk.max_bound_excess <= chk.tol_flow && chk.max_bound_rhs < 1.0 &&
           chk.min_psi > 0.0 && chk.max_dif4_defect <= dif4_tol;
  return chk;
}

double richardson_ratio(const immersion::ImmersionChart& chart, const Vec& pole, const Vec& seed, double r0, double T,
                        double step) {
  const auto a = integrate_flow(chart, pole, seed, r0, 0.0, T, step);
  const auto b = integrate_flow(chart, pole, seed, r0, 0.0, T, step / 2);
  const auto c = integrate_flow(chart, pole, seed, r0, 0.0, T, step / 4);
  for (const auto* tr : {&a, &b, &c})
    if (tr->termination != Termination::MaxTime) throw NumericalError("trajectory left the chart before time T");
  const double d1 = (a.nodes.back().u - b.nodes.back().u).norm();
  const double d2 = (b.nodes.back().u - c.nodes.back().u).norm();
  if (!(d2 > 0.0)) return std::numeric_limits<double>::infinity();
  return d1 / d2;
}

std::vector<CriticalPoint> find_critical_points(const sampling::SampledSubmanifold& s, double tol_crit) {
  const auto& chart = s.chart();
  const int nv = s.vertex_count();
  std::vector<Vec> dR(static_cast<std::size_t>(nv));
  std::vector<double> psi(static_cast<std::size_t>(nv), 0.0);
  std::vector<char> flagged(static_cast<std::size_t>(nv), 0);
  std::vector<CriticalPoint> out;
  for (int v = 0; v < nv; ++v) {
    try {
      const auto np = nu_and_psi(chart, s.vertex(v).u, s.pole(), 0.0);
      dR[static_cast<std::size_t>(v)] = np.dR;
      psi[static_cast<std::size_t>(v)] = np.psi;
    } catch (const CriticalPointError&) {
      dR[static_cast<std::size_t>(v)] = Vec::Zero(s.m());
    }
    if (psi[static_cast<std::size_t>(v)] < tol_crit) {
      flagged[static_cast<std::size_t>(v)] = 1;
      out.push_back({v, psi[static_cast<std::size_t>(v)], s.vertex(v).rho_N, false});
    }
  }

  // Cells whose corners straddle zero in every component of dR.
  double scale = 0.0;
  for (const auto& d : dR) scale = std::max(scale, d.cwiseAbs().maxCoeff());
  const double zero = 1e-10 * std::max(scale, 1.0);
  std::vector<std::array<int, 4>> corners_delta;
  if (s.m() == 1)
    corners_delta = {{0, 0, 0, 0}, {1, 0, 0, 0}};
  else
    corners_delta = {{0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {1, 1, 0, 0}};
  for (int v = 0; v < nv; ++v) {
    std::vector<int> corners;
    for (const auto& d : corners_delta) {
      const int w = s.offset(v, d);
      if (w < 0) break;
      corners.push_back(w);
    }
    if (corners.size() != corners_delta.size()) continue;
    bool any_flagged = false;
    for (int w : corners) any_flagged |= flagged[static_cast<std::size_t>(w)] != 0;
    if (any_flagged) continue;
    bool straddles = true;
    for (int k = 0; k < s.m() && straddles; ++k) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int w : corners) {
        lo = std::min(lo, dR[static_cast<std::size_t>(w)][k]);
        hi = std::max(hi, dR[static_cast<std::size_t>(w)][k]);
      }
      straddles = lo <= zero && hi >= -zero;
    }
    if (!straddles) continue;
    int best = corners.front();
    for (int w : corners)
      if (psi[static_cast<std::size_t>(w)] < psi[static_cast<std::size_t>(best)]) best = w;
    out.push_back({best, psi[static_cast<std::size_t>(best)], s.vertex(best).rho_N, true});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.vertex < b.vertex; });
  out.erase(std::unique(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.vertex == b.vertex; }),
            out.end());
  return out;
}

EndCount count_ends(const sampling::SampledSubmanifold& s, const std::vector<double>& radii) {
  EndCount out;
  out.radii = radii;
  const int nv = s.vertex_count();
  for (double r : radii) {
    std::vector<int> comp(static_cast<std::size_t>(nv), -1);
    int ends = 0;
    for (int v = 0; v < nv; ++v) {
      if (comp[static_cast<std::size_t>(v)] >= 0 || !(s.vertex(v).rho_N > r)) continue;
      bool touches = false;
      std::queue<int> q;
      q.push(v);
      comp[static_cast<std::size_t>(v)] = v;
      while (!q.empty()) {
        const int a = q.front();
        q.pop();
        touches |= s.on_truncation_edge(a);
        for (int b : s.neighbors8(a)) {
          if (comp[static_cast<std::size_t>(b)] >= 0 || !(s.vertex(b).rho_N > r)) continue;
          comp[static_cast<std::size_t>(b)] = v;
          q.push(b);
        }
      }
      if (touches) ++ends;
    }
    out.counts.push_back(ends);
  }
  const std::size_t n = out.counts.size();
  out.stable = n >= 3 && out.counts[n - 1] == out.counts[n - 2] && out.counts[n - 2] == out.counts[n - 3];
  return out;
}

double flow_radius(const sampling::SampledSubmanifold& s, double c, const std::vector<CriticalPoint>& crit) {
  double r = 0.0;
  for (int v = 0; v < s.vertex_count(); ++v)
    if (s.tamed_ratio(v) > c) r = std::max(r, s.vertex(v).rho_N);
  for (const auto& cp : crit) r = std::max(r, cp.rho_N);
  return r + 1e-6 * std::max(1.0, r);
}

bool FlowReport::ok() const {
  if (!critical_inside || !ends.stable) return false;
  for (const auto& c : checks)
    if (!c.ok) return false;
  return !trajectories.empty();
}

FlowReport run_flow(const sampling::SampledSubmanifold& s, double c, double r0, double T, double step,
                    const std::vector<double>& end_radii, int max_seeds) {
  FlowReport rep;
  rep.c = c;
  rep.r0 = r0;
  rep.step = step;
  rep.T = T;
  const auto level = level_set_gamma(s, r0);
  rep.level_regular = level.regular;
  std::vector<Vec> seeds = level.seeds;
  if (max_seeds > 0 && static_cast<int>(seeds.size()) > max_seeds) {
    std::vector<Vec> picked;
    for (int k = 0; k < max_seeds; ++k)
      picked.push_back(seeds[static_cast<std::size_t>(k) * (seeds.size() - 1) / static_cast<std::size_t>(std::max(max_seeds - 1, 1))]);
    seeds = std::move(picked);
  }
  for (const auto& seed : seeds) {
    rep.trajectories.push_back(integrate_flow(s.chart(), s.pole(), seed, r0, c, T, step));
    rep.checks.push_back(check_trajectory(s.chart(), rep.trajectories.back()));
  }
  rep.critical = find_critical_points(s);
  for (const auto& cp : rep.critical) rep.critical_inside &= cp.rho_N < r0;
  rep.ends = count_ends(s, end_radii);

  const auto& first = rep.trajectories.front();
  if (first.nodes.size() > 4) {
    const double t_ref = 0.5 * first.nodes.back().t;
    try {
      rep.richardson = richardson_ratio(s.chart(), s.pole(), first.seed, r0, t_ref, 4.0 * step);
    } catch (const NumericalError&) {
      rep.richardson = 0.0;
    }
  }
  return rep;
}

void write_trajectory_csv(const FlowTrajectory& traj, std::ostream& out) {
  const int m = traj.seed.size();
  out << 't';
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << ",R,psi,sin_beta,bound_rhs\n";
  const auto old = out.precision(17);
  for (const auto& n : traj.nodes) {
    out << n.t;
    for (int i = 0; i < m; ++i) out << ',' << n.u[i];
    out << ',' << n.R << ',' << n.psi << ',' << n.sin_beta << ',' << n.bound_rhs << '\n';
  }
  out.precision(old);
}

nlohmann::json to_json(const FlowReport& rep) {
  nlohmann::json j;
  j["c"] = rep.c;
  j["r0"] = rep.r0;
  j["step"] = rep.step;
  j["T"] = rep.T;
  j["level_regular"] = rep.level_regular;
  nlohmann::json trajs = nlohmann::json::array();
  for (std::size_t k = 0; k < rep.trajectories.size(); ++k) {
    const auto& tr = rep.trajectories[k];
    const auto& ck = rep.checks[k];
    trajs.push_back({{"seed", std::vector<double>(tr.seed.data(), tr.seed.data() + tr.seed.size())},
                     {"nodes", tr.nodes.size()},
                     {"t_end", tr.nodes.empty() ? 0.0 : tr.nodes.back().t},
                     {"termination", termination_name(tr.termination)},
                     {"max_level_error", ck.max_level_error},
                     {"max_bound_excess", ck.max_bound_excess},
                     {"max_bound_rhs", ck.max_bound_rhs},
                     {"min_psi", ck.min_psi},
                     {"max_dif4_defect", ck.max_dif4_defect},
                     {"tol_flow", ck.tol_flow},
                     {"ok", ck.ok}});
  }
  j["trajectories"] = trajs;
  nlohmann::json crit = nlohmann::json::array();
  for (const auto& cp : rep.critical)
    crit.push_back({{"vertex", cp.vertex}, {"psi", cp.psi}, {"rho_N", cp.rho_N}, {"from_cell", cp.from_cell}});
  j["critical_points"] = crit;
  j["critical_inside"] = rep.critical_inside;
  j["ends"] = {{"radii", rep.ends.radii}, {"counts", rep.ends.counts}, {"stable", rep.ends.stable}};
  j["richardson_ratio"] = rep.richardson;
  j["ok"] = rep.ok();
  return j;
}

}  // namespace tamed::flow
