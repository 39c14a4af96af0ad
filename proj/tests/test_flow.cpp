#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tamed/errors.hpp"
#include "tamed/flow.hpp"
#include "tamed/tamedness.hpp"

using namespace tamed;
using namespace tamed::flow;
using sampling::sample_chart;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec fd_gradient(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole) {
  const double h = 1e-6;
  Vec d(2);
  for (int i = 0; i < 2; ++i) {
    Vec e = Vec::Zero(2);
    e[i] = h;
    d[i] = (extrinsic_R(chart, u + e, pole) - extrinsic_R(chart, u - e, pole)) / (2 * h);
  }
  return d;
}

void check_nu_psi(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole) {
  const auto np = nu_and_psi(chart, u, pole);
  const auto ff = immersion::fundamental_forms(chart, u);
  const Vec dR = fd_gradient(chart, u, pole);
  const double psi_fd = std::sqrt(dR.dot(ff.g.ldlt().solve(dR)));
  CHECK(np.psi == doctest::Approx(psi_fd).epsilon(1e-6));
  CHECK(std::abs(std::sqrt(np.nu.dot(ff.g * np.nu)) - 1.0) <= 1e-10);
  // psi = <nu, grad rho_N> = cos beta.
  const Vec nu_amb = ff.tangent * np.nu;
  const Vec grad = chart.ambient().grad_distance(pole, chart.point(u));
  CHECK(std::abs(chart.ambient().inner(nu_amb, grad) - np.psi) <= 1e-10);
  CHECK(np.psi <= 1.0 + 1e-12);
  CHECK((np.velocity - np.nu / np.psi).norm() <= 1e-12 * np.velocity.norm());
}

}  // namespace

TEST_CASE("nu and psi") {
  const auto plane = immersion::builtin("plane");
  const auto np = nu_and_psi(plane, v2(3.0, -4.0), Vec::Zero(3));
  CHECK(np.psi == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(np.nu[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(np.nu[1] == doctest::Approx(-0.8).epsilon(1e-14));

  const auto cat = immersion::builtin("catenoid");
  const Vec origin = Vec::Zero(3);
  check_nu_psi(cat, v2(0.3, 1.0), origin);
  check_nu_psi(cat, v2(-2.0, 5.0), origin);
  CHECK(nu_and_psi(cat, v2(0.3, 1.0), origin).psi < 1.0);
  CHECK_THROWS_AS(nu_and_psi(cat, v2(0.0, 1.0), origin), CriticalPointError);

  Vec axis(3);
  axis << 0.0, 0.0, -1.0;
  const auto cyl = immersion::builtin("cylinder");
  check_nu_psi(cyl, v2(0.4, 2.0), axis);
  check_nu_psi(immersion::builtin("helicoid"), v2(0.4, 2.0), Vec::Zero(3));
}

TEST_CASE("level sets") {
  const auto plane = sample_chart(immersion::builtin("plane"), {64, 64});
  const auto g = level_set_gamma(plane, 1.0);
  CHECK(g.regular);
  CHECK(g.seeds.size() >= 8);
  for (const auto& u : g.seeds) CHECK(std::abs(extrinsic_R(plane.chart(), u, plane.pole()) - 1.0) <= 1e-8);

  const auto cat = sample_chart(immersion::builtin("catenoid"), {128, 64});
  const auto gc = level_set_gamma(cat, 2.0);
  int upper = 0;
  int lower = 0;
  for (const auto& u : gc.seeds) {
    CHECK(std::abs(extrinsic_R(cat.chart(), u, cat.pole()) - 2.0) <= 1e-8);
    (u[0] > 0 ? upper : lower)++;
  }
  CHECK(upper > 0);
  CHECK(lower > 0);
  CHECK_THROWS_AS(level_set_gamma(cat, 1e3), LevelError);
}

TEST_CASE("plane trajectories are radial and exact") {
  const auto plane = immersion::builtin("plane");
  const auto tr = integrate_flow(plane, Vec::Zero(3), v2(0.6, 0.8), 1.0, 0.5, 3.0, 0.05);
  CHECK(tr.termination == Termination::MaxTime);
  for (const auto& n : tr.nodes) {
    CHECK(std::abs(n.R - n.t - 1.0) <= 1e-10);
    CHECK(std::abs(n.u[0] * 0.8 - n.u[1] * 0.6) <= 1e-10);
    CHECK(n.psi == doctest::Approx(1.0));
  }
  const auto ck = check_trajectory(plane, tr);
  CHECK(ck.ok);
  CHECK(ck.tol_flow == doctest::Approx(1e-4));
}

TEST_CASE("catenoid trajectories satisfy the level and angle bounds") {
  const auto s = sample_chart(immersion::builtin("catenoid"), {128, 64});
  const auto rep = run_flow(s, 0.5, 2.0, 10.0, 0.05, {10.0, 12.5, 15.0, 17.5, 20.0}, 16);
  REQUIRE(!rep.trajectories.empty());
  for (std::size_t k = 0; k < rep.checks.size(); ++k) {
    const auto& ck = rep.checks[k];
    CHECK(ck.max_level_error <= ck.tol_flow);
    CHECK(ck.max_bound_excess <= ck.tol_flow);
    for (const auto& n : rep.trajectories[k].nodes)
      if (n.t > 0.0) CHECK(n.sin_beta < n.bound_rhs);
    CHECK(ck.max_bound_rhs < 1.0);
    CHECK(ck.min_psi > kTolCrit);
  }
  CHECK(rep.critical_inside);
  CHECK(rep.ok());
}

TEST_CASE("trajectory leaving the chart terminates cleanly") {
  const auto plane = immersion::builtin("plane");
  const auto tr = integrate_flow(plane, Vec::Zero(3), v2(1.0, 0.0), 1.0, 0.5, 30.0, 0.05);
  CHECK(tr.termination == Termination::DomainBoundary);
  for (const auto& n : tr.nodes) CHECK(plane.contains(n.u));
}

TEST_CASE("RK4 Richardson ratio") {
  const auto s = sample_chart(immersion::builtin("catenoid"), {64, 32});
  const Vec seed = level_set_gamma(s, 2.0).seeds.front();
  const double ratio = richardson_ratio(s.chart(), s.pole(), seed, 2.0, 1.0, 0.2);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("critical points") {
  const auto plane = sample_chart(immersion::builtin("plane"), {65, 65});
  const auto cp = find_critical_points(plane);
  REQUIRE(cp.size() == 1);
  CHECK(cp[0].vertex == plane.base_vertex());

  const auto cat = sample_chart(immersion::builtin("catenoid"), {129, 64});
  const auto cc = find_critical_points(cat);
  REQUIRE(!cc.empty());
  for (const auto& c : cc) CHECK(c.rho_N == doctest::Approx(1.0).epsilon(0.01));

  const auto hel = sample_chart(immersion::builtin("helicoid"), {64, 64});
  CHECK_NOTHROW(find_critical_points(hel));
}

TEST_CASE("end counts") {
  const auto cat = sample_chart(immersion::builtin("catenoid"), {128, 64});
  const auto ec = count_ends(cat, {10.0, 15.0, 20.0});
  CHECK(ec.counts == std::vector<int>{2, 2, 2});
  CHECK(ec.stable);

  const auto plane = sample_chart(immersion::builtin("plane"), {64, 64});
  CHECK(count_ends(plane, {1.0, 2.0, 3.0}).counts == std::vector<int>{1, 1, 1});

  const auto cyl = sample_chart(immersion::builtin("cylinder"), {32, 64});
  CHECK(count_ends(cyl, {2.0, 4.0, 6.0}).counts == std::vector<int>{2, 2, 2});
}

TEST_CASE("trajectory CSV") {
  const auto tr = integrate_flow(immersion::builtin("plane"), Vec::Zero(3), v2(0.6, 0.8), 1.0, 0.5, 0.2, 0.05);
  std::ostringstream out;
  write_trajectory_csv(tr, out);
  CHECK(out.str().rfind("t,u1,u2,R,psi,sin_beta,bound_rhs\n", 0) == 0);
}
