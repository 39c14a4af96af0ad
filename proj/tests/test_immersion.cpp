#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "tamed/errors.hpp"
#include "tamed/immersion.hpp"

using namespace tamed;
using namespace tamed::immersion;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

void check_form_invariants(const ImmersionChart& chart, const Vec& u) {
  const auto ff = fundamental_forms(chart, u);
  const auto& N = chart.ambient();
  const int m = chart.m();
  CHECK(ff.g.isApprox(ff.g.transpose(), 1e-14));
  CHECK(Eigen::SelfAdjointEigenSolver<Mat>(ff.g).eigenvalues().minCoeff() > 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      CHECK((ff.a(i, j) - ff.a(j, i)).norm() <= 1e-12 * (1.0 + ff.a(i, j).norm()));
      for (int k = 0; k < m; ++k) {
        const Vec t = ff.tangent.col(k);
        CHECK(std::abs(N.inner(ff.a(i, j), t)) <= 1e-8 * (1.0 + N.norm(ff.a(i, j)) * N.norm(t)));
      }
    }
  CHECK(ff.alpha_sup <= ff.alpha_hs + 1e-10);
  CHECK(N.norm(ff.H_trace) <= m * ff.alpha_sup + 1e-10);
}

}  // namespace

TEST_CASE("catalog lists every builtin") {
  for (const char* name : {"plane", "cylinder", "catenoid", "helicoid", "paraboloid", "euclidean_graph",
                           "geodesic_plane_hyperbolic"}) {
    bool found = false;
    for (const auto& e : catalog()) found = found || e.name == name;
    CHECK_MESSAGE(found, name);
    CHECK_NOTHROW(builtin(name));
  }
  CHECK_THROWS_AS(builtin("torus"), ConfigError);
  CHECK_THROWS_AS(builtin("catenoid", {{"U", -1}}), ConfigError);
  CHECK_THROWS_AS(builtin("geodesic_plane_hyperbolic", {{"kappa", 0.5}}), ConfigError);
}

TEST_CASE("second-order jets") {
  const auto plane = builtin("plane");
  const auto jp = plane.eval_jet2(v2(0.3, -1.2));
  for (const auto& d : jp.second) CHECK(d.norm() == 0.0);

  const auto cat = builtin("catenoid");
  const auto jc = cat.eval_jet2(v2(0.0, 0.0));
  CHECK(jc.dd(0, 0)[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(jc.value[0] == doctest::Approx(1.0).epsilon(1e-15));

  const auto cyl = builtin("cylinder");
  const double u = 0.7;
  const auto jy = cyl.eval_jet2(v2(u, 0.4));
  CHECK(jy.dd(0, 0)[0] == doctest::Approx(-std::cos(u)).epsilon(1e-14));
  CHECK(jy.dd(0, 0)[1] == doctest::Approx(-std::sin(u)).epsilon(1e-14));
  CHECK(jy.dd(0, 0)[2] == 0.0);
}

TEST_CASE("jets against central differences on random charts and points") {
  // Errors are relative to max(1, |value|, |difference quotient|), the resolution limit of a step-1e-4 quotient.
  std::mt19937 rng(3);
  const double h = 1e-4;
  for (const char* name : {"catenoid", "helicoid", "paraboloid", "euclidean_graph", "geodesic_plane_hyperbolic"}) {
    const auto chart = builtin(name);
    for (int k = 0; k < 10; ++k) {
      std::array<double, 2> u{};
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& ax = chart.axes()[i];
        std::uniform_real_distribution<double> U(ax.lo + 0.1 * (ax.hi - ax.lo), ax.hi - 0.1 * (ax.hi - ax.lo));
        u[i] = U(rng);
      }
      for (const auto& comp : chart.components()) {
        const auto jet = comp.evaluate_jet(u);
        auto at = [&](std::size_t i, double s) {
          auto x = u;
          x[i] += s;
          return comp.evaluate(x);
        };
        for (std::size_t i = 0; i < 2; ++i) {
          const double d = (at(i, h) - at(i, -h)) / (2 * h);
          const double dd = (at(i, h) - 2 * jet.v + at(i, -h)) / (h * h);
          CHECK(std::abs(jet.d[i] - d) <= 1e-6 * std::max({1.0, std::abs(jet.v), std::abs(d)}));
          CHECK(std::abs(jet.hess(static_cast<int>(i), static_cast<int>(i)) - dd) <=
                1e-6 * std::max({1.0, std::abs(jet.v), std::abs(dd)}));
        }
      }
    }
  }
}

TEST_CASE("chart jets agree with the component jets") {
  const auto chart = builtin("catenoid");
  const auto jet = chart.eval_jet2(v2(0.7, 2.1));
  const std::array<double, 2> x{0.7, 2.1};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto j = chart.components()[c].evaluate_jet(x);
    const auto k = static_cast<Eigen::Index>(c);
    CHECK(jet.value[k] == j.v);
    CHECK(jet.first(k, 0) == j.d[0]);
    CHECK(jet.dd(0, 1)[k] == j.hess(0, 1));
  }
}

TEST_CASE("fundamental forms of the controls") {
  const auto pf = fundamental_forms(builtin("plane"), v2(1.0, 2.0));
  CHECK(pf.g.isApprox(Mat::Identity(2, 2)));
  CHECK(pf.alpha_sup == 0.0);
  CHECK(pf.H_trace.norm() == 0.0);

  const auto cf = fundamental_forms(builtin("cylinder"), v2(1.0, 2.0));
  CHECK(cf.alpha_sup == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cf.H_trace.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cf.H_mean.norm() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cf.alpha_hs == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("catenoid: alpha_sup = 1/cosh^2 u and minimal on a 100x100 grid") {
  const auto cat = builtin("catenoid");
  double worst_H = 0.0;
  double worst_alpha = 0.0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      const double u = -4.0 + 8.0 * i / 99.0;
      const double v = 2.0 * M_PI * j / 100.0;
      const auto ff = fundamental_forms(cat, v2(u, v));
      worst_H = std::max(worst_H, ff.H_trace.norm());
      const double expect = 1.0 / (std::cosh(u) * std::cosh(u));
      worst_alpha = std::max(worst_alpha, std::abs(ff.alpha_sup - expect) / expect);
    }
  CHECK(worst_H <= 1e-8);
  CHECK(worst_alpha <= 1e-10);
}

TEST_CASE("helicoid axis curvature") {
  const auto ff = fundamental_forms(builtin("helicoid"), v2(0.3, 0.0));
  CHECK(ff.alpha_sup == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ff.H_trace.norm() <= 1e-12);
}

TEST_CASE("totally geodesic hyperbolic plane") {
  for (const char* coords : {"hyperboloid", "normal"}) {
    const auto chart = builtin("geodesic_plane_hyperbolic", {{"coordinates", coords}});
    double worst = 0.0;
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 21; ++j) {
        const double a = chart.axes()[0].lo + (chart.axes()[0].hi - chart.axes()[0].lo) * (i + 0.3) / 21.0;
        const double b = chart.axes()[1].lo + (chart.axes()[1].hi - chart.axes()[1].lo) * (j + 0.6) / 21.0;
        const Vec u = v2(a, b);
        CHECK(chart.ambient().contains(chart.point(u), 1e-8));
        worst = std::max(worst, fundamental_forms(chart, u).alpha_sup);
      }
    CHECK_MESSAGE(worst <= 1e-8, coords);
  }
}

TEST_CASE("form invariants across the catalog") {
  for (const char* name : {"plane", "cylinder", "catenoid", "helicoid", "paraboloid", "euclidean_graph",
                           "geodesic_plane_hyperbolic"}) {
    const auto chart = builtin(name);
    for (double s : {0.13, 0.41, 0.77})
      for (double t : {0.21, 0.58, 0.93}) {
        const Vec u = v2(chart.axes()[0].lo + s * (chart.axes()[0].hi - chart.axes()[0].lo),
                         chart.axes()[1].lo + t * (chart.axes()[1].hi - chart.axes()[1].lo));
        check_form_invariants(chart, u);
      }
  }
}

TEST_CASE("alpha is bilinear in coordinate vectors") {
  const auto ff = fundamental_forms(builtin("paraboloid"), v2(0.4, -0.9));
  const Vec X = v2(0.3, 1.1);
  const Vec Y = v2(-0.7, 0.2);
  Vec expect = Vec::Zero(3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) expect += X[i] * Y[j] * ff.a(i, j);
  CHECK((alpha_apply(ff, X, Y) - expect).norm() <= 1e-14);
}

TEST_CASE("inline charts and errors") {
  const nlohmann::json spec = {{"vars", {"u", "v"}},
                               {"domain", {{-1, 1}, {-1, 1}}},
                               {"components", {"u", "v", "u*v"}},
                               {"base", {0, 0}}};
  const auto chart = chart_from_json(spec);
  CHECK(chart.m() == 2);
  CHECK(chart.point(v2(0.5, 0.5))[2] == 0.25);

  auto bad = spec;
  bad["components"] = {"u", "u", "0"};
  CHECK_THROWS_AS(fundamental_forms(chart_from_json(bad), v2(0.1, 0.1)), DegeneracyError);
  bad = spec;
  bad["components"] = {"u", "w", "0"};
  CHECK_THROWS_AS(chart_from_json(bad), ParseError);
  bad = spec;
  bad.erase("vars");
  CHECK_THROWS_AS(chart_from_json(bad), ConfigError);
  bad = spec;
  bad["curvature"] = -1;
  CHECK_THROWS(chart_from_json(bad));
}

TEST_CASE("normalized mean curvature is bounded by alpha_sup") {
  for (const char* name : {"plane", "cylinder", "catenoid", "helicoid", "paraboloid", "euclidean_graph",
                           "geodesic_plane_hyperbolic"}) {
    const auto chart = builtin(name);
    for (double s : {0.13, 0.5, 0.77})
      for (double t : {0.21, 0.5, 0.93}) {
        const Vec u = v2(chart.axes()[0].lo + s * (chart.axes()[0].hi - chart.axes()[0].lo),
                         chart.axes()[1].lo + t * (chart.axes()[1].hi - chart.axes()[1].lo));
        const auto ff = fundamental_forms(chart, u);
        CHECK(chart.ambient().norm(ff.H_mean) <= ff.alpha_sup + 1e-10);
      }
  }
  // Umbilic apex of z = u^2 + v^2: principal curvatures 2, 2, so the trace exceeds alpha_sup.
  const auto apex = fundamental_forms(builtin("paraboloid"), v2(0.0, 0.0));
  CHECK(apex.alpha_sup == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(apex.H_trace.norm() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(apex.H_mean.norm() == doctest::Approx(2.0).epsilon(1e-14));
}
