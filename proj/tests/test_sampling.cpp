#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tamed/errors.hpp"
#include "tamed/sampling.hpp"

using namespace tamed;
using namespace tamed::sampling;

namespace {

int nearest_vertex(const SampledSubmanifold& s, double u, double v) {
  int best = 0;
  double bd = 1e300;
  for (int k = 0; k < s.vertex_count(); ++k) {
    const auto& x = s.vertex(k).u;
    const double d = std::hypot(x[0] - u, x[1] - v);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("plane sample") {
  const auto s = sample_chart(immersion::builtin("plane"), {64, 64});
  CHECK(s.vertex_count() == 4096);
  for (const auto& v : s.vertices()) CHECK(v.g.isApprox(Mat::Identity(2, 2), 1e-15));
  CHECK(s.vertex(s.base_vertex()).rho_M == 0.0);
}

TEST_CASE("plane: straight-line intrinsic distance") {
  const auto s = sample_chart(immersion::builtin("plane"), {128, 128});
  const int k = nearest_vertex(s, 3.0, 4.0);
  const auto& u = s.vertex(k).u;
  const auto& b = s.vertex(s.base_vertex()).u;
  const double exact = std::hypot(u[0] - b[0], u[1] - b[1]);
  CHECK(std::abs(s.vertex(k).rho_M - exact) <= 0.02 * exact);
}

TEST_CASE("catenoid: neck distance and meridian distance") {
  const auto odd = sample_chart(immersion::builtin("catenoid"), {129, 64});
  CHECK(odd.vertex(nearest_vertex(odd, 0.0, 0.0)).rho_N == doctest::Approx(1.0).epsilon(1e-15));

  const auto s = sample_chart(immersion::builtin("catenoid"), {128, 64});
  const int neck = nearest_vertex(s, 0.0, 0.0);
  const double u0 = s.vertex(neck).u[0];
  CHECK(s.vertex(neck).rho_N == doctest::Approx(std::hypot(std::cosh(u0), u0)).epsilon(1e-14));
  CHECK(s.vertex(neck).rho_N == doctest::Approx(1.0).epsilon(2e-3));

  const double ub = s.vertex(s.base_vertex()).u[0];
  for (double u : {0.5, 1.0, 2.0, 3.0, -2.5}) {
    const int k = nearest_vertex(s, u, 0.0);
    const double exact = std::abs(std::sinh(s.vertex(k).u[0]) - std::sinh(ub));
    CHECK(std::abs(s.vertex(k).rho_M - exact) <= 0.03 * exact);
  }
}

TEST_CASE("cylinder: half-turn distance") {
  const auto s = sample_chart(immersion::builtin("cylinder"), {64, 128});
  const int k = nearest_vertex(s, M_PI, 0.0);
  CHECK(std::abs(s.vertex(k).rho_M - M_PI) <= 2.0 * s.eps_mesh());
}

TEST_CASE("distance invariants across the catalog") {
  for (const char* name : {"plane", "cylinder", "catenoid", "helicoid", "paraboloid", "euclidean_graph",
                           "geodesic_plane_hyperbolic"}) {
    const auto s = sample_chart(immersion::builtin(name), {48, 48});
    const double eps = s.eps_mesh();
    for (int k = 0; k < s.vertex_count(); ++k) {
      const auto& v = s.vertex(k);
      CHECK(v.rho_N <= v.rho_M + eps);
      for (const auto& e : s.edges(k)) {
        const double amb = s.chart().ambient().distance(v.point, s.vertex(e.to).point);
        CHECK(e.length >= amb - eps);
      }
    }
  }
}

TEST_CASE("refinement never increases rho_M by more than eps_mesh") {
  const auto chart = immersion::builtin("paraboloid", {{"L", 2}});
  const auto coarse = sample_chart(chart, {33, 33});
  const auto fine = sample_chart(chart, {65, 65});
  for (int i = 0; i < 33; ++i)
    for (int j = 0; j < 33; ++j) {
      const int a = coarse.index_of({i, j, 0, 0});
      const int b = fine.index_of({2 * i, 2 * j, 0, 0});
      REQUIRE((coarse.vertex(a).u - fine.vertex(b).u).norm() <= 1e-12);
      CHECK(fine.vertex(b).rho_M <= coarse.vertex(a).rho_M + coarse.eps_mesh());
    }
}

TEST_CASE("exhaustion") {
  const auto s = sample_chart(immersion::builtin("plane"), {64, 64});
  const auto C = exhaustion(s, {1.0, 2.0, 3.0});
  REQUIRE(C.size() == 3);
  CHECK(std::binary_search(C[0].begin(), C[0].end(), s.base_vertex()));
  for (std::size_t i = 0; i + 1 < C.size(); ++i) CHECK(std::includes(C[i + 1].begin(), C[i + 1].end(), C[i].begin(), C[i].end()));
  for (int k : C[1]) CHECK(s.vertex(k).rho_M <= 2.0);

  const auto all = exhaustion(s, {1e6});
  CHECK(static_cast<int>(all[0].size()) == s.vertex_count());

  CHECK_THROWS_AS(exhaustion(s, {}), DomainError);
  CHECK_THROWS_AS(exhaustion(s, {2.0, 1.0}), DomainError);
}

TEST_CASE("catenoid exhaustion at radius sinh(1)") {
  const auto s = sample_chart(immersion::builtin("catenoid"), {128, 64});
  const auto C = exhaustion(s, {std::sinh(1.0)});
  const double ub = s.vertex(s.base_vertex()).u[0];
  double max_u = 0.0;
  for (int k : C[0]) {
    CHECK(s.vertex(k).rho_M <= std::sinh(1.0));
    if (std::abs(s.vertex(k).u[1]) < 1e-12) max_u = std::max(max_u, s.vertex(k).u[0]);
  }
  CHECK(max_u == doctest::Approx(std::asinh(std::sinh(1.0) + std::sinh(ub))).epsilon(0.07));
}

TEST_CASE("periodic wrap and grid indexing") {
  const auto s = sample_chart(immersion::builtin("catenoid"), {32, 16});
  const int v = s.index_of({5, 15, 0, 0});
  CHECK(s.offset(v, {0, 1, 0, 0}) == s.index_of({5, 0, 0, 0}));
  CHECK(s.offset(s.index_of({31, 3, 0, 0}), {1, 0, 0, 0}) == -1);
  CHECK(s.on_truncation_edge(s.index_of({0, 7, 0, 0})));
  CHECK_FALSE(s.on_truncation_edge(s.index_of({4, 0, 0, 0})));
  const auto idx = s.grid_index(v);
  CHECK(idx[0] == 5);
  CHECK(idx[1] == 15);
}

TEST_CASE("resolution and degeneracy errors") {
  CHECK_THROWS_AS(sample_chart(immersion::builtin("plane"), {8, 64}), DomainError);
  const nlohmann::json spec = {{"vars", {"u", "v"}}, {"domain", {{-1, 1}, {-1, 1}}}, {"components", {"u", "u^3", "u"}}};
  CHECK_THROWS_AS(sample_chart(immersion::chart_from_json(spec), {16, 16}), DegeneracyError);
}

TEST_CASE("vertex CSV columns") {
  const auto s = sample_chart(immersion::builtin("plane"), {16, 16});
  std::ostringstream out;
  write_vertex_csv(s, out);
  const std::string text = out.str();
  CHECK(text.rfind("u1,u2,y1,y2,y3,rho_M,rho_N,alpha_sup,tamed_ratio\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 256);
}

TEST_CASE("curves sample on one axis") {
  const nlohmann::json spec = {{"vars", {"t"}}, {"domain", {{-3, 3}}}, {"components", {"t", "t^2"}}, {"base", {0}}};
  const auto s = sample_chart(immersion::chart_from_json(spec), {513});
  const int k = s.vertex_count() - 1;
  const double exact = 0.5 * (3.0 * std::sqrt(37.0) + std::asinh(6.0) / 2.0);
  CHECK(s.vertex(k).rho_M == doctest::Approx(exact).epsilon(1e-3));
}
