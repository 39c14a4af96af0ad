#include "tamed/immersion.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "tamed/errors.hpp"

namespace tamed::immersion {

namespace {

constexpr double kSheetTol = 1e-8;
constexpr double kMetricFloor = 1e-10;

std::string format_point(const Vec& u) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(u[i]);
  }
  return s + ")";
}

// |A(X)|^2 for A(X) = sum_ab X_a X_b at[a*m+b] under the Lorentz/Euclidean inner product.
double quad_norm2(const kernel::AmbientModel& amb, const std::vector<Vec>& at, int m, const Vec& X) {
  Vec acc = Vec::Zero(at[0].size());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) acc += X[a] * X[b] * at[static_cast<std::size_t>(a * m + b)];
  return std::max(amb.inner(acc, acc), 0.0);
}

double sup_two_dim(const kernel::AmbientModel& amb, const std::vector<Vec>& at) {
  auto neg = [&](double th) {
    Vec X(2);
    X << std::cos(th), std::sin(th);
    return -quad_norm2(amb, at, 2, X);
  };
  constexpr int kScan = 360;
  const double dth = std::numbers::pi / kScan;
  int best = 0;
  double best_val = 0.0;
  for (int k = 0; k < kScan; ++k) {
    const double v = neg(k * dth);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  if (best_val == 0.0) return 0.0;
  const auto r = boost::math::tools::brent_find_minima(neg, (best - 1) * dth, (best + 1) * dth, 50);
  return std::sqrt(-std::min(r.second, best_val));
}

double sup_general(const kernel::AmbientModel& amb, const std::vector<Vec>& at, int m) {
  // Orthonormal basis of the span of the alpha vectors.
  std::vector<Vec> basis;
  for (const auto& w : at) {
    Vec r = w;
    for (const auto& e : basis) r -= amb.inner(r, e) * e;
    const double n = amb.norm(r);
    if (n > 1e-12 * (1.0 + amb.norm(w))) basis.push_back(r / n);
  }
  if (basis.empty()) return 0.0;

  std::vector<Vec> starts;
  for (const auto& e : basis) {
    Mat S(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) S(a, b) = amb.inner(at[static_cast<std::size_t>(a * m + b)], e);
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    for (int k = 0; k < m; ++k) starts.push_back(es.eigenvectors().col(k));
  }
  for (int a = 0; a < m; ++a) starts.push_back(Vec::Unit(m, a));

  double best = 0.0;
  for (Vec X : starts) {
    X.normalize();
    double val = quad_norm2(amb, at, m, X);
    double step = 0.25;
    for (int it = 0; it < 400 && step > 1e-14; ++it) {
      Vec acc = Vec::Zero(at[0].size());
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) acc += X[a] * X[b] * at[static_cast<std::size_t>(a * m + b)];
      Vec grad(m);
      for (int a = 0; a < m; ++a) {
        Vec da = Vec::Zero(at[0].size());
        for (int b = 0; b < m; ++b) da += X[b] * at[static_cast<std::size_t>(a * m + b)];
        grad[a] = 4.0 * amb.inner(acc, da);
      }
      grad -= grad.dot(X) * X;
      if (grad.norm() < 1e-15) break;
      Vec trial = (X + step * grad / grad.norm()).normalized();
      const double tv = quad_norm2(amb, at, m, trial);
      if (tv > val) {
        X = trial;
        val = tv;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, val);
  }
  return std::sqrt(best);
}

std::vector<double> to_doubles(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(what + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Vec to_vec(const nlohmann::json& j, const std::string& what) {
  const auto v = to_doubles(j, what);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double num_param(const nlohmann::json& p, const char* key, double fallback) {
  if (!p.is_object() || !p.contains(key)) return fallback;
  if (!p.at(key).is_number()) throw ConfigError(std::string("parameter '") + key + "' must be a number");
  return p.at(key).get<double>();
}

std::string fmt(double x) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  std::string s(buf.data(), r.ptr);
  return x < 0 ? "(" + s + ")" : s;
}

void require_positive(double x, const char* key) {
  if (!(x > 0.0)) throw ConfigError(std::string("parameter '") + key + "' must be positive");
}

}  // namespace

ImmersionChart::ImmersionChart(std::string name, std::vector<Axis> axes, const std::vector<std::string>& components,
                               kernel::AmbientModel ambient, Vec base, std::optional<Vec> pole)
    : name_(std::move(name)), axes_(std::move(axes)), ambient_(ambient), base_(std::move(base)) {
  if (axes_.empty() || m() > expr::kMaxChartDim)
    throw DomainError("chart dimension must be between 1 and " + std::to_string(expr::kMaxChartDim));
  std::vector<std::string> vars;
  for (const auto& a : axes_) {
    if (!(a.lo < a.hi)) throw DomainError("empty domain interval for " + a.name);
    vars.push_back(a.name);
  }
  if (static_cast<int>(components.size()) != ambient_.coord_count())
    throw DomainError("expected " + std::to_string(ambient_.coord_count()) + " components, got " +
                      std::to_string(components.size()));
  for (const auto& src : components) components_.push_back(expr::parse_immersion(src, vars));
  if (base_.size() != m() || !contains(base_)) throw DomainError("base point outside the chart domain");
  if (pole) {
    pole_ = ambient_.renormalize(*pole);
    explicit_pole_ = true;
  } else {
    pole_ = point(base_);
  }
}

bool ImmersionChart::contains(const Vec& u) const {
  if (u.size() != m()) return false;
  for (int i = 0; i < m(); ++i) {
    const auto& a = axes_[static_cast<std::size_t>(i)];
    if (a.periodic) continue;
    const double slack = 1e-12 * (a.hi - a.lo);
    if (u[i] < a.lo - slack || u[i] > a.hi + slack) return false;
  }
  return true;
}

Vec ImmersionChart::wrap(const Vec& u) const {
  Vec w = u;
  for (int i = 0; i < m(); ++i) {
    const auto& a = axes_[static_cast<std::size_t>(i)];
    if (!a.periodic) continue;
    const double period = a.hi - a.lo;
    w[i] = a.lo + std::fmod(std::fmod(u[i] - a.lo, period) + period, period);
  }
  return w;
}

void ImmersionChart::check_sheet(const Vec& y, const Vec& u) const {
  if (!ambient_.is_hyperboloid()) return;
  if (!(y[0] > 0.0) || std::abs(ambient_.curvature() * ambient_.inner(y, y) - 1.0) > kSheetTol)
    throw DomainError("chart leaves the hyperboloid sheet at " + format_point(u));
}

Vec ImmersionChart::point(const Vec& u) const {
  Vec y(ambient_.coord_count());
  for (int k = 0; k < y.size(); ++k) y[k] = components_[static_cast<std::size_t>(k)].evaluate({u.data(), static_cast<std::size_t>(u.size())});
  check_sheet(y, u);
  return ambient_.renormalize(y);
}

ChartJet ImmersionChart::eval_jet2(const Vec& u) const {
  ChartJet jet;
  jet.m = m();
  const int nc = ambient_.coord_count();
  jet.value.resize(nc);
  jet.first.resize(nc, m());
  jet.second.assign(static_cast<std::size_t>(m() * m()), Vec(nc));
  for (int k = 0; k < nc; ++k) {
    const auto j = components_[static_cast<std::size_t>(k)].evaluate_jet({u.data(), static_cast<std::size_t>(u.size())});
    jet.value[k] = j.v;
    for (int a = 0; a < m(); ++a) {
      jet.first(k, a) = j.d[static_cast<std::size_t>(a)];
      for (int b = 0; b < m(); ++b) jet.second[static_cast<std::size_t>(a * m() + b)][k] = j.hess(a, b);
    }
  }
  check_sheet(jet.value, u);
  return jet;
}

FundamentalForms fundamental_forms(const ImmersionChart& chart, const Vec& u) {
  return fundamental_forms(chart, chart.eval_jet2(u));
}

FundamentalForms fundamental_forms(const ImmersionChart& chart, const ChartJet& jet) {
  const auto& amb = chart.ambient();
  const int m = jet.m;
  FundamentalForms ff;
  ff.m = m;
  ff.point = jet.value;
  ff.tangent = jet.first;
  for (int i = 0; i < m; ++i) ff.tangent.col(i) = amb.tangent_project(ff.point, jet.first.col(i));

  ff.g.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) ff.g(i, j) = amb.inner(ff.tangent.col(i), ff.tangent.col(j));
  Eigen::SelfAdjointEigenSolver<Mat> ge(ff.g, Eigen::EigenvaluesOnly);
  if (!(ge.eigenvalues().minCoeff() > kMetricFloor))
    throw DegeneracyError("induced metric is degenerate (min eigenvalue " + std::to_string(ge.eigenvalues().minCoeff()) + ")");
  const Eigen::LLT<Mat> llt(ff.g);

  // Normal frame: null space of <., y> and <., t_i>, so the ambient projection never multiplies by y.
  const int C = amb.coord_count();
  const int r = amb.is_hyperboloid() ? m + 1 : m;
  Mat rows(C, r);
  for (int i = 0; i < m; ++i) rows.col(i) = ff.tangent.col(i);
  if (amb.is_hyperboloid()) rows.col(m) = ff.point;
  if (amb.is_hyperboloid()) rows.row(0) *= -1.0;
  const Eigen::HouseholderQR<Mat> qr(rows);
  const Mat Q = qr.householderQ();
  std::vector<Vec> normals;
  for (int c = r; c < C; ++c) {
    Vec nu = Q.col(c);
    for (const auto& e : normals) nu -= amb.inner(nu, e) * e;
    nu /= amb.norm(nu);
    normals.push_back(nu);
  }

  ff.alpha.assign(static_cast<std::size_t>(m * m), Vec());
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const Vec& d = jet.dd(i, j);
      Vec a = Vec::Zero(C);
      for (const auto& nu : normals) a += amb.inner(d, nu) * nu;
      ff.alpha[static_cast<std::size_t>(i * m + j)] = a;
      ff.alpha[static_cast<std::size_t>(j * m + i)] = a;
    }
  }

  // B = L^{-T}: columns are the coordinates of a g-orthonormal frame.
  const Mat L = llt.matrixL();
  const Mat B = L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(m, m));
  std::vector<Vec> at(static_cast<std::size_t>(m * m), Vec::Zero(ff.point.size()));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Vec acc = Vec::Zero(ff.point.size());
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) acc += B(i, a) * B(j, b) * ff.a(i, j);
      at[static_cast<std::size_t>(a * m + b)] = acc;
    }

  ff.H_trace = Vec::Zero(ff.point.size());
  double hs2 = 0.0;
  for (int a = 0; a < m; ++a) {
    ff.H_trace += at[static_cast<std::size_t>(a * m + a)];
    for (int b = 0; b < m; ++b) {
      const auto& v = at[static_cast<std::size_t>(a * m + b)];
      hs2 += std::max(amb.inner(v, v), 0.0);
    }
  }
  ff.H_mean = ff.H_trace / m;
  ff.alpha_hs = std::sqrt(hs2);
  if (m == 1)
    ff.alpha_sup = amb.norm(at[0]);
  else if (m == 2)
    ff.alpha_sup = sup_two_dim(amb, at);
  else
    ff.alpha_sup = sup_general(amb, at, m);
  return ff;
}

Vec alpha_apply(const FundamentalForms& ff, const Vec& X, const Vec& Y) {
  Vec acc = Vec::Zero(ff.point.size());
  for (int i = 0; i < ff.m; ++i)
    for (int j = 0; j < ff.m; ++j) acc += X[i] * Y[j] * ff.a(i, j);
  return acc;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries{
      {"plane", "(u, v, 0) in R^3, domain [-L, L]^2 (L = 5)"},
      {"cylinder", "(r cos u, r sin u, v) in R^3, u periodic, v in [-L, L] (r = 1, L = 10)"},
      {"catenoid", "(cosh u cos v, cosh u sin v, u) in R^3, u in [-U, U] (U = 4), v periodic, pole at the origin"},
      {"helicoid", "(v cos u, v sin u, u) in R^3, u in [-U, U], v in [-V, V] (U = V = 10)"},
      {"paraboloid", "(u, v, a (u^2 + v^2)) in R^3, domain [-L, L]^2 (a = 1, L = 5)"},
      {"euclidean_graph", "(u, v, height(u, v)) in R^3, domain [-L, L]^2 (height = exp(-(u^2+v^2)), L = 5)"},
      {"geodesic_plane_hyperbolic",
       "totally geodesic H^2 in H^3(kappa) through the origin (kappa = -1, extent = 6, coordinates = hyperboloid | "
       "normal; normal grids must avoid u = v = 0)"},
  };
  return entries;
}

ImmersionChart builtin(const std::string& name) { return builtin(name, nlohmann::json::object()); }

ImmersionChart builtin(const std::string& name, const nlohmann::json& params) {
  if (!params.is_null() && !params.is_object()) throw ConfigError("builtin parameters must be an object");
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  auto make = [&](std::vector<Axis> axes, std::vector<std::string> comps, kernel::AmbientModel amb, Vec base,
                  std::optional<Vec> pole) {
    if (p.contains("base")) base = to_vec(p.at("base"), "base");
    if (p.contains("pole")) {
      Vec q = to_vec(p.at("pole"), "pole");
      pole = q.size() == amb.dim() && amb.is_hyperboloid() ? amb.lift(q) : q;
    }
    return ImmersionChart(name, std::move(axes), comps, amb, std::move(base), std::move(pole));
  };
  const double two_pi = 2.0 * std::numbers::pi;
  const auto e3 = kernel::AmbientModel::euclidean(3);
  if (name == "plane") {
    const double L = num_param(p, "L", 5.0);
    require_positive(L, "L");
    return make({{"u", -L, L}, {"v", -L, L}}, {"u", "v", "0"}, e3, Vec::Zero(2), std::nullopt);
  }
  if (name == "cylinder") {
    const double r = num_param(p, "r", 1.0);
    const double L = num_param(p, "L", 10.0);
    require_positive(r, "r");
    require_positive(L, "L");
    return make({{"u", 0.0, two_pi, true}, {"v", -L, L}}, {fmt(r) + "*cos(u)", fmt(r) + "*sin(u)", "v"}, e3,
                Vec::Zero(2), std::nullopt);
  }
  if (name == "catenoid") {
    const double U = num_param(p, "U", 4.0);
    require_positive(U, "U");
    return make({{"u", -U, U}, {"v", 0.0, two_pi, true}}, {"cosh(u)*cos(v)", "cosh(u)*sin(v)", "u"}, e3,
                Vec::Zero(2), Vec::Zero(3));
  }
  if (name == "helicoid") {
    const double U = num_param(p, "U", 10.0);
    const double V = num_param(p, "V", 10.0);
    require_positive(U, "U");
    require_positive(V, "V");
    return make({{"u", -U, U}, {"v", -V, V}}, {"v*cos(u)", "v*sin(u)", "u"}, e3, Vec::Zero(2), std::nullopt);
  }
  if (name == "paraboloid") {
    const double a = num_param(p, "a", 1.0);
    const double L = num_param(p, "L", 5.0);
    require_positive(L, "L");
    return make({{"u", -L, L}, {"v", -L, L}}, {"u", "v", fmt(a) + "*(u^2 + v^2)"}, e3, Vec::Zero(2), std::nullopt);
  }
  if (name == "euclidean_graph") {
    const double L = num_param(p, "L", 5.0);
    require_positive(L, "L");
    std::string height = "exp(-(u^2 + v^2))";
    if (p.contains("height")) {
      if (!p.at("height").is_string()) throw ConfigError("parameter 'height' must be a string");
      height = p.at("height").get<std::string>();
    }
    return make({{"u", -L, L}, {"v", -L, L}}, {"u", "v", height}, e3, Vec::Zero(2), std::nullopt);
  }
  if (name == "geodesic_plane_hyperbolic") {
    const double kappa = num_param(p, "kappa", -1.0);
    if (!(kappa < 0.0)) throw ConfigError("parameter 'kappa' must be negative");
    const double extent = num_param(p, "extent", 6.0);
    require_positive(extent, "extent");
    const double s = std::sqrt(-kappa);
    const auto amb = kernel::AmbientModel::hyperbolic(kappa, 3);
    const std::string coords = p.value("coordinates", std::string("hyperboloid"));
    if (coords == "normal") {
      // Geodesic normal coordinates about the origin; the origin itself is a removable 0/0.
      const std::string r = "sqrt(u^2 + v^2)";
      const std::string k = fmt(s);
      const std::string sh = "sinh(" + k + "*" + r + ")/(" + k + "*" + r + ")";
      return make({{"u", -extent, extent}, {"v", -extent, extent}},
                  {"cosh(" + k + "*" + r + ")/" + k, sh + "*u", sh + "*v", "0"}, amb, Vec::Zero(2), amb.origin());
    }
    if (coords != "hyperboloid") throw ConfigError("parameter 'coordinates' must be 'hyperboloid' or 'normal'");
    const double A = std::sinh(s * extent) / s;
    return make({{"u", -A, A}, {"v", -A, A}}, {"sqrt(" + fmt(-1.0 / kappa) + " + u^2 + v^2)", "u", "v", "0"}, amb,
                Vec::Zero(2), std::nullopt);
  }
  throw ConfigError("unknown builtin immersion '" + name + "'");
}

ImmersionChart chart_from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ConfigError("inline chart must be an object");
  for (const char* key : {"vars", "domain", "components"})
    if (!spec.contains(key)) throw ConfigError(std::string("inline chart is missing '") + key + "'");
  const auto& vars = spec.at("vars");
  const auto& dom = spec.at("domain");
  if (!vars.is_array() || !dom.is_array() || vars.size() != dom.size() || vars.empty())
    throw ConfigError("'vars' and 'domain' must be arrays of equal nonzero length");
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (!vars[i].is_string()) throw ConfigError("'vars' entries must be strings");
    const auto iv = to_doubles(dom[i], "domain interval");
    if (iv.size() != 2) throw ConfigError("domain intervals must have two entries");
    axes.push_back({vars[i].get<std::string>(), iv[0], iv[1], false});
  }
  if (spec.contains("periodic")) {
    const auto& per = spec.at("periodic");
    if (!per.is_array() || per.size() != axes.size()) throw ConfigError("'periodic' must match 'vars'");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      if (!per[i].is_boolean()) throw ConfigError("'periodic' entries must be booleans");
      axes[i].periodic = per[i].get<bool>();
    }
  }
  std::vector<std::string> comps;
  if (!spec.at("components").is_array()) throw ConfigError("'components' must be an array of strings");
  for (const auto& c : spec.at("components")) {
    if (!c.is_string()) throw ConfigError("'components' must be an array of strings");
    comps.push_back(c.get<std::string>());
  }
  const double kappa = spec.value("curvature", 0.0);
  if (kappa > 0.0) throw ConfigError("curvature must be <= 0");
  const int n = kappa < 0.0 ? static_cast<int>(comps.size()) - 1 : static_cast<int>(comps.size());
  const kernel::AmbientModel amb(kappa, n);
  Vec base = Vec::Zero(static_cast<Eigen::Index>(axes.size()));
  if (spec.contains("base")) base = to_vec(spec.at("base"), "base");
  std::optional<Vec> pole;
  if (spec.contains("pole")) {
    Vec q = to_vec(spec.at("pole"), "pole");
    pole = q.size() == amb.dim() && amb.is_hyperboloid() ? amb.lift(q) : q;
  }
  return ImmersionChart(spec.value("name", std::string("inline")), std::move(axes), comps, amb, std::move(base),
                        std::move(pole));
}

}  // namespace tamed::immersion
