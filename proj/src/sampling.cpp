#include "tamed/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>

#include "tamed/errors.hpp"

namespace tamed::sampling {

namespace {

constexpr int kMinResolution = 16;

std::vector<std::array<int, 4>> make_stencil(int m) {
  std::vector<std::array<int, 4>> st;
  if (m == 1) {
    st.push_back({1, 0, 0, 0});
    st.push_back({-1, 0, 0, 0});
    return st;
  }
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      if ((a != 0 || b != 0) && std::gcd(a, b) == 1) st.push_back({a, b, 0, 0});
  return st;
}

std::string describe(const Vec& u) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(u[i]);
  }
  return s + ")";
}

}  // namespace

SampledSubmanifold::SampledSubmanifold(immersion::ImmersionChart chart, std::vector<int> resolution,
                                       SampleOptions options)
    : chart_(std::move(chart)), resolution_(std::move(resolution)) {
  const int m = chart_.m();
  if (m > 2) throw DomainError("sampling supports charts of dimension 1 or 2");
  if (static_cast<int>(resolution_.size()) != m) throw DomainError("resolution must have one entry per chart axis");
  for (int r : resolution_)
    if (r < kMinResolution) throw DomainError("resolution must be at least 16 per axis");

  std::size_t count = 1;
  for (int i = 0; i < m; ++i) {
    const auto& ax = chart_.axes()[static_cast<std::size_t>(i)];
    const int n = resolution_[static_cast<std::size_t>(i)];
    spacing_.push_back(ax.periodic ? (ax.hi - ax.lo) / n : (ax.hi - ax.lo) / (n - 1));
    count *= static_cast<std::size_t>(n);
  }
  stencil_ = make_stencil(m);

  vertices_.resize(count);
  if (options.keep_forms) forms_.resize(count);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < count; ++v) {
    const auto idx = grid_index(static_cast<int>(v));
    Vec u(m);
    for (int i = 0; i < m; ++i) u[i] = chart_.axes()[static_cast<std::size_t>(i)].lo + idx[static_cast<std::size_t>(i)] * spacing_[static_cast<std::size_t>(i)];
    immersion::FundamentalForms ff;
    try {
      ff = immersion::fundamental_forms(chart_, u);
    } catch (const DegeneracyError& e) {
      throw DegeneracyError(std::string(e.what()) + " at parameter " + describe(u));
    }
    auto& vd = vertices_[v];
    vd.u = u;
    vd.point = ff.point;
    vd.g = ff.g;
    vd.alpha_sup = ff.alpha_sup;
    vd.alpha_hs = ff.alpha_hs;
    vd.H_trace_norm = chart_.ambient().norm(ff.H_trace);
    vd.H_mean_norm = chart_.ambient().norm(ff.H_mean);
    if (options.keep_forms) forms_[v] = std::move(ff);

    Vec d = chart_.wrap(u) - chart_.wrap(chart_.base());
    for (int i = 0; i < m; ++i) {
      const auto& ax = chart_.axes()[static_cast<std::size_t>(i)];
      if (ax.periodic) {
        const double p = ax.hi - ax.lo;
        d[i] = std::remainder(d[i], p);
      }
    }
    if (d.norm() < best) {
      best = d.norm();
      base_ = static_cast<int>(v);
    }
  }

  pole_ = chart_.has_explicit_pole() ? chart_.pole() : vertices_[static_cast<std::size_t>(base_)].point;
  for (auto& vd : vertices_) vd.rho_N = chart_.ambient().distance(pole_, vd.point);

  for (int v = 0; v < vertex_count(); ++v)
    for (int w : neighbors8(v)) {
      std::array<int, 4> delta{};
      const auto a = grid_index(v);
      const auto b = grid_index(w);
      for (int i = 0; i < m; ++i) {
        int di = b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)];
        const int n = resolution_[static_cast<std::size_t>(i)];
        if (chart_.axes()[static_cast<std::size_t>(i)].periodic) {
          if (di > n / 2) di -= n;
          if (di < -n / 2) di += n;
        }
        delta[static_cast<std::size_t>(i)] = di;
      }
      eps_mesh_ = std::max(eps_mesh_, edge_length(v, w, delta));
    }

  if (options.compute_rho_M) {
    const auto d = intrinsic_distance(*this);
    for (std::size_t v = 0; v < count; ++v) vertices_[v].rho_M = d[v];
  } else {
    for (auto& vd : vertices_) vd.rho_M = std::numeric_limits<double>::quiet_NaN();
  }
}

int SampledSubmanifold::index_of(const std::array<int, 4>& idx) const {
  int v = 0;
  for (int i = m() - 1; i >= 0; --i) v = v * resolution_[static_cast<std::size_t>(i)] + idx[static_cast<std::size_t>(i)];
  return v;
}

std::array<int, 4> SampledSubmanifold::grid_index(int v) const {
  std::array<int, 4> idx{};
  for (int i = 0; i < m(); ++i) {
    const int n = resolution_[static_cast<std::size_t>(i)];
    idx[static_cast<std::size_t>(i)] = v % n;
    v /= n;
  }
  return idx;
}

int SampledSubmanifold::offset(int v, const std::array<int, 4>& delta) const {
  auto idx = grid_index(v);
  for (int i = 0; i < m(); ++i) {
    const int n = resolution_[static_cast<std::size_t>(i)];
    int k = idx[static_cast<std::size_t>(i)] + delta[static_cast<std::size_t>(i)];
    if (chart_.axes()[static_cast<std::size_t>(i)].periodic) {
      k = ((k % n) + n) % n;
    } else if (k < 0 || k >= n) {
      return -1;
    }
    idx[static_cast<std::size_t>(i)] = k;
  }
  return index_of(idx);
}

bool SampledSubmanifold::on_truncation_edge(int v) const {
  const auto idx = grid_index(v);
  for (int i = 0; i < m(); ++i) {
    if (chart_.axes()[static_cast<std::size_t>(i)].periodic) continue;
    const int k = idx[static_cast<std::size_t>(i)];
    if (k == 0 || k == resolution_[static_cast<std::size_t>(i)] - 1) return true;
  }
  return false;
}

double SampledSubmanifold::edge_length(int a, int b, const std::array<int, 4>& delta) const {
  const Mat g = 0.5 * (vertex(a).g + vertex(b).g);
  Vec d(m());
  for (int i = 0; i < m(); ++i) d[i] = delta[static_cast<std::size_t>(i)] * spacing_[static_cast<std::size_t>(i)];
  return std::sqrt(std::max(d.dot(g * d), 0.0));
}

std::vector<Edge> SampledSubmanifold::edges(int v) const {
  std::vector<Edge> out;
  out.reserve(stencil_.size());
  for (const auto& d : stencil_) {
    const int w = offset(v, d);
    if (w >= 0 && w != v) out.push_back({w, edge_length(v, w, d)});
  }
  return out;
}

std::vector<int> SampledSubmanifold::neighbors8(int v) const {
  std::vector<int> out;
  if (m() == 1) {
    for (int d : {-1, 1}) {
      const int w = offset(v, {d, 0, 0, 0});
      if (w >= 0 && w != v) out.push_back(w);
    }
    return out;
  }
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) {
      if (a == 0 && b == 0) continue;
      const int w = offset(v, {a, b, 0, 0});
      if (w >= 0 && w != v) out.push_back(w);
    }
  return out;
}

std::vector<double> SampledSubmanifold::rho_M() const {
  std::vector<double> out;
  out.reserve(vertices_.size());
  for (const auto& vd : vertices_) out.push_back(vd.rho_M);
  return out;
}

std::vector<double> SampledSubmanifold::rho_N() const {
  std::vector<double> out;
  out.reserve(vertices_.size());
  for (const auto& vd : vertices_) out.push_back(vd.rho_N);
  return out;
}

double SampledSubmanifold::tamed_ratio(int v) const {
  const auto& vd = vertex(v);
  if (!std::isfinite(vd.rho_M)) return std::numeric_limits<double>::infinity();
  return kernel::st_over_ct(chart_.ambient().curvature(), vd.rho_M) * vd.alpha_sup;
}

SampledSubmanifold sample_chart(const immersion::ImmersionChart& chart, const std::vector<int>& resolution,
                                SampleOptions options) {
  return SampledSubmanifold(chart, resolution, options);
}

std::vector<double> intrinsic_distance(const SampledSubmanifold& s) {
  const int n = s.vertex_count();
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(s.base_vertex())] = 0.0;
  pq.emplace(0.0, s.base_vertex());
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    for (const auto& e : s.edges(v)) {
      const double nd = d + e.length;
      if (nd < dist[static_cast<std::size_t>(e.to)]) {
        dist[static_cast<std::size_t>(e.to)] = nd;
        pq.emplace(nd, e.to);
      }
    }
  }
  return dist;
}

std::vector<std::vector<int>> exhaustion(const SampledSubmanifold& s, const std::vector<double>& radii) {
  if (radii.empty()) throw DomainError("exhaustion needs at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw DomainError("exhaustion radii must be strictly increasing");
  std::vector<std::vector<int>> sets;
  for (double r : radii) {
    std::vector<int> c;
    for (int v = 0; v < s.vertex_count(); ++v)
      if (s.vertex(v).rho_M <= r) c.push_back(v);
    sets.push_back(std::move(c));
  }
  return sets;
}

void write_vertex_csv(const SampledSubmanifold& s, std::ostream& out) {
  const int m = s.m();
  const int k = s.chart().ambient().coord_count();
  for (int i = 1; i <= m; ++i) out << 'u' << i << ',';
  for (int i = 1; i <= k; ++i) out << 'y' << i << ',';
  out << "rho_M,rho_N,alpha_sup,tamed_ratio\n";
  const auto old = out.precision(17);
  for (int v = 0; v < s.vertex_count(); ++v) {
    const auto& vd = s.vertex(v);
    for (int i = 0; i < m; ++i) out << vd.u[i] << ',';
    for (int i = 0; i < k; ++i) out << vd.point[i] << ',';
    out << vd.rho_M << ',' << vd.rho_N << ',' << vd.alpha_sup << ',' << s.tamed_ratio(v) << '\n';
  }
  out.precision(old);
}

}  // namespace tamed::sampling
