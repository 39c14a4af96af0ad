#include "tamed/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/SparseExtra>

#include "tamed/errors.hpp"
#include "tamed/spectral.hpp"

namespace tamed::oracle {

namespace {

constexpr double kDiscBlendPower = 2.0;

Element make_triangle(int a, int b, int c, const Vec& pa, const Vec& pb, const Vec& pc, const Mat& G) {
  Element e;
  e.v = {a, b, c};
  e.E.resize(2, 2);
  e.E.col(0) = pb - pa;
  e.E.col(1) = pc - pa;
  e.G = G;
  return e;
}

Vec xy(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}

}  // namespace

Mesh disc_mesh(int resolution, double radius) {
  const int N = std::max(resolution / 2, 1);
  if (!(radius > 0.0)) throw DomainError("disc radius must be positive");
  Mesh mesh;
  mesh.dim = 2;
  auto ring_start = [](int k) { return k == 0 ? 0 : 1 + 3 * k * (k - 1); };
  auto id = [&](int k, int j) { return k == 0 ? 0 : ring_start(k) + ((j % (6 * k)) + 6 * k) % (6 * k); };
  mesh.points.push_back(xy(0.0, 0.0));
  mesh.dirichlet.push_back(false);
  // Ring k blends the equilateral lattice hexagon (exact near the centre) into the circle of radius k/N.
  const double third = std::numbers::pi / 3.0;
  for (int k = 1; k <= N; ++k) {
    const double r = radius * k / N;
    const double w = std::pow(static_cast<double>(k) / N, kDiscBlendPower);
    for (int j = 0; j < 6 * k; ++j) {
      const int sector = j / k;
      const double t = static_cast<double>(j % k) / k;
      const Vec corner_a = xy(std::cos(sector * third), std::sin(sector * third));
      const Vec corner_b = xy(std::cos((sector + 1) * third), std::sin((sector + 1) * third));
      const Vec hex = r * ((1.0 - t) * corner_a + t * corner_b);
      const double th = 2.0 * std::numbers::pi * j / (6.0 * k);
      mesh.points.push_back((1.0 - w) * hex + w * xy(r * std::cos(th), r * std::sin(th)));
      mesh.dirichlet.push_back(k == N);
    }
  }
  const Mat I = Mat::Identity(2, 2);
  auto tri = [&](int a, int b, int c) {
    mesh.elements.push_back(make_triangle(a, b, c, mesh.points[static_cast<std::size_t>(a)],
                                          mesh.points[static_cast<std::size_t>(b)],
                                          mesh.points[static_cast<std::size_t>(c)], I));
  };
  for (int k = 1; k <= N; ++k) {
    for (int sector = 0; sector < 6; ++sector) {
      const int outer0 = sector * k;
      const int inner0 = sector * (k - 1);
      for (int t = 0; t < k; ++t) tri(id(k, outer0 + t), id(k, outer0 + t + 1), id(k - 1, inner0 + t));
      for (int t = 0; t + 1 < k; ++t) tri(id(k - 1, inner0 + t), id(k, outer0 + t + 1), id(k - 1, inner0 + t + 1));
    }
  }
  return mesh;
}

Mesh square_mesh(int n, double side) {
  if (n < 2) throw DomainError("square mesh needs at least 2 intervals");
  Mesh mesh;
  mesh.dim = 2;
  const double h = side / n;
  auto id = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      mesh.points.push_back(xy(i * h, j * h));
      mesh.dirichlet.push_back(i == 0 || j == 0 || i == n || j == n);
    }
  const Mat I = Mat::Identity(2, 2);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      const auto& P = mesh.points;
      mesh.elements.push_back(make_triangle(a, b, c, P[static_cast<std::size_t>(a)], P[static_cast<std::size_t>(b)],
                                            P[static_cast<std::size_t>(c)], I));
      mesh.elements.push_back(make_triangle(a, c, d, P[static_cast<std::size_t>(a)], P[static_cast<std::size_t>(c)],
                                            P[static_cast<std::size_t>(d)], I));
    }
  return mesh;
}

Mesh interval_mesh(int n, double length) {
  if (n < 2) throw DomainError("interval mesh needs at least 2 intervals");
  Mesh mesh;
  mesh.dim = 1;
  const double h = length / n;
  for (int i = 0; i <= n; ++i) {
    mesh.points.push_back(Vec::Constant(1, i * h));
    mesh.dirichlet.push_back(i == 0 || i == n);
  }
  for (int i = 0; i < n; ++i) {
    Element e;
    e.v = {i, i + 1, -1};
    e.E = Mat::Constant(1, 1, h);
    e.G = Mat::Identity(1, 1);
    mesh.elements.push_back(std::move(e));
  }
  return mesh;
}

std::vector<int> component_below(const sampling::SampledSubmanifold& s, double R) {
  const int base = s.base_vertex();
  if (!(s.vertex(base).rho_N < R)) throw DomainError("the base vertex is not inside {rho_N < R}");
  std::vector<char> seen(static_cast<std::size_t>(s.vertex_count()), 0);
  std::vector<int> out;
  std::queue<int> q;
  q.push(base);
  seen[static_cast<std::size_t>(base)] = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    out.push_back(v);
    for (int w : s.neighbors8(v)) {
      if (seen[static_cast<std::size_t>(w)] || !(s.vertex(w).rho_N < R)) continue;
      seen[static_cast<std::size_t>(w)] = 1;
      q.push(w);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Mesh region_mesh(const sampling::SampledSubmanifold& s, const std::vector<int>& region) {
  const int m = s.m();
  if (m > 2) throw DomainError("region meshes support m <= 2");
  Mesh mesh;
  mesh.dim = m;
  const auto n = static_cast<std::size_t>(s.vertex_count());
  std::vector<char> inside(n, 0);
  for (int v : region) inside[static_cast<std::size_t>(v)] = 1;
  mesh.dirichlet.assign(n, true);
  for (int v = 0; v < s.vertex_count(); ++v) {
    mesh.points.push_back(s.vertex(v).u);
    if (inside[static_cast<std::size_t>(v)] && !s.on_truncation_edge(v)) mesh.dirichlet[static_cast<std::size_t>(v)] = false;
  }
  auto free_vertex = [&](int v) { return !mesh.dirichlet[static_cast<std::size_t>(v)]; };
  auto metric = [&](std::initializer_list<int> vs) {
    Mat G = Mat::Zero(m, m);
    for (int v : vs) G += s.vertex(v).g;
    return Mat(G / static_cast<double>(vs.size()));
  };

  if (m == 1) {
    const double h = s.spacing(0);
    for (int v = 0; v < s.vertex_count(); ++v) {
      const int w = s.offset(v, {1, 0, 0, 0});
      if (w < 0 || !(free_vertex(v) || free_vertex(w))) continue;
      Element e;
      e.v = {v, w, -1};
      e.E = Mat::Constant(1, 1, h);
      e.G = metric({v, w});
      mesh.elements.push_back(std::move(e));
    }
    return mesh;
  }

  const double h0 = s.spacing(0);
  const double h1 = s.spacing(1);
  for (int v = 0; v < s.vertex_count(); ++v) {
    const int b = s.offset(v, {1, 0, 0, 0});
    const int d = s.offset(v, {0, 1, 0, 0});
    const int c = s.offset(v, {1, 1, 0, 0});
    if (b < 0 || c < 0 || d < 0) continue;
    if (!(free_vertex(v) || free_vertex(b) || free_vertex(c) || free_vertex(d))) continue;
    const Mat Gq = metric({v, b, c, d});
    const Vec main_diag = xy(h0, h1);
    const Vec anti_diag = xy(-h0, h1);
    const Vec zero = xy(0.0, 0.0);
    if (main_diag.dot(Gq * main_diag) <= anti_diag.dot(Gq * anti_diag)) {
      mesh.elements.push_back(make_triangle(v, b, c, zero, xy(h0, 0.0), xy(h0, h1), metric({v, b, c})));
      mesh.elements.push_back(make_triangle(v, c, d, zero, xy(h0, h1), xy(0.0, h1), metric({v, c, d})));
    } else {
      mesh.elements.push_back(make_triangle(v, b, d, zero, xy(h0, 0.0), xy(0.0, h1), metric({v, b, d})));
      mesh.elements.push_back(make_triangle(b, c, d, zero, xy(0.0, h1), xy(-h0, h1), metric({b, c, d})));
    }
  }
  return mesh;
}

Eigen::VectorXd DiscreteDirichletProblem::sample(const std::function<double(const Vec&)>& f) const {
  Eigen::VectorXd out(size());
  for (int k = 0; k < size(); ++k) out[k] = f(mesh.points[static_cast<std::size_t>(vertex_of[static_cast<std::size_t>(k)])]);
  return out;
}

DiscreteDirichletProblem assemble(Mesh mesh) {
  DiscreteDirichletProblem p;
  const auto n = mesh.points.size();
  if (mesh.dirichlet.size() != n) throw DomainError("mesh boundary flags do not match the vertex count");
  p.dof_of.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (mesh.dirichlet[v]) continue;
    p.dof_of[v] = static_cast<int>(p.vertex_of.size());
    p.vertex_of.push_back(static_cast<int>(v));
  }
  const int dofs = static_cast<int>(p.vertex_of.size());
  if (dofs == 0) throw DomainError("the Dirichlet problem has no interior vertices");
  p.M = Eigen::VectorXd::Zero(dofs);
  std::vector<Eigen::Triplet<double>> trip;

  for (const auto& e : mesh.elements) {
    const int nv = mesh.dim + 1;
    Eigen::MatrixXd grads(mesh.dim, nv);  // barycentric gradients in parameter space
    const double detE = e.E.determinant();
    const double detG = e.G.determinant();
    if (!(std::abs(detE) > 0.0) || !(detG > 0.0)) throw DegeneracyError("degenerate mesh element");
    const Eigen::MatrixXd Einv = e.E.inverse();
    for (int k = 1; k < nv; ++k) grads.col(k) = Einv.row(k - 1).transpose();
    grads.col(0) = -grads.rightCols(nv - 1).rowwise().sum();
    const double measure = std::abs(detE) * std::sqrt(detG) / (mesh.dim == 1 ? 1.0 : 2.0);
    const Eigen::MatrixXd local = measure * grads.transpose() * e.G.inverse() * grads;
    for (int a = 0; a < nv; ++a) {
      const int da = p.dof_of[static_cast<std::size_t>(e.v[static_cast<std::size_t>(a)])];
      if (da < 0) continue;
      p.M[da] += measure / nv;
      for (int b = 0; b < nv; ++b) {
        const int db = p.dof_of[static_cast<std::size_t>(e.v[static_cast<std::size_t>(b)])];
        if (db >= 0) trip.emplace_back(da, db, local(a, b));
      }
    }
  }
  p.K.resize(dofs, dofs);
  p.K.setFromTriplets(trip.begin(), trip.end());
  p.mesh = std::move(mesh);
  return p;
}

double rayleigh_quotient(const DiscreteDirichletProblem& p, const Eigen::VectorXd& f) {
  const double den = f.dot(p.M.asDiagonal() * f);
  if (!(den > 0.0)) throw DomainError("Rayleigh quotient of the zero function");
  return f.dot(p.K * f) / den;
}

EigenResult lambda1_dirichlet(const DiscreteDirichletProblem& p, const OracleOptions& opts) {
  using SpMat = Eigen::SparseMatrix<double>;
  Eigen::SimplicialLDLT<SpMat> solver;
  auto factor = [&](double shift) {
    SpMat A = p.K;
    if (shift != 0.0) {
      SpMat D(p.size(), p.size());
      std::vector<Eigen::Triplet<double>> diag;
      for (int k = 0; k < p.size(); ++k) diag.emplace_back(k, k, shift * p.M[k]);
      D.setFromTriplets(diag.begin(), diag.end());
      A -= D;
    }
    solver.compute(A);
    if (solver.info() != Eigen::Success) throw NumericalError("stiffness factorization failed (disconnected interior?)");
  };
  auto m_normalize = [&](Eigen::VectorXd& x) { x /= std::sqrt(x.dot(p.M.asDiagonal() * x)); };

  factor(0.0);
  EigenResult r;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(p.size());
  m_normalize(x);
  double lambda = x.dot(p.K * x);
  bool shifted = false;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Eigen::VectorXd y = solver.solve(p.M.asDiagonal() * x);
    if (solver.info() != Eigen::Success || !y.allFinite()) throw NumericalError("inverse iteration solve failed");
    m_normalize(y);
    x = y;
    const double next = x.dot(p.K * x);
    const Eigen::VectorXd Mx = p.M.asDiagonal() * x;
    r.residual = (p.K * x - next * Mx).norm() / Mx.norm();
    r.iterations = it;
    const double change = std::abs(next - lambda);
    lambda = next;
    if (r.residual <= opts.tol) break;
    if (r.residual < 0.5 * best) {
      best = r.residual;
      stall = 0;
    } else if (++stall > 20) {
      break;
    }
    if (!shifted && it >= 5 && change <= 1e-3 * lambda) {
      factor(0.9 * lambda);
      shifted = true;
    }
  }
  if (!(r.residual <= std::max(opts.tol, 1e-8)))
    throw NumericalError("inverse iteration did not converge: residual " + std::to_string(r.residual));
  if (x.sum() < 0.0) x = -x;
  r.lambda = lambda;
  r.constant_sign = (x.array() > 0.0).all();
  r.x = std::move(x);
  return r;
}

Eigen::VectorXd discrete_laplacian(const DiscreteDirichletProblem& p, const Eigen::VectorXd& f) {
  return (p.K * f).cwiseQuotient(p.M);
}

BartaResult barta_sandwich(const DiscreteDirichletProblem& p, const Eigen::VectorXd& f) {
  if (f.size() != p.size()) throw DomainError("test function size does not match the interior");
  if (!(f.array() > 0.0).all()) throw DomainError("Barta test function must be positive on interior vertices");
  const Eigen::VectorXd ratio = discrete_laplacian(p, f).cwiseQuotient(f);
  BartaResult b;
  Eigen::Index lo = 0;
  Eigen::Index hi = 0;
  b.inf_ratio = ratio.minCoeff(&lo);
  b.sup_ratio = ratio.maxCoeff(&hi);
  b.argmin = p.vertex_of[static_cast<std::size_t>(lo)];
  b.argmax = p.vertex_of[static_cast<std::size_t>(hi)];
  return b;
}

std::vector<double> grid_laplacian(const sampling::SampledSubmanifold& s, const std::vector<double>& f) {
  const int m = s.m();
  const int n = s.vertex_count();
  if (static_cast<int>(f.size()) != n) throw DomainError("function size does not match the grid");
  std::vector<Mat> A(static_cast<std::size_t>(n));
  std::vector<double> sq(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const Mat& g = s.vertex(v).g;
    sq[static_cast<std::size_t>(v)] = std::sqrt(g.determinant());
    A[static_cast<std::size_t>(v)] = sq[static_cast<std::size_t>(v)] * g.inverse();
  }
  auto unit = [](int i, int sign) {
    std::array<int, 4> d{0, 0, 0, 0};
    d[static_cast<std::size_t>(i)] = sign;
    return d;
  };
  auto F = [&](int v) { return f[static_cast<std::size_t>(v)]; };
  std::vector<double> out(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  for (int v = 0; v < n; ++v) {
    double acc = 0.0;
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) {
      const double hi = s.spacing(i);
      const int p = s.offset(v, unit(i, 1));
      const int q = s.offset(v, unit(i, -1));
      if (p < 0 || q < 0) {
        ok = false;
        break;
      }
      const auto& Av = A[static_cast<std::size_t>(v)];
      const auto& Ap = A[static_cast<std::size_t>(p)];
      const auto& Aq = A[static_cast<std::size_t>(q)];
      acc += (0.5 * (Av(i, i) + Ap(i, i)) * (F(p) - F(v)) - 0.5 * (Av(i, i) + Aq(i, i)) * (F(v) - F(q))) / (hi * hi);
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        const double hj = s.spacing(j);
        std::array<int, 4> pp = unit(i, 1), pm = unit(i, 1), mp = unit(i, -1), mm = unit(i, -1);
        pp[static_cast<std::size_t>(j)] = 1;
        pm[static_cast<std::size_t>(j)] = -1;
        mp[static_cast<std::size_t>(j)] = 1;
        mm[static_cast<std::size_t>(j)] = -1;
        const int a = s.offset(v, pp), b = s.offset(v, pm), c = s.offset(v, mp), d = s.offset(v, mm);
        if (a < 0 || b < 0 || c < 0 || d < 0) {
          ok = false;
          break;
        }
        acc += (Ap(i, j) * (F(a) - F(b)) - Aq(i, j) * (F(c) - F(d))) / (4.0 * hi * hj);
      }
    }
    if (ok) out[static_cast<std::size_t>(v)] = acc / sq[static_cast<std::size_t>(v)];
  }
  return out;
}

LaplacianConsistency laplacian_consistency(const sampling::SampledSubmanifold& s) {
  const auto& chart = s.chart();
  const properness::Profile h(chart.ambient().curvature());
  const Vec& pole = s.pole();
  std::vector<double> f(static_cast<std::size_t>(s.vertex_count()));
  for (int v = 0; v < s.vertex_count(); ++v) f[static_cast<std::size_t>(v)] = h.h(s.vertex(v).rho_N);
  const auto discrete = grid_laplacian(s, f);
  LaplacianConsistency out;
  for (int v = 0; v < s.vertex_count(); ++v) {
    const double d = discrete[static_cast<std::size_t>(v)];
    if (std::isnan(d) || s.vertex(v).rho_N < 1e-6) continue;
    const Vec& u = s.vertex(v).u;
    const double composed = laplacian_composed(chart, u, pole, h);
    const double trace = properness::laplacian_trace(chart, u, pole, h);
    const double scale = std::max(std::abs(composed), 1.0);
    out.max_trace_gap = std::max(out.max_trace_gap, std::abs(composed - trace) / scale);
    out.max_discrete_rel_error = std::max(out.max_discrete_rel_error, std::abs(d - composed) / scale);
    ++out.checked;
  }
  return out;
}

CorollaryReport corollary_check(const sampling::SampledSubmanifold& s, double c, double r0, double R,
                                const OracleOptions& opts) {
  if (!(R > r0)) throw DomainError("corollary check needs R > r0");
  CorollaryReport rep;
  rep.R = R;
  rep.c = c;
  rep.r0 = r0;
  rep.m = s.m();
  rep.mu = s.chart().ambient().curvature();
  rep.l = spectral::choose_l(rep.m, c);

  const auto region = component_below(s, R);
  rep.region_vertices = static_cast<int>(region.size());
  rep.region_truncated = std::any_of(region.begin(), region.end(), [&](int v) { return s.on_truncation_edge(v); });
  const auto problem = assemble(region_mesh(s, region));
  rep.lambda_oracle = lambda1_dirichlet(problem, opts).lambda;

  const auto ball = spectral::radial_eigenvalue(rep.l, rep.mu, R);
  rep.lambda_ball_l = ball.lambda1;
  rep.v_r0 = ball.v_at(r0);
  rep.C = spectral::constant_C(rep.m, c, rep.mu, r0, rep.v_r0);
  rep.bound = rep.C * rep.lambda_ball_l;
  rep.slack = rep.bound - rep.lambda_oracle;
  if (rep.m >= 2) rep.lambda_ball_m = spectral::radial_eigenvalue(rep.m, rep.mu, R).lambda1;
  rep.H_mean_excess = rep.H_trace_excess = -std::numeric_limits<double>::infinity();
  for (int v : region) {
    const auto& vd = s.vertex(v);
    rep.H_mean_excess = std::max(rep.H_mean_excess, vd.H_mean_norm - vd.alpha_sup);
    rep.H_trace_excess = std::max(rep.H_trace_excess, vd.H_trace_norm - vd.alpha_sup);
  }
  return rep;
}

void write_matrix_market(const DiscreteDirichletProblem& p, const std::string& prefix) {
  Eigen::SparseMatrix<double> M(p.size(), p.size());
  std::vector<Eigen::Triplet<double>> diag;
  for (int k = 0; k < p.size(); ++k) diag.emplace_back(k, k, p.M[k]);
  M.setFromTriplets(diag.begin(), diag.end());
  if (!Eigen::saveMarket(p.K, prefix + "_K.mtx") || !Eigen::saveMarket(M, prefix + "_M.mtx"))
    throw Error("could not write matrix market files with prefix " + prefix);
}

nlohmann::json to_json(const EigenResult& r) {
  return {{"lambda1", r.lambda},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"constant_sign", r.constant_sign},
          {"unknowns", r.x.size()}};
}

nlohmann::json to_json(const CorollaryReport& r) {
  return {{"R", r.R},
          {"c", r.c},
          {"r0", r.r0},
          {"mu", r.mu},
          {"m", r.m},
          {"l", r.l},
          {"region_vertices", r.region_vertices},
          {"region_truncated", r.region_truncated},
          {"lambda_oracle", r.lambda_oracle},
          {"lambda_ball_m", r.lambda_ball_m},
          {"lambda_ball_l", r.lambda_ball_l},
          {"v_r0", r.v_r0},
          {"C", r.C},
          {"bound", r.bound},
          {"slack", r.slack},
          {"holds", r.holds()},
          {"H_mean_excess", r.H_mean_excess},
          {"H_trace_excess", r.H_trace_excess},
          {"mean_curvature_bound", r.mean_curvature_bound()}};
}

}  // namespace tamed::oracle
