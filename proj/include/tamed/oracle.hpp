#pragma once

// Independent discrete Dirichlet eigenvalue oracle: P1 elements with lumped
// mass on triangulated grids, inverse iteration, and Barta-type bounds.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <nlohmann/json_fwd.hpp>

#include "tamed/properness.hpp"
#include "tamed/sampling.hpp"

namespace tamed::oracle {

using immersion::Mat;
using immersion::Vec;
using properness::laplacian_composed;

/// A simplex given by its vertices, its edge vectors in parameter space and a
/// constant metric. For dim = 1 only the first two vertices are used.
struct Element {
  std::array<int, 3> v{-1, -1, -1};
  Mat E;  // dim x dim, column k is p_{k+1} - p_0
  Mat G;  // dim x dim
};

struct Mesh {
  int dim = 2;
  std::vector<Vec> points;       // for evaluating test functions; physical when the metric is Euclidean
  std::vector<Element> elements;
  std::vector<bool> dirichlet;   // vertices with value fixed to zero
};

/// Hexagonal ring mesh of the disc: ring k of radius k/N carries 6k equally spaced nodes, N = resolution / 2.
Mesh disc_mesh(int resolution, double radius = 1.0);
/// [0, side]^2 with n intervals per axis, every cell split along the same diagonal.
Mesh square_mesh(int n, double side = 1.0);
Mesh interval_mesh(int n, double length = 1.0);

/// Grid cells touching `region`, split along the diagonal that is shorter in the metric.
/// Region vertices on the truncation edge and all vertices outside the region are Dirichlet.
Mesh region_mesh(const sampling::SampledSubmanifold& s, const std::vector<int>& region);

/// Connected component (8-neighbourhood) of {rho_N < R} containing the base vertex.
std::vector<int> component_below(const sampling::SampledSubmanifold& s, double R);

struct DiscreteDirichletProblem {
  Mesh mesh;
  std::vector<int> dof_of;  // mesh vertex -> unknown, -1 when Dirichlet
  std::vector<int> vertex_of;
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd M;  // lumped mass

  int size() const { return static_cast<int>(vertex_of.size()); }
  /// f evaluated at the free vertices.
  Eigen::VectorXd sample(const std::function<double(const Vec&)>& f) const;
};

DiscreteDirichletProblem assemble(Mesh mesh);

struct OracleOptions {
  double tol = 1e-10;  // residual |Kx - lambda Mx| / |Mx|
  int max_iterations = 500;
};

struct EigenResult {
  double lambda = 0.0;
  Eigen::VectorXd x;  // M-normalized, positive sum
  double residual = 0.0;
  int iterations = 0;
  bool constant_sign = true;
};

/// Shifted inverse iteration on the pencil (K, M). Throws NumericalError on a singular factorization.
EigenResult lambda1_dirichlet(const DiscreteDirichletProblem& p, const OracleOptions& opts = {});

double rayleigh_quotient(const DiscreteDirichletProblem& p, const Eigen::VectorXd& f);

/// -Delta_h f = M^{-1} K f on the free vertices.
Eigen::VectorXd discrete_laplacian(const DiscreteDirichletProblem& p, const Eigen::VectorXd& f);

struct BartaResult {
  double inf_ratio = 0.0;
  double sup_ratio = 0.0;
  int argmin = -1;  // mesh vertex
  int argmax = -1;
};

/// inf and sup of -Delta_h f / f over free vertices. Throws DomainError unless f > 0 there.
BartaResult barta_sandwich(const DiscreteDirichletProblem& p, const Eigen::VectorXd& f);

/// Finite-volume Laplace-Beltrami (1/sqrt g) d_i (sqrt g g^{ij} d_j f) on the sampling grid.
/// NaN where the stencil leaves the grid.
std::vector<double> grid_laplacian(const sampling::SampledSubmanifold& s, const std::vector<double>& f);

struct LaplacianConsistency {
  int checked = 0;
  double max_trace_gap = 0.0;          // |composed - g-trace of the Hessian|
  double max_discrete_rel_error = 0.0;  // |grid - composed| / max(|composed|, 1)
};

/// Compares the three Laplacians of f = h o rho_N on interior vertices away from the pole.
LaplacianConsistency laplacian_consistency(const sampling::SampledSubmanifold& s);

struct CorollaryReport {
  double R = 0.0;
  double c = 0.0;
  double r0 = 0.0;
  double mu = 0.0;
  int m = 2;
  int l = 2;
  int region_vertices = 0;
  bool region_truncated = false;  // the component reaches the chart boundary
  double lambda_oracle = 0.0;
  double lambda_ball_m = 0.0;  // lambda_1 of the radius-R ball in N^m(mu)
  double lambda_ball_l = 0.0;
  double v_r0 = 0.0;
  double C = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  // max over the region of |H| - alpha_sup, for H = H_trace / m and for H_trace itself.
  double H_mean_excess = 0.0;
  double H_trace_excess = 0.0;

  bool holds() const { return slack > 0.0; }
  bool mean_curvature_bound() const { return H_mean_excess <= 1e-10; }
};

CorollaryReport corollary_check(const sampling::SampledSubmanifold& s, double c, double r0, double R,
                                const OracleOptions& opts = {});

/// Writes <prefix>_K.mtx and <prefix>_M.mtx.
void write_matrix_market(const DiscreteDirichletProblem& p, const std::string& prefix);

nlohmann::json to_json(const EigenResult& r);
nlohmann::json to_json(const CorollaryReport& r);

}  // namespace tamed::oracle
