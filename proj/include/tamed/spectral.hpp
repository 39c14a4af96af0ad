#pragma once

// First Dirichlet eigenvalue of geodesic balls in the space form N^l(mu) via
// the radial equation v'' + (l-1)(C_mu/S_mu) v' + lambda v = 0, v(0) = 1, v'(0) = 0.

#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tamed::spectral {

struct RadialEigenSolution {
  int l = 2;
  double mu = 0.0;
  double R = 1.0;
  double lambda1 = 0.0;
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> dv;

  /// v at an arbitrary t in [0, R], by integrating the radial equation at lambda1.
  double v_at(double t) const;
};

struct RadialOptions {
  double tol = 1e-9;  // bound on |v(R)|
  int grid_points = 2001;
  int max_iterations = 200;
};

RadialEigenSolution radial_eigenvalue(int l, double mu, double R, const RadialOptions& opts = {});

/// max over the grid of -v'(t)/t - lambda1, using the limit lambda1/l at t = 0.
double lemma2_check(const RadialEigenSolution& sol);

/// max over interior grid nodes of |v'' + (l-1)(C/S) v' + lambda v|, v'' by finite differences.
double ode_residual(const RadialEigenSolution& sol);

/// Least l with m - l + l(1+c)^2/4 + c <= 0.
int choose_l(int m, double c);

/// 1 + r0 (C_mu/S_mu)(r0) (m + c) / v(r0).
double constant_C(int m, double c, double mu, double r0, double v_at_r0);

struct ToneBound {
  int m = 2;
  double c = 0.0;
  double mu = 0.0;
  double r0 = 0.0;
  int l = 2;
  double v_r0 = 1.0;
  double C = 1.0;
  std::vector<double> radii;
  std::vector<double> lambdas;
  double lambda_star = 0.0;  // large-R extrapolation
  double mckean = 0.0;       // (l-1)^2 (-mu) / 4
  double printed_form = 0.0;   // (l-1)^2 mu^2 / 4
  bool forms_differ = false;
  double bound = 0.0;
};

/// lambda* extrapolated from R in {10, 20, 40}/sqrt(-mu) with lambda* + A/R^2 + B/R^3.
double extrapolate_lambda_star(int l, double mu, std::vector<double>* radii = nullptr,
                               std::vector<double>* lambdas = nullptr);

/// `l` may raise the dimension above choose_l(m, c); a smaller value throws LevelError.
ToneBound tone_upper_bound(int m, double c, double mu, double r0, std::optional<int> l = std::nullopt);

void write_solution_csv(const RadialEigenSolution& sol, std::ostream& out);
nlohmann::json to_json(const RadialEigenSolution& sol);
nlohmann::json to_json(const ToneBound& bound);

}  // namespace tamed::spectral
