#pragma once

// Gradient flow of R = rho_N o phi normalized to unit speed in R:
// xi_t = nu / psi with nu = grad R / |grad R| and psi = |grad R| = cos beta.

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tamed/sampling.hpp"

namespace tamed::flow {

using immersion::Mat;
using immersion::Vec;

inline constexpr double kTolCrit = 1e-6;

struct NuPsi {
  Vec nu;        // chart coordinates, g-unit
  double psi;    // |grad R|_g
  Vec dR;        // dR/du_i = <grad rho_N, d_i phi>
  Vec velocity;  // nu / psi
};

/// Throws CriticalPointError when psi <= tol_crit.
NuPsi nu_and_psi(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole, double tol_crit = kTolCrit);

double extrinsic_R(const immersion::ImmersionChart& chart, const Vec& u, const Vec& pole);

struct LevelSet {
  double r0 = 0.0;
  std::vector<Vec> seeds;
  bool regular = true;  // no near-critical vertex in the level band
};

/// Seeds on {R = r0} by root finding along grid edges. Throws LevelError if the level set is empty.
LevelSet level_set_gamma(const sampling::SampledSubmanifold& s, double r0);

enum class Termination { DomainBoundary, MaxTime, CriticalPoint };
const char* termination_name(Termination t);

struct FlowNode {
  double t = 0.0;
  Vec u;
  double R = 0.0;
  double psi = 0.0;
  double sin_beta = 0.0;
  double bound_rhs = 0.0;
  double alpha_term = 0.0;  // <nu*, alpha(nu, nu)>, zero when sin beta vanishes
  Vec nu_star;              // unit normal part of grad rho_N; empty when sin beta vanishes
};

struct FlowTrajectory {
  Vec seed;
  double r0 = 0.0;
  double c = 0.0;
  double step = 0.0;
  std::vector<FlowNode> nodes;
  Termination termination = Termination::MaxTime;
};

/// Fixed-step RK4 from `seed` until time T, the chart boundary or a critical point.
FlowTrajectory integrate_flow(const immersion::ImmersionChart& chart, const Vec& pole, const Vec& seed, double r0,
                              double c, double T, double step);

struct TrajectoryCheck {
  double tol_flow = 0.0;
  double max_level_error = 0.0;  // |R - t - r0|
  double max_bound_excess = 0.0;  // sin beta - bound_rhs
  double max_bound_rhs = 0.0;
  double min_psi = 1.0;
  double max_dif4_defect = 0.0;  // [S sin beta]_t + S <nu*, alpha(nu,nu)>
  bool ok = true;
};

TrajectoryCheck check_trajectory(const immersion::ImmersionChart& chart, const FlowTrajectory& traj);

/// |x_h - x_{h/2}| / |x_{h/2} - x_{h/4}| for the position at time T; about 16 for a 4th-order scheme.
double richardson_ratio(const immersion::ImmersionChart& chart, const Vec& pole, const Vec& seed, double r0, double T,
                        double step);

struct CriticalPoint {
  int vertex;
  double psi;
  double rho_N;
  bool from_cell;  // detected by a sign change of dR inside a grid cell
};

std::vector<CriticalPoint> find_critical_points(const sampling::SampledSubmanifold& s, double tol_crit = kTolCrit);

struct EndCount {
  std::vector<double> radii;
  std::vector<int> counts;
  bool stable = false;
};

/// Components of {R > r} that reach the truncation boundary.
EndCount count_ends(const sampling::SampledSubmanifold& s, const std::vector<double>& radii);

/// Extrinsic radius outside of which the tamedness ratio is <= c and no critical point was found.
double flow_radius(const sampling::SampledSubmanifold& s, double c, const std::vector<CriticalPoint>& crit);

struct FlowReport {
  double c = 0.0;
  double r0 = 0.0;
  double step = 0.0;
  double T = 0.0;
  bool level_regular = true;
  std::vector<FlowTrajectory> trajectories;
  std::vector<TrajectoryCheck> checks;
  std::vector<CriticalPoint> critical;
  bool critical_inside = true;
  EndCount ends;
  double richardson = 0.0;

  bool ok() const;
};

/// Seeds on {R = r0}, integration to T (or exit), checks, critical points and end counts.
FlowReport run_flow(const sampling::SampledSubmanifold& s, double c, double r0, double T, double step,
                    const std::vector<double>& end_radii, int max_seeds = 64);

void write_trajectory_csv(const FlowTrajectory& traj, std::ostream& out);
nlohmann::json to_json(const FlowReport& report);

}  // namespace tamed::flow
