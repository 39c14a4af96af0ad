#pragma once

// Regular parameter grids over a chart, carrying the induced metric, the
// extrinsic distance rho_N and the graph approximation of rho_M.

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tamed/immersion.hpp"

namespace tamed::sampling {

using immersion::Mat;
using immersion::Vec;

struct VertexData {
  Vec u;
  Vec point;
  Mat g;
  double alpha_sup = 0.0;
  double alpha_hs = 0.0;
  double H_trace_norm = 0.0;
  double H_mean_norm = 0.0;
  double rho_N = 0.0;
  double rho_M = 0.0;
};

struct Edge {
  int to;
  double length;
};

struct SampleOptions {
  bool compute_rho_M = true;
  bool keep_forms = false;
};

class SampledSubmanifold {
 public:
  SampledSubmanifold(immersion::ImmersionChart chart, std::vector<int> resolution, SampleOptions options = {});

  const immersion::ImmersionChart& chart() const noexcept { return chart_; }
  int m() const noexcept { return chart_.m(); }
  const std::vector<int>& resolution() const noexcept { return resolution_; }
  int vertex_count() const noexcept { return static_cast<int>(vertices_.size()); }
  const VertexData& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  const std::vector<VertexData>& vertices() const noexcept { return vertices_; }
  /// Only populated with SampleOptions::keep_forms.
  const std::vector<immersion::FundamentalForms>& forms() const noexcept { return forms_; }
  int base_vertex() const noexcept { return base_; }
  /// Explicit chart pole, otherwise the image of the base vertex.
  const Vec& pole() const noexcept { return pole_; }
  /// Largest edge of the axis-and-diagonal stencil.
  double eps_mesh() const noexcept { return eps_mesh_; }
  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }

  int index_of(const std::array<int, 4>& idx) const;
  std::array<int, 4> grid_index(int v) const;
  /// Neighbour at the given index offset, honouring periodic axes; -1 outside the grid.
  int offset(int v, const std::array<int, 4>& delta) const;
  /// True when a non-periodic coordinate sits on the first or last grid line.
  bool on_truncation_edge(int v) const;

  /// Dijkstra stencil with induced-metric lengths.
  std::vector<Edge> edges(int v) const;
  /// Axis and diagonal neighbours (the 8-neighbourhood for m = 2).
  std::vector<int> neighbors8(int v) const;
  double edge_length(int a, int b, const std::array<int, 4>& delta) const;

  std::vector<double> rho_M() const;
  std::vector<double> rho_N() const;
  double tamed_ratio(int v) const;

 private:
  immersion::ImmersionChart chart_;
  std::vector<int> resolution_;
  std::vector<double> spacing_;
  std::vector<VertexData> vertices_;
  std::vector<immersion::FundamentalForms> forms_;
  std::vector<std::array<int, 4>> stencil_;
  Vec pole_;
  int base_ = 0;
  double eps_mesh_ = 0.0;
};

/// Samples the chart on a grid with resolution[i] points along axis i.
SampledSubmanifold sample_chart(const immersion::ImmersionChart& chart, const std::vector<int>& resolution,
                                SampleOptions options = {});

/// Graph distance from the base vertex; unreachable vertices are +inf.
std::vector<double> intrinsic_distance(const SampledSubmanifold& s);

/// C_i = {rho_M <= r_i}, vertex ids in increasing order.
std::vector<std::vector<int>> exhaustion(const SampledSubmanifold& s, const std::vector<double>& radii);

/// u1..um, y1..yk, rho_M, rho_N, alpha_sup, tamed_ratio.
void write_vertex_csv(const SampledSubmanifold& s, std::ostream& out);

}  // namespace tamed::sampling
