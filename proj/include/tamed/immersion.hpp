#pragma once

// Parametric immersions phi: U subset R^m -> N into a model space, their
// second-order jets and pointwise fundamental forms.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "tamed/comparison.hpp"
#include "tamed/expression.hpp"

namespace tamed::immersion {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Axis {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;
};

/// phi(u) with all first and second partial derivatives.
struct ChartJet {
  int m = 0;
  Vec value;                // ambient coordinates
  Mat first;                // coord_count x m, column i is d_i phi
  std::vector<Vec> second;  // d_i d_j phi stored at i*m + j

  const Vec& dd(int i, int j) const { return second[static_cast<std::size_t>(i * m + j)]; }
};

class ImmersionChart {
 public:
  /// `pole` is the ambient point the extrinsic distance is measured from;
  /// when absent it is phi(base).
  ImmersionChart(std::string name, std::vector<Axis> axes, const std::vector<std::string>& components,
                 kernel::AmbientModel ambient, Vec base, std::optional<Vec> pole = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  int m() const noexcept { return static_cast<int>(axes_.size()); }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  const std::vector<expr::Expression>& components() const noexcept { return components_; }
  const kernel::AmbientModel& ambient() const noexcept { return ambient_; }
  const Vec& base() const noexcept { return base_; }
  const Vec& pole() const noexcept { return pole_; }
  bool has_explicit_pole() const noexcept { return explicit_pole_; }

  bool contains(const Vec& u) const;
  /// Maps periodic coordinates into [lo, hi).
  Vec wrap(const Vec& u) const;

  Vec point(const Vec& u) const;
  ChartJet eval_jet2(const Vec& u) const;

 private:
  void check_sheet(const Vec& y, const Vec& u) const;

  std::string name_;
  std::vector<Axis> axes_;
  std::vector<expr::Expression> components_;
  kernel::AmbientModel ambient_;
  Vec base_;
  Vec pole_;
  bool explicit_pole_ = false;
};

struct FundamentalForms {
  int m = 0;
  Vec point;
  Mat tangent;             // columns d_i phi
  Mat g;                   // induced metric
  std::vector<Vec> alpha;  // alpha(d_i, d_j) at i*m + j, normal to the image
  Vec H_trace;             // sum of alpha over a g-orthonormal frame
  Vec H_mean;              // H_trace / m
  double alpha_sup = 0.0;  // sup of |alpha(X,X)| over g-unit X
  double alpha_hs = 0.0;

  const Vec& a(int i, int j) const { return alpha[static_cast<std::size_t>(i * m + j)]; }
};

FundamentalForms fundamental_forms(const ImmersionChart& chart, const Vec& u);
FundamentalForms fundamental_forms(const ImmersionChart& chart, const ChartJet& jet);

/// alpha(X, Y) for coordinate vectors X, Y.
Vec alpha_apply(const FundamentalForms& ff, const Vec& X, const Vec& Y);

struct CatalogEntry {
  std::string name;
  std::string summary;
};

const std::vector<CatalogEntry>& catalog();

/// Built-in chart by name. Recognized parameters depend on the entry; every
/// entry accepts "base" and "pole" arrays overriding the defaults.
ImmersionChart builtin(const std::string& name, const nlohmann::json& params);
ImmersionChart builtin(const std::string& name);

/// Inline chart: {"vars": [...], "domain": [[lo,hi],...], "periodic": [...],
/// "components": [...], "curvature": k, "base": [...], "pole": [...]}.
ImmersionChart chart_from_json(const nlohmann::json& spec);

}  // namespace tamed::immersion
