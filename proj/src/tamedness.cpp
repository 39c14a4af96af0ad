#include "tamed/tamedness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "tamed/errors.hpp"

namespace tamed::tamedness {

namespace {

constexpr double kZero = 1e-12;
// Ratios below this are at the round-off level of the second fundamental form.
constexpr double kNegligible = 1e-5;
constexpr double kStableChange = 0.05;
constexpr double kAgreement = 0.10;
// Estimates closer than this are indistinguishable for choosing a level c.
constexpr double kAgreementFloor = 1e-2;

// Normalized box level of a vertex: the smallest t for which it lies in the
// box x0 + t (domain - x0), over non-periodic axes. Negative when there are none.
double box_level(const sampling::SampledSubmanifold& s, int v) {
  const auto& chart = s.chart();
  const auto& u = s.vertex(v).u;
  const auto& x0 = s.vertex(s.base_vertex()).u;
  double t = -1.0;
  for (int i = 0; i < s.m(); ++i) {
    const auto& ax = chart.axes()[static_cast<std::size_t>(i)];
    if (ax.periodic) continue;
    const double d = u[i] - x0[i];
    const double span = d >= 0.0 ? ax.hi - x0[i] : x0[i] - ax.lo;
    t = std::max(t, span > 0.0 ? std::abs(d) / span : 0.0);
  }
  return t;
}

std::vector<double> box_sequence(const sampling::SampledSubmanifold& s, const std::vector<double>& radii) {
  std::vector<double> levels(static_cast<std::size_t>(s.vertex_count()));
  for (int v = 0; v < s.vertex_count(); ++v) levels[static_cast<std::size_t>(v)] = box_level(s, v);
  std::vector<double> out;
  for (double r : radii) {
    // Smallest box containing the ball C_i.
    double cut = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < s.vertex_count(); ++v)
      if (s.vertex(v).rho_M <= r) cut = std::max(cut, levels[static_cast<std::size_t>(v)]);
    double sup = 0.0;
    for (int v = 0; v < s.vertex_count(); ++v)
      if (levels[static_cast<std::size_t>(v)] > cut) sup = std::max(sup, s.tamed_ratio(v));
    out.push_back(sup);
  }
  return out;
}

}  // namespace

TamednessReport a_sequence(const sampling::SampledSubmanifold& s, const std::vector<double>& radii) {
  if (radii.empty()) throw DomainError("a_sequence needs at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw DomainError("radii must be strictly increasing");
  TamednessReport rep;
  rep.radii = radii;
  for (double r : radii) {
    double sup = -1.0;
    int arg = -1;
    for (int v = 0; v < s.vertex_count(); ++v) {
      const double rho = s.vertex(v).rho_M;
      if (!(rho > r) || !std::isfinite(rho)) continue;
      const double q = s.tamed_ratio(v);
      if (q > sup) {
        sup = q;
        arg = v;
      }
    }
    if (arg < 0) throw DomainError("no sampled vertex lies outside radius " + std::to_string(r));
    rep.a_i.push_back(sup);
    rep.argmax.push_back(arg);
  }
  return rep;
}

double estimate_aM(TamednessReport& rep, const sampling::SampledSubmanifold& s) {
  const std::size_t n = rep.a_i.size();
  if (n < 3) throw ConfigError("estimating a(M) needs at least three radii");
  const double last = rep.a_i[n - 1];
  const double prev = rep.a_i[n - 2];
  const bool decreasing = prev - last > kZero && last < prev * (1.0 - 1e-9);
  const bool stable = std::abs(last - prev) <= kStableChange * std::max(std::abs(prev), kNegligible);
  const bool at_edge = s.on_truncation_edge(rep.argmax[n - 1]) && last > kNegligible;

  rep.a_estimate = last;
  rep.divergent = !decreasing && (!stable || last >= 1.0 || at_edge);
  if (rep.divergent) {
    if (last >= 1.0)
      rep.diagnosis = "a_i does not decrease and stays >= 1";
    else if (at_edge)
      rep.diagnosis = "a_i does not decrease and is attained on the truncation boundary";
    else
      rep.diagnosis = "a_i grows across the last radii";
  } else if (last >= 1.0) {
    rep.diagnosis = "a(M) estimate >= 1";
  } else {
    rep.diagnosis = "tamed";
  }

  rep.a_boxes = box_sequence(s, rep.radii);
  rep.a_boxes_estimate = rep.a_boxes.back();
  const double hi = std::max(rep.a_boxes_estimate, rep.a_estimate);
  rep.exhaustions_agree = std::abs(rep.a_boxes_estimate - rep.a_estimate) <= std::max(kAgreement * hi, kAgreementFloor);
  return rep.a_estimate;
}

double find_r0(const sampling::SampledSubmanifold& s, const TamednessReport& rep, double c) {
  if (rep.divergent) throw NotTamedError("a(M) diverges on this sample: " + rep.diagnosis);
  if (!(c < 1.0)) throw LevelError("level c must be < 1");
  if (!(c > rep.a_estimate)) throw LevelError("level c must exceed the a(M) estimate " + std::to_string(rep.a_estimate));
  double r0 = -1.0;
  double min_pos = std::numeric_limits<double>::infinity();
  for (int v = 0; v < s.vertex_count(); ++v) {
    const double rho = s.vertex(v).rho_M;
    if (!std::isfinite(rho)) continue;
    if (rho > 0.0) min_pos = std::min(min_pos, rho);
    if (s.tamed_ratio(v) > c) r0 = std::max(r0, rho);
  }
  return r0 > 0.0 ? r0 : min_pos;
}

TamednessReport analyze(const sampling::SampledSubmanifold& s, const std::vector<double>& radii,
                        std::optional<double> c) {
  TamednessReport rep = a_sequence(s, radii);
  estimate_aM(rep, s);
  if (rep.tamed()) {
    const double level = c.value_or(0.5 * (1.0 + rep.a_estimate));
    rep.c = level;
    rep.r0 = find_r0(s, rep, level);
  } else if (c) {
    rep.c = *c;
  }
  return rep;
}

nlohmann::json to_json(const TamednessReport& rep) {
  nlohmann::json j;
  j["radii"] = rep.radii;
  j["a_i"] = rep.a_i;
  j["a_estimate"] = rep.a_estimate;
  j["divergent"] = rep.divergent;
  j["tamed"] = rep.tamed();
  j["c"] = rep.c ? nlohmann::json(*rep.c) : nlohmann::json(nullptr);
  j["r0"] = rep.r0 ? nlohmann::json(*rep.r0) : nlohmann::json(nullptr);
  j["argmax"] = rep.argmax;
  j["a_boxes"] = rep.a_boxes;
  j["a_boxes_estimate"] = rep.a_boxes_estimate;
  j["exhaustions_agree"] = rep.exhaustions_agree;
  j["diagnosis"] = rep.diagnosis;
  return j;
}

}  // namespace tamed::tamedness
