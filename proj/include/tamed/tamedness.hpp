#pragma once

// The sequence a_i = sup over M \ C_i of (S_k/C_k)(rho_M) |alpha|, its limit
// a(M), and the radius r0 beyond which the ratio stays below a level c.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tamed/sampling.hpp"

namespace tamed::tamedness {

struct TamednessReport {
  std::vector<double> radii;
  std::vector<double> a_i;
  std::vector<int> argmax;
  double a_estimate = 0.0;
  bool divergent = false;
  /// Same sequence under inscribed parameter boxes.
  std::vector<double> a_boxes;
  double a_boxes_estimate = 0.0;
  bool exhaustions_agree = true;
  std::optional<double> c;
  std::optional<double> r0;  // intrinsic radius
  std::string diagnosis;

  bool tamed() const { return !divergent && a_estimate < 1.0; }
};

TamednessReport a_sequence(const sampling::SampledSubmanifold& s, const std::vector<double>& radii);

/// Fills a_estimate, divergent and the box-exhaustion comparison. Needs at least three radii.
double estimate_aM(TamednessReport& report, const sampling::SampledSubmanifold& s);

/// Smallest sampled intrinsic radius with the ratio <= c beyond it.
double find_r0(const sampling::SampledSubmanifold& s, const TamednessReport& report, double c);

/// a_sequence + estimate_aM + (when tamed) find_r0 at level c, defaulting to (1 + a_estimate) / 2.
TamednessReport analyze(const sampling::SampledSubmanifold& s, const std::vector<double>& radii,
                        std::optional<double> c = std::nullopt);

nlohmann::json to_json(const TamednessReport& report);

}  // namespace tamed::tamedness
