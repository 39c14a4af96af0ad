#pragma once

// Batch front end shared by the tamed-geometry executable and the Python module.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tamed/immersion.hpp"

namespace tamed::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitViolation = 2;

struct FlowSettings {
  double T = 30.0;
  double step = 0.05;
  int max_seeds = 32;
  std::vector<double> end_radii;  // empty: derived from the chart
};

struct RunConfig {
  nlohmann::json immersion;  // {"builtin": name, "params": {...}} or {"chart": {...}}
  std::vector<int> resolution;  // empty: 128x64 for surfaces, 512 for curves, 200 for the disc oracle
  std::vector<double> radii{1.0, 2.0, 5.0, 10.0, 20.0};
  std::optional<double> c;
  std::optional<double> R;
  std::optional<int> l;
  std::optional<double> mu;
  FlowSettings flow;
  std::optional<double> growth_tol;  // default 5 eps_mesh
  double oracle_tol = 1e-10;
  double radial_tol = 1e-9;
  std::string output_dir;
  std::string format = "json";
};

/// Validates the schema; throws ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

immersion::ImmersionChart make_chart(const RunConfig& cfg);

/// "128x64" or "200".
std::vector<int> parse_resolution(const std::string& text);
/// "1,2,5,10".
std::vector<double> parse_list(const std::string& text);

/// Runs one command line (args excludes the program name). Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace tamed::cli
