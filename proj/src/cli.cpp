#include "tamed/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tamed/errors.hpp"
#include "tamed/flow.hpp"
#include "tamed/oracle.hpp"
#include "tamed/properness.hpp"
#include "tamed/sampling.hpp"
#include "tamed/spectral.hpp"
#include "tamed/tamedness.hpp"

namespace tamed::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
std::optional<T> opt_value(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void check_level(const std::optional<double>& c) {
  if (c && !(*c > 0.0 && *c < 1.0)) throw ConfigError("c must lie in (0, 1)");
}

class Reporter {
 public:
  Reporter(const RunConfig& cfg, std::ostream& out) : cfg_(cfg), out_(out) {}

  void table(std::string file, std::function<void(std::ostream&)> writer, bool primary = false) {
    if (primary) primary_ = tables_.size();
    tables_.push_back({std::move(file), std::move(writer)});
  }

  void finish(const std::string& name, const json& report) {
    if (!cfg_.output_dir.empty()) {
      const fs::path dir(cfg_.output_dir);
      fs::create_directories(dir);
      std::ofstream(dir / (name + ".json")) << report.dump(2) << '\n';
      for (const auto& [file, writer] : tables_) {
        std::ofstream f(dir / file);
        writer(f);
      }
    }
    if (cfg_.format == "csv" && primary_) {
      tables_[*primary_].second(out_);
    } else {
      out_ << report.dump(2) << '\n';
    }
  }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::vector<std::pair<std::string, std::function<void(std::ostream&)>>> tables_;
  std::optional<std::size_t> primary_;
};

std::vector<int> default_resolution(int m) { return m == 1 ? std::vector<int>{512} : std::vector<int>{128, 64}; }

sampling::SampledSubmanifold sample(const RunConfig& cfg) {
  auto chart = make_chart(cfg);
  auto res = cfg.resolution.empty() ? default_resolution(chart.m()) : cfg.resolution;
  if (static_cast<int>(res.size()) != chart.m())
    throw ConfigError("resolution has " + std::to_string(res.size()) + " entries for a " +
                      std::to_string(chart.m()) + "-dimensional chart");
  return sampling::SampledSubmanifold(std::move(chart), res);
}

json sample_summary(const sampling::SampledSubmanifold& s) {
  return {{"name", s.chart().name()},
          {"m", s.m()},
          {"curvature", s.chart().ambient().curvature()},
          {"resolution", s.resolution()},
          {"vertices", s.vertex_count()},
          {"eps_mesh", s.eps_mesh()}};
}

void require_tamed(const tamedness::TamednessReport& rep) {
  if (!rep.tamed()) throw NotTamedError("input is not tamed: " + rep.diagnosis);
  if (!rep.c || !rep.r0) throw LevelError("no level c and radius r0 were established");
}

properness::PropernessCertificate run_properness(const RunConfig& cfg, const sampling::SampledSubmanifold& s,
                                                 double c, double r0) {
  if (!cfg.growth_tol) return properness::certify(s, c, r0);
  const properness::Profile h(s.chart().ambient().curvature());
  const double b = properness::compute_b(s, r0, h);
  auto cert = properness::verify_growth(s, c, r0, b, *cfg.growth_tol);
  cert.hessian = properness::hess_lower_bound_check(s, c, r0, *cfg.growth_tol);
  return cert;
}

std::vector<double> end_radii(const RunConfig& cfg, const sampling::SampledSubmanifold& s, double r0) {
  if (!cfg.flow.end_radii.empty()) return cfg.flow.end_radii;
  double edge = std::numeric_limits<double>::infinity();
  double top = 0.0;
  for (int v = 0; v < s.vertex_count(); ++v) {
    top = std::max(top, s.vertex(v).rho_N);
    if (s.on_truncation_edge(v)) edge = std::min(edge, s.vertex(v).rho_N);
  }
  if (!std::isfinite(edge)) edge = top;
  const double hi = 0.7 * edge;
  const double lo = std::max(0.35 * edge, r0 + 0.1 * (hi - r0));
  std::vector<double> radii;
  for (int k = 0; k < 5; ++k) radii.push_back(lo + (hi - lo) * k / 4.0);
  return radii;
}

flow::FlowReport run_flow(const RunConfig& cfg, const sampling::SampledSubmanifold& s, double c) {
  const auto crit = flow::find_critical_points(s);
  const double r0 = flow::flow_radius(s, c, crit);
  return flow::run_flow(s, c, r0, cfg.flow.T, cfg.flow.step, end_radii(cfg, s, r0), cfg.flow.max_seeds);
}

void add_trajectory_tables(Reporter& rep, const flow::FlowReport& fr) {
  for (std::size_t k = 0; k < fr.trajectories.size(); ++k) {
    std::ostringstream name;
    name << "trajectory_" << std::setw(3) << std::setfill('0') << k << ".csv";
    rep.table(name.str(), [&fr, k](std::ostream& o) { flow::write_trajectory_csv(fr.trajectories[k], o); });
  }
  rep.table(
      "trajectories.csv",
      [&fr](std::ostream& o) {
        for (std::size_t k = 0; k < fr.trajectories.size(); ++k) {
          std::ostringstream buf;
          flow::write_trajectory_csv(fr.trajectories[k], buf);
          std::istringstream lines(buf.str());
          std::string line;
          bool header = true;
          while (std::getline(lines, line)) {
            if (header) {
              if (k == 0) o << "trajectory," << line << '\n';
              header = false;
              continue;
            }
            o << k << ',' << line << '\n';
          }
        }
      },
      true);
}

double corollary_radius(const RunConfig& cfg, double r0) { return cfg.R ? *cfg.R : std::max(2.0 * r0, r0 + 1.0); }

int cmd_catalog(const RunConfig& cfg, std::ostream& out) {
  Reporter rep(cfg, out);
  json list = json::array();
  for (const auto& e : immersion::catalog()) list.push_back({{"name", e.name}, {"summary", e.summary}});
  rep.table(
      "catalog.csv",
      [](std::ostream& o) {
        o << "name,summary\n";
        for (const auto& e : immersion::catalog()) o << e.name << ",\"" << e.summary << "\"\n";
      },
      true);
  rep.finish("catalog", list);
  return kExitOk;
}

int cmd_tamedness(const RunConfig& cfg, std::ostream& out) {
  const auto s = sample(cfg);
  const auto tr = tamedness::analyze(s, cfg.radii, cfg.c);
  json j = tamedness::to_json(tr);
  j["chart"] = sample_summary(s);
  Reporter rep(cfg, out);
  rep.table("vertices.csv", [&s](std::ostream& o) { sampling::write_vertex_csv(s, o); }, true);
  rep.finish("tamedness", j);
  return kExitOk;
}

int cmd_properness(const RunConfig& cfg, std::ostream& out) {
  const auto s = sample(cfg);
  const auto tr = tamedness::analyze(s, cfg.radii, cfg.c);
  require_tamed(tr);
  const auto cert = run_properness(cfg, s, *tr.c, *tr.r0);
  json j;
  j["chart"] = sample_summary(s);
  j["tamedness"] = tamedness::to_json(tr);
  j["certificate"] = properness::to_json(cert);
  j["ok"] = cert.ok();
  Reporter rep(cfg, out);
  rep.table("vertices.csv", [&s](std::ostream& o) { sampling::write_vertex_csv(s, o); }, true);
  rep.finish("properness", j);
  return cert.ok() ? kExitOk : kExitViolation;
}

int cmd_flow(const RunConfig& cfg, std::ostream& out) {
  const auto s = sample(cfg);
  const auto tr = tamedness::analyze(s, cfg.radii, cfg.c);
  require_tamed(tr);
  const auto fr = run_flow(cfg, s, *tr.c);
  json j = flow::to_json(fr);
  j["chart"] = sample_summary(s);
  j["ok"] = fr.ok();
  Reporter rep(cfg, out);
  add_trajectory_tables(rep, fr);
  rep.finish("flow", j);
  return fr.ok() ? kExitOk : kExitViolation;
}

int cmd_spectral(const RunConfig& cfg, std::ostream& out) {
  const int l = cfg.l.value_or(2);
  const double R = cfg.R.value_or(1.0);
  std::optional<sampling::SampledSubmanifold> s;
  std::optional<tamedness::TamednessReport> tr;
  if (!cfg.immersion.is_null()) {
    s.emplace(sample(cfg));
    tr = tamedness::analyze(*s, cfg.radii, cfg.c);
    require_tamed(*tr);
  }
  const double mu = cfg.mu ? *cfg.mu : (s ? s->chart().ambient().curvature() : 0.0);
  const auto sol = spectral::radial_eigenvalue(l, mu, R, {cfg.radial_tol});
  json j = spectral::to_json(sol);
  const double lemma2 = spectral::lemma2_check(sol);
  const bool ok = lemma2 <= 1e-9 && spectral::ode_residual(sol) <= 1e-8;
  j["closed_forms_differ"] = std::abs(j["mckean_limit"].get<double>() - j["printed_form"].get<double>()) > 1e-12;
  j["lemma2_ok"] = lemma2 <= 1e-9;
  if (s) {
    const auto tb = spectral::tone_upper_bound(s->m(), *tr->c, mu, *tr->r0, cfg.l);
    j["tone_bound"] = spectral::to_json(tb);
    j["tamedness"] = tamedness::to_json(*tr);
  }
  j["ok"] = ok;
  Reporter rep(cfg, out);
  rep.table("radial_solution.csv", [&sol](std::ostream& o) { spectral::write_solution_csv(sol, o); }, true);
  rep.finish("spectral", j);
  return ok ? kExitOk : kExitViolation;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  Reporter rep(cfg, out);
  if (cfg.immersion.is_null()) {
    const double R = cfg.R.value_or(1.0);
    const int n = cfg.resolution.empty() ? 200 : cfg.resolution.front();
    const auto p = oracle::assemble(oracle::disc_mesh(n, R));
    const auto eig = oracle::lambda1_dirichlet(p, {cfg.oracle_tol});
    const auto quad = oracle::barta_sandwich(p, p.sample([R](const immersion::Vec& x) { return 1.0 - x.squaredNorm() / (R * R); }));
    const auto self = oracle::barta_sandwich(p, eig.x);
    const double reference = spectral::radial_eigenvalue(2, 0.0, R).lambda1;
    const bool ok = quad.inf_ratio <= eig.lambda && eig.lambda <= quad.sup_ratio &&
                    self.inf_ratio <= eig.lambda + 1e-6 && self.sup_ratio >= eig.lambda - 1e-6;
    json j = oracle::to_json(eig);
    j["domain"] = "disc";
    j["R"] = R;
    j["resolution"] = n;
    j["radial_reference"] = reference;
    j["relative_gap"] = std::abs(eig.lambda - reference) / reference;
    j["barta_quadratic"] = json{{"inf", quad.inf_ratio}, {"sup", quad.sup_ratio}};
    j["barta_eigenvector"] = json{{"inf", self.inf_ratio}, {"sup", self.sup_ratio}};
    j["ok"] = ok;
    rep.table(
        "eigenvector.csv",
        [&p, &eig](std::ostream& o) {
          o << "x,y,f\n";
          o.precision(17);
          for (int k = 0; k < p.size(); ++k) {
            const auto& x = p.mesh.points[static_cast<std::size_t>(p.vertex_of[static_cast<std::size_t>(k)])];
            o << x[0] << ',' << x[1] << ',' << eig.x[k] << '\n';
          }
        },
        true);
    if (!cfg.output_dir.empty()) {
      fs::create_directories(cfg.output_dir);
      oracle::write_matrix_market(p, (fs::path(cfg.output_dir) / "disc").string());
    }
    rep.finish("oracle", j);
    return ok ? kExitOk : kExitViolation;
  }
  const auto s = sample(cfg);
  const auto tr = tamedness::analyze(s, cfg.radii, cfg.c);
  require_tamed(tr);
  const double R = corollary_radius(cfg, *tr.r0);
  const auto cor = oracle::corollary_check(s, *tr.c, *tr.r0, R, {cfg.oracle_tol});
  json j = oracle::to_json(cor);
  j["chart"] = sample_summary(s);
  j["ok"] = cor.holds();
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    const auto p = oracle::assemble(oracle::region_mesh(s, oracle::component_below(s, R)));
    oracle::write_matrix_market(p, (fs::path(cfg.output_dir) / "region").string());
  }
  rep.finish("oracle", j);
  return cor.holds() ? kExitOk : kExitViolation;
}

int cmd_verify_all(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto s = sample(cfg);
  const auto tr = tamedness::analyze(s, cfg.radii, cfg.c);
  Reporter rep(cfg, out);
  rep.table("vertices.csv", [&s](std::ostream& o) { sampling::write_vertex_csv(s, o); });
  json j;
  j["chart"] = sample_summary(s);
  j["tamedness"] = tamedness::to_json(tr);
  if (!tr.tamed() || !tr.c || !tr.r0) {
    j["ok"] = false;
    j["diagnosis"] = "not tamed: " + tr.diagnosis;
    err << "verify-all: input is not tamed: " << tr.diagnosis << '\n';
    rep.finish("verify_all", j);
    return kExitViolation;
  }
  const double c = *tr.c;
  const double r0 = *tr.r0;
  const double mu = s.chart().ambient().curvature();

  const auto cert = run_properness(cfg, s, c, r0);
  j["properness"] = properness::to_json(cert);

  const auto fr = run_flow(cfg, s, c);
  j["flow"] = flow::to_json(fr);
  add_trajectory_tables(rep, fr);

  const auto tb = spectral::tone_upper_bound(s.m(), c, mu, r0, cfg.l);
  j["tone_bound"] = spectral::to_json(tb);

  const double R = corollary_radius(cfg, r0);
  const auto cor = oracle::corollary_check(s, c, r0, R, {cfg.oracle_tol});
  j["corollary"] = oracle::to_json(cor);

  const auto lap = oracle::laplacian_consistency(s);
  j["laplacian"] = json{{"checked", lap.checked},
                    {"max_trace_gap", lap.max_trace_gap},
                    {"max_discrete_rel_error", lap.max_discrete_rel_error}};

  const bool ok = cert.ok() && fr.ok() && cor.holds();
  j["checks"] = json{{"properness", cert.ok()}, {"flow", fr.ok()}, {"corollary", cor.holds()}};
  j["ok"] = ok;
  if (!ok) err << "verify-all: a certificate was violated\n";
  rep.finish("verify_all", j);
  return ok ? kExitOk : kExitViolation;
}

bool is_usage_error(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
         dynamic_cast<const DomainError*>(&e) || dynamic_cast<const DegeneracyError*>(&e) ||
         dynamic_cast<const EvaluationError*>(&e) || dynamic_cast<const json::exception*>(&e) ||
         dynamic_cast<const fs::filesystem_error*>(&e);
}

}  // namespace

std::vector<int> parse_resolution(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(part, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad resolution '" + text + "'");
    }
    if (used != part.size() || v <= 0) throw ConfigError("bad resolution '" + text + "'");
    out.push_back(v);
  }
  if (out.empty() || static_cast<std::ptrdiff_t>(out.size()) != std::count(text.begin(), text.end(), 'x') + 1)
    throw ConfigError("bad resolution '" + text + "'");
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + part + "' in list");
    }
    if (used != part.size()) throw ConfigError("bad number '" + part + "' in list");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{"immersion", "resolution", "radii", "c", "R", "l", "mu",
                                              "flow", "tolerances", "output", "format"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config key '" + key + "'");
  RunConfig cfg;
  if (!j.contains("immersion")) throw ConfigError("config needs an 'immersion' entry");
  {
    const auto& im = j.at("immersion");
    if (!im.is_object() || (im.contains("builtin") == im.contains("chart")))
      throw ConfigError("'immersion' needs exactly one of 'builtin' or 'chart'");
    cfg.immersion = im;
  }
  if (auto r = opt_value<std::vector<int>>(j, "resolution")) cfg.resolution = *r;
  if (auto r = opt_value<std::vector<double>>(j, "radii")) cfg.radii = *r;
  cfg.c = opt_value<double>(j, "c");
  check_level(cfg.c);
  cfg.R = opt_value<double>(j, "R");
  cfg.l = opt_value<int>(j, "l");
  cfg.mu = opt_value<double>(j, "mu");
  if (j.contains("flow")) {
    const auto& f = j.at("flow");
    if (!f.is_object()) throw ConfigError("'flow' must be an object");
    cfg.flow.T = opt_value<double>(f, "T").value_or(cfg.flow.T);
    cfg.flow.step = opt_value<double>(f, "step").value_or(cfg.flow.step);
    cfg.flow.max_seeds = opt_value<int>(f, "max_seeds").value_or(cfg.flow.max_seeds);
    cfg.flow.end_radii = opt_value<std::vector<double>>(f, "end_radii").value_or(std::vector<double>{});
    if (!(cfg.flow.T > 0.0) || !(cfg.flow.step > 0.0)) throw ConfigError("flow T and step must be positive");
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    if (!t.is_object()) throw ConfigError("'tolerances' must be an object");
    cfg.growth_tol = opt_value<double>(t, "growth");
    cfg.oracle_tol = opt_value<double>(t, "oracle").value_or(cfg.oracle_tol);
    cfg.radial_tol = opt_value<double>(t, "radial").value_or(cfg.radial_tol);
  }
  cfg.output_dir = opt_value<std::string>(j, "output").value_or("");
  cfg.format = opt_value<std::string>(j, "format").value_or("json");
  if (cfg.format != "json" && cfg.format != "csv") throw ConfigError("format must be json or csv");
  for (int r : cfg.resolution)
    if (r < 16) throw ConfigError("resolution entries must be at least 16");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

immersion::ImmersionChart make_chart(const RunConfig& cfg) {
  const auto& im = cfg.immersion;
  if (im.is_null()) throw ConfigError("this command needs an immersion (--config)");
  if (im.contains("builtin")) {
    if (!im.at("builtin").is_string()) throw ConfigError("'builtin' must be a string");
    return immersion::builtin(im.at("builtin").get<std::string>(), im.value("params", json::object()));
  }
  return immersion::chart_from_json(im.at("chart"));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tamed second fundamental form analysis", "tamed-geometry"};
  app.require_subcommand(1);

  std::string config_path, radii, resolution, output, format;
  std::optional<double> c, R, mu;
  std::optional<int> l;
  std::optional<double> growth_tol;
  std::vector<CLI::App*> subs;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"catalog", "List built-in immersions"},
      {"tamedness", "a_i sequence, a(M) estimate, c and r0"},
      {"properness", "Hessian bounds and growth certificate"},
      {"flow", "Gradient flow of the extrinsic distance, critical points and ends"},
      {"spectral", "Radial Dirichlet eigenvalue and fundamental tone bound"},
      {"oracle", "Discrete eigenvalue oracle (flat disc, or the corollary on a chart)"},
      {"verify-all", "Full pipeline"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--radii", radii, "Exhaustion radii, comma separated");
    sub->add_option("--c", c, "Tamedness level in (0, 1)");
    sub->add_option("--R", R, "Ball radius");
    sub->add_option("--l", l, "Model dimension");
    sub->add_option("--mu", mu, "Model curvature (<= 0)");
    sub->add_option("--resolution", resolution, "Grid resolution NxM");
    sub->add_option("--output", output, "Directory for JSON and CSV reports");
    sub->add_option("--format", format, "Report format on stdout")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--growth-tol", growth_tol, "Growth and Hessian tolerance (default 5 eps_mesh)");
    subs.push_back(sub);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    for (auto* sub : subs)
      if (sub->parsed()) out << sub->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const auto* chosen = app.get_subcommands().front();
  const std::string cmd = chosen->get_name();
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!radii.empty()) cfg.radii = parse_list(radii);
    if (!resolution.empty()) cfg.resolution = parse_resolution(resolution);
    if (c) cfg.c = c;
    if (R) cfg.R = R;
    if (l) cfg.l = l;
    if (mu) cfg.mu = mu;
    if (growth_tol) cfg.growth_tol = growth_tol;
    if (!output.empty()) cfg.output_dir = output;
    if (!format.empty()) cfg.format = format;
    check_level(cfg.c);
    if (cfg.mu && *cfg.mu > 0.0) throw ConfigError("mu must be <= 0");
    if (cfg.R && !(*cfg.R > 0.0)) throw ConfigError("R must be positive");
    if (cfg.l && *cfg.l < 2) throw ConfigError("l must be >= 2");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (cmd == "catalog") return cmd_catalog(cfg, out);
    if (cmd == "tamedness") return cmd_tamedness(cfg, out);
    if (cmd == "properness") return cmd_properness(cfg, out);
    if (cmd == "flow") return cmd_flow(cfg, out);
    if (cmd == "spectral") return cmd_spectral(cfg, out);
    if (cmd == "oracle") return cmd_oracle(cfg, out);
    return cmd_verify_all(cfg, out, err);
  } catch (const std::exception& e) {
    err << cmd << ": " << e.what() << '\n';
    return is_usage_error(e) ? kExitUsage : kExitViolation;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tamed::cli
