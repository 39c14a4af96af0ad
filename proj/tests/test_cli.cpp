#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tamed/cli.hpp"
#include "tamed/errors.hpp"

using namespace tamed;
using nlohmann::json;

namespace {

const std::string kConfigs = std::string(TAMED_SOURCE_DIR) + "/configs/";

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tamed_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("catalog") {
  const auto r = run({"catalog"});
  CHECK(r.code == cli::kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j.size() == 7);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"tamedness"}).code == cli::kExitUsage);
  CHECK(run({"tamedness", "--config", kConfigs + "missing.json"}).code == cli::kExitUsage);
  CHECK(run({"tamedness", "--config", kConfigs + "catenoid.json", "--c", "1.5"}).code == cli::kExitUsage);
  CHECK(run({"tamedness", "--config", kConfigs + "catenoid.json", "--format", "xml"}).code == cli::kExitUsage);
  CHECK(run({"spectral", "--l", "1", "--mu", "0", "--R", "1"}).code == cli::kExitUsage);
}

TEST_CASE("config schema") {
  const json good = {{"immersion", {{"builtin", "catenoid"}}}, {"c", 0.5}};
  CHECK(cli::parse_config(good).c == 0.5);
  CHECK_THROWS_AS(cli::parse_config({{"immersion", {{"builtin", "catenoid"}}}, {"colour", 1}}), ConfigError);
  CHECK_THROWS_AS(cli::parse_config({{"c", 0.5}}), ConfigError);
  CHECK_THROWS_AS(cli::parse_config({{"immersion", {{"builtin", "catenoid"}}}, {"c", 1.0}}), ConfigError);
  CHECK_THROWS_AS(cli::parse_config({{"immersion", {{"builtin", "catenoid"}, {"chart", json::object()}}}}), ConfigError);
  CHECK(cli::parse_resolution("128x64") == std::vector<int>{128, 64});
  CHECK(cli::parse_resolution("200") == std::vector<int>{200});
  CHECK_THROWS_AS(cli::parse_resolution("12x"), ConfigError);
  CHECK(cli::parse_list("1,2,5") == std::vector<double>{1, 2, 5});
}

TEST_CASE("tamedness reports") {
  const auto r = run({"tamedness", "--config", kConfigs + "catenoid.json", "--radii", "1,2,5,10,20"});
  CHECK(r.code == cli::kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j["tamed"].get<bool>());
  const auto a = j["a_i"].get<std::vector<double>>();
  for (std::size_t i = 0; i + 1 < a.size(); ++i) CHECK(a[i + 1] <= a[i]);

  const auto cyl = run({"tamedness", "--config", kConfigs + "cylinder.json"});
  CHECK(cyl.code == cli::kExitOk);
  CHECK(json::parse(cyl.out)["divergent"].get<bool>());
}

TEST_CASE("not-tamed inputs exit 2") {
  const auto p = run({"properness", "--config", kConfigs + "cylinder.json"});
  CHECK(p.code == cli::kExitViolation);
  CHECK(p.err.find("not tamed") != std::string::npos);
  CHECK(run({"flow", "--config", kConfigs + "cylinder.json"}).code == cli::kExitViolation);
  const auto v = run({"verify-all", "--config", kConfigs + "cylinder.json"});
  CHECK(v.code == cli::kExitViolation);
  CHECK(v.out.find("not tamed") != std::string::npos);
}

TEST_CASE("spectral without a config") {
  const auto r = run({"spectral", "--l", "3", "--mu", "0", "--R", "1"});
  CHECK(r.code == cli::kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j["lambda1"].get<double>() == doctest::Approx(9.8696044).epsilon(1e-7));

  const auto csv = run({"spectral", "--l", "2", "--mu", "-1", "--R", "3", "--format", "csv"});
  CHECK(csv.code == cli::kExitOk);
  CHECK(csv.out.rfind("t,v,dv\n", 0) == 0);
}

TEST_CASE("output directory") {
  const auto dir = scratch("out");
  const auto r = run({"tamedness", "--config", kConfigs + "plane.json", "--resolution", "32x32", "--output", dir.string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(std::filesystem::exists(dir / "tamedness.json"));
  CHECK(std::filesystem::exists(dir / "vertices.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("deterministic reports") {
  const std::vector<std::string> args{"properness", "--config", kConfigs + "plane.json", "--resolution", "48x48"};
  const auto a = run(args);
  const auto b = run(args);
  CHECK(a.code == cli::kExitOk);
  CHECK(a.out == b.out);
}

TEST_CASE("inline chart config") {
  const auto dir = scratch("inline");
  const json cfg = {{"immersion",
                     {{"chart",
                       {{"vars", {"u", "v"}},
                        {"domain", {{-3, 3}, {-3, 3}}},
                        {"components", {"u", "v", "0.1*sin(u)*cos(v)"}}}}}},
                    {"resolution", {48, 48}},
                    {"radii", {0.5, 1, 1.5, 2}}};
  const auto path = (dir / "cfg.json").string();
  std::ofstream(path) << cfg.dump();
  const auto r = run({"tamedness", "--config", path});
  CHECK(r.code == cli::kExitOk);
  std::filesystem::remove_all(dir);
}

TEST_CASE("verify-all on the catenoid") {
  const auto r = run({"verify-all", "--config", kConfigs + "catenoid.json"});
  CHECK(r.code == cli::kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j["ok"].get<bool>());
  CHECK(j["checks"]["properness"].get<bool>());
  CHECK(j["checks"]["flow"].get<bool>());
  CHECK(j["checks"]["corollary"].get<bool>());
}
