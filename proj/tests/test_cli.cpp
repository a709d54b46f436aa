#include <doctest.h>

#include "antiplane/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace antiplane;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("antiplane_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string write_manifest(const TempDir& d, nlohmann::json j) {
  j["output"]["dir"] = d.path.string();
  const auto p = d.path / "manifest.json";
  std::ofstream(p) << j.dump(2);
  return p.string();
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

nlohmann::json small_core() { return {{"window_radius", 20.0}}; }

}  // namespace

TEST_CASE("manifest defaults and aliases") {
  const ExperimentManifest d = parse_manifest(nlohmann::json::object());
  CHECK(d.potential.kind == "cos");
  CHECK(d.potential.parameter == 1.0);
  CHECK(d.domain.kind == "ball");

  const auto a = parse_manifest({{"psi", {{"kind", "cos"}, {"kappa", 2.5}}}});
  CHECK(a.potential.parameter == 2.5);
  const auto b = parse_manifest({{"psi", {{"kind", "lin"}, {"lambda", 0.5}}}});
  CHECK(b.potential.kind == "lin");
  CHECK(b.potential.parameter == 0.5);
}

TEST_CASE("manifest round trip is the identity") {
  const nlohmann::json j = {
      {"psi", {{"kind", "cos"}, {"kappa", 1.5}}},
      {"domain", {{"kind", "polygon"}, {"corners", {{-20, -20}, {25, -20}, {-20, 25}}}}},
      {"config", {{{"m", 0}, {"n", -1}, {"orientation", "down"}, {"sign", 1}}}},
      {"solver", {{"tol", 1e-9}, {"truncation_radius", 4.0}}},
      {"sweep", {{"parameter", "S"}, {"values", {8, 12, 16}}}},
      {"seed", 42}};
  const ExperimentManifest m = parse_manifest(j);
  const nlohmann::json once = to_json(m);
  const ExperimentManifest again = parse_manifest(once);
  CHECK(to_json(again) == once);
  CHECK(manifest_hash(again) == manifest_hash(m));
  ExperimentManifest other = m;
  other.seed = 43;
  CHECK(manifest_hash(other) != manifest_hash(m));
}

TEST_CASE("invalid manifests are configuration errors") {
  CHECK_THROWS_AS(parse_manifest({{"psi", {{"kind", "cos"}, {"kappa", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_manifest({{"psi", {{"kind", "morse"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_manifest({{"domain", {{"kind", "ball"}, {"radius", "big"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_manifest({{"sweep", {{"parameter", "Q"}, {"values", {1, 2, 3}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_manifest({{"config", {{{"m", 500}, {"n", 0}}}}}), ConfigError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), ConfigError);
}

TEST_CASE("command line errors exit with 1") {
  CHECK(run({}) == kExitConfig);
  CHECK(run({"frobnicate", "--manifest", "x.json"}) == kExitConfig);
  CHECK(run({"stab-check"}) == kExitConfig);
  TempDir d("neg");
  const auto p = write_manifest(d, {{"psi", {{"kind", "cos"}, {"kappa", -1.0}}}});
  CHECK(run({"stab-check", "--manifest", p}) == kExitConfig);
}

TEST_CASE("stab-check writes a report") {
  TempDir d("stab");
  const auto p = write_manifest(d, {{"domain", {{"kind", "ball"}, {"radius", 20.0}}}});
  CHECK(run({"stab-check", "--manifest", p}) == kExitOk);
  std::ifstream in(d.path / "report.json");
  REQUIRE(in);
  const auto rep = nlohmann::json::parse(in);
  CHECK(rep.dump().find("lambda") != std::string::npos);
  CHECK(fs::exists(d.path / "core_corrector.txt"));
}

TEST_CASE("too small windows are rejected") {
  TempDir d("small");
  const auto p = write_manifest(d, {{"domain", {{"kind", "ball"}, {"radius", 8.0}}}});
  std::string err;
  CHECK(run({"stab-check", "--manifest", p}, &err) == kExitConfig);
  CHECK(err.find("window too small") != std::string::npos);
}

TEST_CASE("cores closer than the truncation allows exit with 2") {
  TempDir d("close");
  const auto p = write_manifest(d, {{"domain", {{"kind", "ball"}, {"radius", 30.0}}},
                                    {"config", {{{"m", 2}, {"n", -1}, {"sign", 1}}, {{"m", -3}, {"n", -1}, {"sign", -1}}}},
                                    {"core", small_core()}});
  CHECK(run({"equilibrate", "--manifest", p}) == kExitPrecondition);
}

TEST_CASE("equilibrate on a hexagon keeps the core") {
  TempDir d("eq");
  const auto p = write_manifest(d, {{"domain", {{"kind", "hexagon"}, {"hexagon", 16}}},
                                    {"config", {{{"m", 0}, {"n", -1}, {"sign", 1}}}},
                                    {"core", small_core()}});
  CHECK(run({"equilibrate", "--manifest", p}) == kExitOk);
  std::ifstream in(d.path / "report.json");
  REQUIRE(in);
  const auto rep = nlohmann::json::parse(in);
  CHECK(rep.at("cores_preserved").get<bool>());
  CHECK(fs::exists(d.path / "equilibrium.txt"));
}

TEST_CASE("decay-study writes a stamped table") {
  TempDir d("decay");
  const auto p = write_manifest(d, {{"sweep", {{"parameter", "S"}, {"values", {6, 9, 12}}}}, {"core", small_core()}});
  CHECK(run({"decay-study", "--manifest", p, "--jobs", "2"}) == kExitOk);
  std::ifstream in(d.path / "sweep.csv");
  REQUIRE(in);
  std::string stamp, header;
  std::getline(in, stamp);
  std::getline(in, header);
  CHECK(stamp.rfind("# antiplane " + tool_version() + " manifest-fnv1a=", 0) == 0);
  CHECK(header.rfind("case_id,parameter,residual,slope_running", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == 3);
}

TEST_CASE("instability-demo refuses unbalanced configurations") {
  TempDir d("demo");
  const auto p = write_manifest(d, {{"domain", {{"kind", "ball"}, {"radius", 30.0}}},
                                    {"config", {{{"m", 0}, {"n", -1}, {"sign", 1}}}},
                                    {"core", small_core()}});
  CHECK(run({"instability-demo", "--manifest", p}) == kExitConfig);
  TempDir e("demo0");
  const auto q = write_manifest(e, {{"domain", {{"kind", "ball"}, {"radius", 30.0}}}, {"core", small_core()}});
  CHECK(run({"instability-demo", "--manifest", q}) == kExitOk);
}

TEST_CASE("a sweep of two values is a configuration error") {
  TempDir d("short");
  const auto p = write_manifest(d, {{"sweep", {{"parameter", "S"}, {"values", {8, 16}}}}, {"core", small_core()}});
  CHECK(run({"decay-study", "--manifest", p}) == kExitConfig);
}

TEST_CASE("sweep output does not depend on the job count") {
  auto csv_for = [](const std::string& tag, const std::string& jobs) {
    TempDir d(tag);
    const auto p = write_manifest(d, {{"sweep", {{"parameter", "L"}, {"values", {12, 16, 20}}}}, {"core", small_core()}});
    REQUIRE(run({"decay-study", "--manifest", p, "--jobs", jobs}) == kExitOk);
    std::ifstream in(d.path / "sweep.csv");
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string one = csv_for("jobs", "1");
  CHECK(!one.empty());
  CHECK(one == csv_for("jobs", "3"));
}

TEST_CASE("instability-demo on a dipole at distance 60") {
  TempDir d("dipole");
  const auto p = write_manifest(d, {{"domain", {{"kind", "ball"}, {"radius", 160.0}}},
                                    {"config", {{{"m", 31}, {"n", -1}, {"sign", 1}}, {{"m", -30}, {"n", -1}, {"sign", -1}}}},
                                    {"core", small_core()}});
  CHECK(run({"instability-demo", "--manifest", p}) == kExitOk);
  std::ifstream in(d.path / "report.json");
  REQUIRE(in);
  const auto rep = nlohmann::json::parse(in);
  CHECK(rep.dump().find("energy_gap") != std::string::npos);
}
