#pragma once

#include "antiplane/forms.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace antiplane {

/// Invalid manifest or command-line input (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitPrecondition = 2, kExitSolver = 3 };

struct PotentialSpec {
  std::string kind = "cos";
  double parameter = 1.0;
};

struct DomainSpec {
  std::string kind = "ball";  // ball | polygon | hexagon
  double radius = 64.0;
  std::vector<LatticeSite> corners;
  int hexagon = 0;
};

struct CoreSpec {
  double window_radius = 64.0;
  std::string file;  // precomputed core corrector; computed when empty
};

struct SolverSpec {
  double tol = 1e-8;
  int max_iters = 50;
  double eigen_tol = 1e-8;
  double corrector_tol = 1e-10;
  double core_tol = 1e-9;
  std::optional<double> truncation_radius;
  double certify_eps = 0.1;
  int certify_trials = 8;
};

struct SweepSpec {
  std::string parameter;  // "L" or "S"
  std::vector<double> values;
  std::string case_id;
  double window_radius = 0.0;  // ball window for L-sweeps; 0 -> 4 * max(values) + 16
  std::vector<int> signs{1, 1};
  bool newton = false;
  std::map<std::string, double> thresholds;  // residual_slope, dw_slope
};

struct OutputSpec {
  std::string dir = ".";
  std::string report = "report.json";
  std::string csv = "sweep.csv";
  std::string snapshot = "equilibrium.txt";
  std::string core = "core_corrector.txt";
};

struct ExperimentManifest {
  PotentialSpec potential;
  DomainSpec domain;
  std::vector<Core> config;
  CoreSpec core;
  SolverSpec solver;
  std::optional<SweepSpec> sweep;
  OutputSpec output;
  std::uint64_t seed = 1;
};

/// Two down cells at set distance round(L), symmetric about the origin
/// (a single cell when `signs` has one entry).
std::vector<Core> pair_at_distance(double L, const std::vector<int>& signs);
/// Hexagon size k whose origin cell sits at distance about S from the boundary.
int hexagon_for_distance(double S);

ExperimentManifest parse_manifest(const nlohmann::json& j);
ExperimentManifest load_manifest(const std::string& path);
nlohmann::json to_json(const ExperimentManifest& m);

/// FNV-1a of the canonical serialization.
std::uint64_t manifest_hash(const ExperimentManifest& m);
std::string tool_version();

int cmd_stab_check(const ExperimentManifest& m, std::ostream& log);
int cmd_equilibrate(const ExperimentManifest& m, std::ostream& log);
int cmd_decay_study(const ExperimentManifest& m, std::ostream& log, int jobs = 1);
int cmd_instability_demo(const ExperimentManifest& m, std::ostream& log);

/// Parses `antiplane <command> --manifest PATH [--out DIR] [--jobs N]
/// [--seed U64] [--tol FLOAT]` and maps exceptions onto exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace antiplane
