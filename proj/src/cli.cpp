#include "antiplane/cli.hpp"

#include "antiplane/elasticity.hpp"
#include "antiplane/predictor.hpp"
#include "antiplane/solver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace antiplane {

namespace fs = std::filesystem;

namespace {

Orientation parse_orientation(const std::string& s) {
  if (s == "up") return Orientation::up;
  if (s == "down") return Orientation::down;
  throw ConfigError("orientation must be \"up\" or \"down\", got \"" + s + "\"");
}

bool cell_in_domain(const Cell& cell, const DomainSpec& d) {
  for (const auto& v : cell.vertices()) {
    if (d.kind == "ball") {
      if (v.position().norm() > d.radius) return false;
    } else if (d.kind == "hexagon") {
      const int k = d.hexagon;
      if (v.m < -k || v.m > k - 1 || v.n < -k || v.n > k - 1 || v.m + v.n < -k || v.m + v.n > k - 1) return false;
    } else {
      const auto& c = d.corners;
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& a = c[i];
        const auto& b = c[(i + 1) % c.size()];
        const long cr = static_cast<long>(b.m - a.m) * (v.n - a.n) - static_cast<long>(b.n - a.n) * (v.m - a.m);
        if (cr < 0) return false;
      }
    }
  }
  return true;
}

void validate(const ExperimentManifest& m) {
  if (m.potential.kind != "cos" && m.potential.kind != "lin")
    throw ConfigError("unknown potential kind \"" + m.potential.kind + "\"");
  if (!(m.potential.parameter > 0.0)) throw ConfigError("potential parameter must be positive");
  const auto& d = m.domain;
  if (d.kind == "ball") {
    if (!(d.radius >= 2.0)) throw ConfigError("ball radius must be at least 2");
  } else if (d.kind == "polygon") {
    if (d.corners.size() < 3) throw ConfigError("polygon needs at least three corners");
  } else if (d.kind == "hexagon") {
    if (d.hexagon < 2) throw ConfigError("hexagon size must be at least 2");
  } else {
    throw ConfigError("unknown domain kind \"" + d.kind + "\"");
  }
  for (const auto& c : m.config) {
    if (c.sign != 1 && c.sign != -1) throw ConfigError("core sign must be +1 or -1");
    if (!cell_in_domain(c.cell, d)) throw ConfigError("core cell outside the declared domain");
  }
  try {
    DislocationConfig check(m.config);
  } catch (const GeometryError& e) {
    throw ConfigError(e.what());
  }
  const auto& s = m.solver;
  if (!(s.tol > 0.0) || !(s.eigen_tol > 0.0) || !(s.corrector_tol > 0.0) || !(s.core_tol > 0.0) || s.max_iters < 1)
    throw ConfigError("solver tolerances and iteration budgets must be positive");
  if (s.truncation_radius && !(*s.truncation_radius > 2.0)) throw ConfigError("truncation radius must exceed 2");
  if (!(s.certify_eps > 0.0) || s.certify_trials < 0) throw ConfigError("invalid certification settings");
  if (m.core.file.empty() && m.core.window_radius < 16.0)
    throw ConfigError("window too small: core window radius must be at least 16");
  if (m.sweep) {
    const auto& w = *m.sweep;
    if (w.parameter != "L" && w.parameter != "S") throw ConfigError("sweep parameter must be \"L\" or \"S\"");
    if (w.values.size() < 3) throw ConfigError("sweep needs at least three values");
    for (std::size_t i = 1; i < w.values.size(); ++i)
      if (!(w.values[i] > w.values[i - 1])) throw ConfigError("sweep values must be strictly ascending");
    if (w.signs.empty()) throw ConfigError("sweep needs at least one core sign");
    for (int sg : w.signs)
      if (sg != 1 && sg != -1) throw ConfigError("sweep signs must be +1 or -1");
    for (const auto& [k, v] : w.thresholds)
      if (k != "residual_slope" && k != "dw_slope") throw ConfigError("unknown threshold \"" + k + "\"");
    if (w.thresholds.count("dw_slope") && !w.newton) throw ConfigError("dw_slope threshold needs \"newton\": true");
  }
}

PeriodicPotential make_potential(const PotentialSpec& p) {
  return p.kind == "cos" ? make_psi_cos(p.parameter) : make_psi_lin(p.parameter);
}

ComplexPtr build_domain(const DomainSpec& d) {
  if (d.kind == "ball") return build_ball(d.radius);
  if (d.kind == "hexagon") return build_hexagon(d.hexagon);
  return build_polygon(d.corners);
}

fs::path out_path(const ExperimentManifest& m, const std::string& name) {
  fs::create_directories(m.output.dir);
  return fs::path(m.output.dir) / name;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", x);
  return buf;
}

nlohmann::json json_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

CoreCorrector obtain_core(const ExperimentManifest& m, const PeriodicPotential& psi, std::ostream& log) {
  if (!m.core.file.empty()) {
    std::ifstream in(m.core.file);
    if (!in) throw ConfigError("cannot open core corrector file " + m.core.file);
    log << "reading core corrector " << m.core.file << '\n';
    try {
      return read_core_corrector(in, psi);
    } catch (const GeometryError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }
  log << "computing core corrector on window " << m.core.window_radius << '\n';
  const EnergyModel model{build_ball(m.core.window_radius), psi};
  CoreCorrectorOptions opt;
  opt.tol = m.solver.core_tol;
  opt.eigen_tol = m.solver.eigen_tol;
  CoreCorrector core = compute_core_corrector(model, opt);
  std::ofstream out(out_path(m, m.output.core));
  write_core_corrector(out, core);
  return core;
}

struct EquilibriumRun {
  ComplexPtr complex;
  Displacement z;
  EquilibriumReport report;
  ConfigMetrics metrics;
  double R = 0.0;
};

EquilibriumRun run_equilibrium(const ExperimentManifest& m, const PeriodicPotential& psi, const CoreCorrector& core,
                               std::ostream& log) {
  if (!psi.smooth) throw ConfigError("equilibration needs a smooth potential");
  EquilibriumRun run;
  run.complex = build_domain(m.domain);
  const DislocationConfig config(m.config);
  run.metrics = config_metrics(config, *run.complex);
  if (run.complex->kind() == DomainKind::ball) {
    run.R = m.solver.truncation_radius.value_or(default_radius_infinite(config, core));
    run.z = assemble_predictor_infinite(config, core, run.R, run.complex);
  } else {
    const BoundaryCorrector corr = solve_boundary_corrector(run.complex, config, m.solver.corrector_tol);
    run.R = m.solver.truncation_radius.value_or(default_radius_polygon(config, core, *run.complex));
    run.z = assemble_predictor_polygon(config, core, run.R, run.complex, corr);
  }
  log << "predictor on " << run.complex->num_sites() << " sites, R = " << run.R << '\n';
  const EnergyModel model{run.complex, psi};
  NewtonOptions opt;
  opt.tol = m.solver.tol;
  opt.max_iters = m.solver.max_iters;
  opt.eigen_tol = m.solver.eigen_tol;
  run.report = newton_correct(model, run.z, opt);
  log << "newton: " << run.report.newton_iters << " iterations, residual " << run.report.residual_final
      << ", lambda_min " << run.report.lambda_min << '\n';
  return run;
}

nlohmann::json metrics_json(const ConfigMetrics& c) { return {{"L", json_or_null(c.L)}, {"S", json_or_null(c.S)}}; }

}  // namespace

// Down cells at set distance L (rounded to an integer) placed symmetrically
// about the origin.
std::vector<Core> pair_at_distance(double L, const std::vector<int>& signs) {
  const int l = static_cast<int>(std::lround(L));
  if (l < 1) throw GeometryError("separation must be positive");
  const int k = (l + 2) / 2;
  const int other = l % 2 == 0 ? -k + 1 : -k;
  std::vector<Core> cores{{Cell{{k, -1}, Orientation::down}, signs[0]}};
  if (signs.size() > 1) cores.push_back({Cell{{other, -1}, Orientation::down}, signs[1]});
  return cores;
}

int hexagon_for_distance(double S) { return static_cast<int>(std::lround(S / (std::sqrt(3.0) / 2.0))) + 1; }

ExperimentManifest parse_manifest(const nlohmann::json& j) {
  ExperimentManifest m;
  try {
    if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
    if (j.contains("potential") && j.contains("psi")) throw ConfigError("give either \"potential\" or \"psi\"");
    if (j.contains("potential") || j.contains("psi")) {
      const auto& p = j.contains("psi") ? j.at("psi") : j.at("potential");
      m.potential.kind = p.value("kind", m.potential.kind);
      // kappa / lambda name the parameter of the cos / lin families
      for (const char* key : {"parameter", "kappa", "lambda"})
        if (p.contains(key)) m.potential.parameter = p.at(key).get<double>();
    }
    if (j.contains("domain")) {
      const auto& d = j.at("domain");
      m.domain.kind = d.value("kind", m.domain.kind);
      m.domain.radius = d.value("radius", m.domain.radius);
      m.domain.hexagon = d.value("hexagon", 0);
      if (d.contains("corners"))
        for (const auto& c : d.at("corners")) m.domain.corners.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    }
    if (j.contains("config"))
      for (const auto& c : j.at("config"))
        m.config.push_back({Cell{{c.at("m").get<int>(), c.at("n").get<int>()},
                                 parse_orientation(c.value("orientation", std::string("down")))},
                            c.value("sign", 1)});
    if (j.contains("core")) {
      const auto& c = j.at("core");
      m.core.window_radius = c.value("window_radius", m.core.window_radius);
      m.core.file = c.value("file", std::string());
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      m.solver.tol = s.value("tol", m.solver.tol);
      m.solver.max_iters = s.value("max_iters", m.solver.max_iters);
      m.solver.eigen_tol = s.value("eigen_tol", m.solver.eigen_tol);
      m.solver.corrector_tol = s.value("corrector_tol", m.solver.corrector_tol);
      m.solver.core_tol = s.value("core_tol", m.solver.core_tol);
      if (s.contains("truncation_radius") && !s.at("truncation_radius").is_null())
        m.solver.truncation_radius = s.at("truncation_radius").get<double>();
      m.solver.certify_eps = s.value("certify_eps", m.solver.certify_eps);
      m.solver.certify_trials = s.value("certify_trials", m.solver.certify_trials);
    }
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
      const auto& s = j.at("sweep");
      SweepSpec w;
      w.parameter = s.value("parameter", std::string());
      if (s.contains("values")) w.values = s.at("values").get<std::vector<double>>();
      w.case_id = s.value("case", w.parameter == "S" ? std::string("single_core") : std::string("two_core"));
      w.window_radius = s.value("window_radius", 0.0);
      if (s.contains("signs")) w.signs = s.at("signs").get<std::vector<int>>();
      w.newton = s.value("newton", false);
      if (s.contains("thresholds")) w.thresholds = s.at("thresholds").get<std::map<std::string, double>>();
      m.sweep = w;
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      m.output.dir = o.value("dir", m.output.dir);
      m.output.report = o.value("report", m.output.report);
      m.output.csv = o.value("csv", m.output.csv);
      m.output.snapshot = o.value("snapshot", m.output.snapshot);
      m.output.core = o.value("core", m.output.core);
    }
    m.seed = j.value("seed", m.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  validate(m);
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  return parse_manifest(j);
}

nlohmann::json to_json(const ExperimentManifest& m) {
  nlohmann::json j;
  j["potential"] = {{"kind", m.potential.kind}, {"parameter", m.potential.parameter}};
  nlohmann::json d{{"kind", m.domain.kind}};
  if (m.domain.kind == "ball") d["radius"] = m.domain.radius;
  if (m.domain.kind == "hexagon") d["hexagon"] = m.domain.hexagon;
  if (m.domain.kind == "polygon") {
    d["corners"] = nlohmann::json::array();
    for (const auto& c : m.domain.corners) d["corners"].push_back({c.m, c.n});
  }
  j["domain"] = d;
  j["config"] = cores_to_json(m.config);
  j["core"] = {{"window_radius", m.core.window_radius}, {"file", m.core.file}};
  const auto& s = m.solver;
  j["solver"] = {{"tol", s.tol},
                 {"max_iters", s.max_iters},
                 {"eigen_tol", s.eigen_tol},
                 {"corrector_tol", s.corrector_tol},
                 {"core_tol", s.core_tol},
                 {"truncation_radius", s.truncation_radius ? nlohmann::json(*s.truncation_radius) : nlohmann::json()},
                 {"certify_eps", s.certify_eps},
                 {"certify_trials", s.certify_trials}};
  if (m.sweep) {
    const auto& w = *m.sweep;
    j["sweep"] = {{"parameter", w.parameter},   {"values", w.values}, {"case", w.case_id},
                  {"window_radius", w.window_radius}, {"signs", w.signs},  {"newton", w.newton},
                  {"thresholds", w.thresholds}};
  }
  j["output"] = {{"dir", m.output.dir},
                 {"report", m.output.report},
                 {"csv", m.output.csv},
                 {"snapshot", m.output.snapshot},
                 {"core", m.output.core}};
  j["seed"] = m.seed;
  return j;
}

std::uint64_t manifest_hash(const ExperimentManifest& m) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : to_json(m).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string tool_version() { return "0.1.0"; }

int cmd_stab_check(const ExperimentManifest& m, std::ostream& log) {
  if (m.domain.kind != "ball") throw ConfigError("stab-check needs a ball domain");
  if (m.domain.radius < 16.0) throw ConfigError("window too small: radius must be at least 16");
  const PeriodicPotential psi = make_potential(m.potential);
  if (!psi.smooth) throw ConfigError("stab-check needs a smooth potential");

  std::vector<double> radii;
  if (m.domain.radius / 2.0 >= 16.0) radii.push_back(m.domain.radius / 2.0);
  radii.push_back(m.domain.radius);
  CoreCorrectorOptions opt;
  opt.tol = m.solver.core_tol;
  opt.eigen_tol = m.solver.eigen_tol;

  nlohmann::json table = nlohmann::json::array();
  CoreCorrector last;
  for (double r : radii) {
    log << "core corrector on window " << r << '\n';
    last = compute_core_corrector({build_ball(r), psi}, opt);
    table.push_back({{"window_radius", r},
                     {"lambda_d", last.lambda_d_estimate},
                     {"decay_exponent", last.decay_fit.slope},
                     {"newton_iters", last.newton_iters},
                     {"residual", last.residual}});
  }
  {
    std::ofstream out(out_path(m, m.output.core));
    write_core_corrector(out, last);
  }
  nlohmann::json rep;
  rep["command"] = "stab-check";
  rep["version"] = tool_version();
  rep["lambda_d"] = last.lambda_d_estimate;
  rep["decay_fit"] = {{"exponent", last.decay_fit.slope}, {"prefactor", last.decay_fit.prefactor}};
  rep["window_convergence"] = table;
  if (table.size() > 1) {
    const double a = table[0]["lambda_d"].get<double>();
    rep["relative_change"] = std::abs(last.lambda_d_estimate - a) / std::abs(last.lambda_d_estimate);
  }
  rep["strongly_stable"] = last.lambda_d_estimate > 0.0;
  rep["core_file"] = out_path(m, m.output.core).string();
  write_json(out_path(m, m.output.report), rep);
  log << "lambda_d = " << last.lambda_d_estimate << ", decay exponent = " << last.decay_fit.slope << '\n';
  return last.lambda_d_estimate > 0.0 ? kExitOk : kExitPrecondition;
}

int cmd_equilibrate(const ExperimentManifest& m, std::ostream& log) {
  const PeriodicPotential psi = make_potential(m.potential);
  if (!psi.smooth) throw ConfigError("equilibrate needs a smooth potential");
  const CoreCorrector core = obtain_core(m, psi, log);
  EquilibriumRun run = run_equilibrium(m, psi, core, log);
  const EnergyModel model{run.complex, psi};
  const Displacement y = run.z + run.report.w;
  const Certificate cert = certify(model, y, m.solver.certify_eps, m.solver.certify_trials, m.seed);

  const auto snap = out_path(m, m.output.snapshot);
  {
    std::ofstream out(snap);
    write_displacement(out, y);
  }
  run.report.snapshot = snap.string();
  const DislocationConfig config(m.config);
  const bool preserved = DislocationConfig(run.report.cores).cores() == config.cores();
  int net = 0;
  for (const auto& c : run.report.cores) net += c.sign;

  nlohmann::json rep;
  rep["command"] = "equilibrate";
  rep["version"] = tool_version();
  rep["manifest_hash"] = manifest_hash(m);
  rep["metrics"] = metrics_json(run.metrics);
  rep["truncation_radius"] = run.R;
  rep["equilibrium"] = run.report.to_json();
  rep["lambda_d_infinite"] = core.lambda_d_estimate;
  rep["certificate"] = {{"verdict", to_string(cert.verdict)},
                        {"lambda_min", cert.lambda_min},
                        {"worst_energy_change", json_or_null(cert.worst_energy_change)},
                        {"failed_probes", cert.failed_probes}};
  rep["cores_preserved"] = preserved;
  rep["net_burgers"] = net;
  write_json(out_path(m, m.output.report), rep);
  log << "verdict " << to_string(cert.verdict) << ", cores preserved: " << (preserved ? "yes" : "no") << '\n';
  return preserved && cert.verdict != Verdict::unstable ? kExitOk : kExitPrecondition;
}

int cmd_decay_study(const ExperimentManifest& m, std::ostream& log, int jobs) {
  if (!m.sweep) throw ConfigError("decay-study needs a sweep");
  const SweepSpec& w = *m.sweep;
  const PeriodicPotential psi = make_potential(m.potential);
  if (!psi.smooth) throw ConfigError("decay-study needs a smooth potential");
  const CoreCorrector core = obtain_core(m, psi, log);

  ComplexPtr window;
  if (w.parameter == "L") {
    const double radius = w.window_radius > 0.0 ? w.window_radius : 4.0 * w.values.back() + 16.0;
    window = build_ball(radius);
    log << "ball window " << radius << " with " << window->num_sites() << " sites\n";
  }
  std::vector<double> dw(w.values.size(), std::numeric_limits<double>::quiet_NaN());
  auto measure = [&](double value) {
    const std::size_t row =
        static_cast<std::size_t>(std::find(w.values.begin(), w.values.end(), value) - w.values.begin());
    ComplexPtr complex = window;
    Displacement z;
    if (w.parameter == "L") {
      const DislocationConfig config(pair_at_distance(value, w.signs));
      const double R = m.solver.truncation_radius.value_or(default_radius_infinite(config, core));
      z = assemble_predictor_infinite(config, core, R, complex);
    } else {
      complex = build_hexagon(hexagon_for_distance(value));
      const DislocationConfig config({{origin_cell(), w.signs.front()}});
      const BoundaryCorrector corr = solve_boundary_corrector(complex, config, m.solver.corrector_tol);
      const double R = m.solver.truncation_radius.value_or(default_radius_polygon(config, core, *complex));
      z = assemble_predictor_polygon(config, core, R, complex, corr);
    }
    const EnergyModel model{complex, psi};
    const double residual = dual_norm(model, gradient(model, z));
    if (w.newton) {
      NewtonOptions opt;
      opt.tol = m.solver.tol;
      opt.max_iters = m.solver.max_iters;
      opt.eigen_tol = m.solver.eigen_tol;
      opt.compute_ift = false;
      dw[row] = newton_correct(model, z, opt).dw_norm;
    }
    return residual;
  };
  const DecayTable table = residual_decay_data(w.values, measure, jobs);

  std::vector<double> xs, ys;
  std::vector<double> dw_running(w.values.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].ok && std::isfinite(dw[i])) {
      xs.push_back(table.rows[i].parameter);
      ys.push_back(dw[i]);
    }
    if (xs.size() >= 2)
      dw_running[i] = fit_power_law(Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                                    Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size())))
                          .slope;
  }
  const double dw_slope = dw_running.back();

  const auto csv_path = out_path(m, m.output.csv);
  std::ofstream csv(csv_path, std::ios::binary);
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(manifest_hash(m)));
  csv << "# antiplane " << tool_version() << " manifest-fnv1a=" << hash << '\n';
  csv << "case_id,parameter,residual,slope_running,dw_norm,dw_slope_running,status\n";
  bool failed = false;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    std::string status = "ok";
    if (!r.ok) {
      failed = true;
      status = "failed: " + r.error;
      for (char& ch : status)
        if (ch == ',' || ch == '\n') ch = ';';
      log << "row " << r.parameter << " failed: " << r.error << '\n';
    }
    csv << w.case_id << ',' << fmt(r.parameter) << ',' << fmt(r.ok ? r.residual : NAN) << ',' << fmt(r.slope_running)
        << ',' << fmt(dw[i]) << ',' << fmt(dw_running[i]) << ',' << status << '\n';
  }
  csv.close();

  bool met = true;
  nlohmann::json checks = nlohmann::json::object();
  for (const auto& [name, thr] : w.thresholds) {
    const double slope = name == "residual_slope" ? table.slope : dw_slope;
    const bool ok = std::isfinite(slope) && slope <= thr;
    met = met && ok;
    checks[name] = {{"slope", json_or_null(slope)}, {"threshold", thr}, {"met", ok}};
  }
  nlohmann::json rep;
  rep["command"] = "decay-study";
  rep["version"] = tool_version();
  rep["manifest_hash"] = hash;
  rep["residual_slope"] = json_or_null(table.slope);
  rep["dw_slope"] = json_or_null(dw_slope);
  rep["thresholds"] = checks;
  rep["csv"] = csv_path.string();
  write_json(out_path(m, m.output.report), rep);
  log << "residual slope " << table.slope << (w.newton ? ", corrector slope " + std::to_string(dw_slope) : "") << '\n';
  if (failed) return kExitSolver;
  return met ? kExitOk : kExitPrecondition;
}

int cmd_instability_demo(const ExperimentManifest& m, std::ostream& log) {
  int net = 0;
  for (const auto& c : m.config) net += c.sign;
  if (net != 0) throw ConfigError("witness requires balanced configuration");
  nlohmann::json rep;
  rep["command"] = "instability-demo";
  rep["version"] = tool_version();
  if (m.config.empty()) {
    rep["energy_gap"] = 0.0;
    rep["tail_bound"] = 0.0;
    rep["degenerate"] = true;
    write_json(out_path(m, m.output.report), rep);
    log << "homogeneous configuration: gap 0 (degenerate)\n";
    return kExitOk;
  }
  const PeriodicPotential psi = make_potential(m.potential);
  if (!psi.smooth) throw ConfigError("instability-demo needs a smooth potential");
  const CoreCorrector core = obtain_core(m, psi, log);
  EquilibriumRun run = run_equilibrium(m, psi, core, log);
  const EnergyModel model{run.complex, psi};
  const Displacement y = run.z + run.report.w;
  const InstabilityWitness wit = global_instability_witness(model, y);
  const Certificate cert = certify(model, y, m.solver.certify_eps, m.solver.certify_trials, m.seed);
  {
    std::ofstream out(out_path(m, m.output.snapshot));
    write_displacement(out, y);
  }
  run.report.snapshot = out_path(m, m.output.snapshot).string();
  rep["metrics"] = metrics_json(run.metrics);
  rep["equilibrium"] = run.report.to_json();
  rep["certificate"] = {{"verdict", to_string(cert.verdict)}, {"lambda_min", cert.lambda_min}};
  rep["energy_gap"] = wit.energy_gap;
  rep["tail_bound"] = wit.tail_bound;
  rep["tail_mismatch"] = wit.tail_mismatch;
  rep["pairs"] = wit.pairs;
  rep["degenerate"] = wit.degenerate;
  const bool certified = wit.energy_gap + wit.tail_bound < 0.0;
  rep["globally_unstable"] = certified;
  write_json(out_path(m, m.output.report), rep);
  log << "energy gap " << wit.energy_gap << ", tail bound " << wit.tail_bound << '\n';
  return certified ? kExitOk : kExitPrecondition;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anti-plane screw dislocation equilibria on the triangular lattice", "antiplane"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());
  std::string manifest_path, out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::vector<CLI::App*> subs;
  for (const char* name : {"stab-check", "equilibrate", "decay-study", "instability-demo"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--manifest", manifest_path, "experiment manifest (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "parallel sweep rows")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--tol", tol, "Newton residual tolerance")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }
  std::vector<const char*> argv{"antiplane"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    ExperimentManifest m = load_manifest(manifest_path);
    if (!out_dir.empty()) m.output.dir = out_dir;
    if (seed) m.seed = *seed;
    if (tol) m.solver.tol = *tol;
    if (subs[0]->parsed()) return cmd_stab_check(m, out);
    if (subs[1]->parsed()) return cmd_equilibrate(m, out);
    if (subs[2]->parsed()) return cmd_decay_study(m, out, jobs);
    return cmd_instability_demo(m, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GeometryError& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const InstabilityError& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace antiplane
