#include "antiplane/predictor.hpp"

#include "antiplane/solver.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace antiplane {

namespace {

// Every lattice site within `radius` of `center` must belong to `c`.
void require_disk(const LatticeComplex& c, const Vec2& center, double radius, const char* what) {
  const double h = std::sqrt(3.0) / 2.0;
  const int n_lo = static_cast<int>(std::floor((center.y() - radius) / h)) - 2;
  const int n_hi = static_cast<int>(std::ceil((center.y() + radius) / h)) + 2;
  for (int n = n_lo; n <= n_hi; ++n) {
    const int m_lo = static_cast<int>(std::floor(center.x() - radius - 0.5 * n)) - 2;
    const int m_hi = static_cast<int>(std::ceil(center.x() + radius - 0.5 * n)) + 2;
    for (int m = m_lo; m <= m_hi; ++m) {
      const LatticeSite s{m, n};
      if ((s.position() - center).norm() <= radius && !c.contains(s)) throw GeometryError(what);
    }
  }
}

double power_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_power_law(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                       Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())))
      .slope;
}

}  // namespace

double CoreCorrector::at(LatticeSite s) const {
  const int i = u.complex()->index_of(s);
  return i < 0 ? 0.0 : u[i];
}

Displacement hat_y_on(const ComplexPtr& complex) {
  const auto& pos = complex->positions();
  Eigen::VectorXd v(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) v[static_cast<Eigen::Index>(i)] = hat_y(pos[i]);
  return {complex, std::move(v)};
}

DecaySample corrector_decay(const Displacement& u, double dmin, double dmax) {
  const auto& c = *u.complex();
  const Shape c0 = shape_of(origin_cell());
  std::map<int, std::pair<double, double>> shells;  // shell -> (distance, max |Du|)
  for (std::size_t k = 0; k < c.num_bonds(); ++k) {
    const double d = dist(c0, shape_of(c.bond(static_cast<int>(k))));
    if (d < dmin || d > dmax) continue;
    const auto& b = c.bonds()[k];
    const double du = std::abs(u[b.head] - u[b.tail]);
    auto& shell = shells[static_cast<int>(std::floor(d))];
    if (du > shell.second) shell = {d, du};
  }
  DecaySample out;
  for (const auto& [k, s] : shells) {
    if (s.second <= 0.0) continue;
    out.distance.push_back(s.first);
    out.magnitude.push_back(s.second);
  }
  return out;
}

CoreCorrector compute_core_corrector(const EnergyModel& model, const CoreCorrectorOptions& opt) {
  if (!model.potential.smooth) throw std::invalid_argument("core corrector needs a smooth potential");
  const auto& c = *model.complex;
  if (c.kind() != DomainKind::ball) throw GeometryError("core corrector needs a ball window");
  if (c.radius() < 16.0) throw GeometryError("window too small (radius must be at least 16)");

  const Displacement yhat = hat_y_on(model.complex);
  const RieszMap riesz(c);
  const SparseMatrix lap = laplacian_matrix(c);
  const double scale = std::abs(model.potential.d2(0.0));

  Displacement y = yhat;
  double r = riesz.dual_norm(gradient(model, y));
  int iters = 0;
  CholeskyFactor factor;
  while (r > opt.tol) {
    if (iters >= opt.max_iters) throw InstabilityError("no stable core found (Newton did not converge)");
    const SparseMatrix h = hessian_matrix(model, y);
    // Levenberg shift while the Hessian is indefinite
    double mu = 0.0;
    while (!factor.factorize(mu == 0.0 ? h : SparseMatrix(h + mu * lap))) {
      mu = mu == 0.0 ? 1e-3 * scale : 4.0 * mu;
      if (mu > 1e3 * scale) throw InstabilityError("no stable core found (Hessian shift failed)");
    }
    const Eigen::VectorXd g = restrict_to_dofs(c, gradient(model, y));
    const Eigen::VectorXd step = -factor.solve(g);
    const Eigen::VectorXd step_full = extend_from_dofs(c, step);
    const double slope = g.dot(step);
    double t = 1.0;
    while (true) {
      Displacement trial(y.complex(), y.values() + t * step_full);
      const double de = energy_difference(model, trial, y);
      const double rt = riesz.dual_norm(gradient(model, trial));
      if (de <= 1e-4 * t * slope || (mu == 0.0 && rt < (1.0 - 1e-4 * t) * r)) {
        y = std::move(trial);
        r = rt;
        break;
      }
      t *= 0.5;
      if (t < 1e-10) throw InstabilityError("no stable core found (line search failed)");
    }
    ++iters;
  }

  CoreCorrector core;
  core.potential = model.potential;
  core.u = Displacement(model.complex, y.values() - yhat.values());
  core.window_radius = c.radius();
  core.residual = r;
  core.newton_iters = iters;
  core.lambda_d_estimate = min_eigenvalue(model, y, opt.eigen_tol);
  if (!(core.lambda_d_estimate > 0.0))
    throw InstabilityError("core unstable (lambda_d = " + std::to_string(core.lambda_d_estimate) + ")");
  const DecaySample ds = corrector_decay(core.u, opt.fit_min, opt.fit_max_fraction * c.radius());
  if (ds.distance.size() >= 2)
    core.decay_fit = fit_power_law(Eigen::Map<const Eigen::VectorXd>(ds.distance.data(), static_cast<Eigen::Index>(ds.distance.size())),
                                   Eigen::Map<const Eigen::VectorXd>(ds.magnitude.data(), static_cast<Eigen::Index>(ds.magnitude.size())));
  return core;
}

void write_core_corrector(std::ostream& out, const CoreCorrector& core) {
  out << std::setprecision(17) << "# core-corrector potential=" << core.potential.kind
      << " parameter=" << core.potential.parameter << " window_radius=" << core.window_radius
      << " lambda_d=" << core.lambda_d_estimate << " decay_exponent=" << core.decay_fit.slope
      << " decay_prefactor=" << core.decay_fit.prefactor << " residual=" << core.residual
      << " newton_iters=" << core.newton_iters << '\n';
  write_displacement(out, core.u);
}

CoreCorrector read_core_corrector(std::istream& in, const PeriodicPotential& potential) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# core-corrector", 0) != 0)
    throw std::runtime_error("not a core corrector file");
  std::map<std::string, std::string> kv;
  std::istringstream hs(header.substr(16));
  for (std::string tok; hs >> tok;) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"potential", "parameter", "window_radius", "lambda_d"})
    if (!kv.count(key)) throw std::runtime_error(std::string("core corrector header lacks ") + key);
  if (kv["potential"] != potential.kind || std::abs(std::stod(kv["parameter"]) - potential.parameter) > 1e-12)
    throw std::runtime_error("core corrector was computed for a different potential");
  CoreCorrector core;
  core.potential = potential;
  core.window_radius = std::stod(kv["window_radius"]);
  core.lambda_d_estimate = std::stod(kv["lambda_d"]);
  if (kv.count("decay_exponent")) core.decay_fit.slope = std::stod(kv["decay_exponent"]);
  if (kv.count("decay_prefactor")) core.decay_fit.prefactor = std::stod(kv["decay_prefactor"]);
  if (kv.count("residual")) core.residual = std::stod(kv["residual"]);
  if (kv.count("newton_iters")) core.newton_iters = std::stoi(kv["newton_iters"]);
  core.u = read_displacement(in, build_ball(core.window_radius));
  return core;
}

double eta(double t) {
  if (t <= 0.75) return 1.0;
  if (t >= 1.0) return 0.0;
  const double s = (t - 0.75) / 0.25;
  return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

double disk_triangle_integral(const std::array<Vec2, 3>& tri, const std::array<double, 3>& values, const Vec2& center,
                              double rho) {
  std::array<Vec2, 3> p{tri[0] - center, tri[1] - center, tri[2] - center};
  Eigen::Matrix2d j;
  j.col(0) = p[1] - p[0];
  j.col(1) = p[2] - p[0];
  const Vec2 b = j.transpose().inverse() * Vec2(values[1] - values[0], values[2] - values[0]);
  const double a = values[0] - b.dot(p[0]);

  // Green: integral of a + b.x over a region = closed integral of P dy,
  // P = a x + b1 x^2 / 2 + b2 x y
  auto pfun = [&](const Vec2& x) { return a * x.x() + 0.5 * b.x() * x.x() * x.x() + b.y() * x.x() * x.y(); };
  auto segment = [&](const Vec2& s, const Vec2& e) {
    const double g = 0.5 / std::sqrt(3.0);
    const Vec2 d = e - s;
    return 0.5 * d.y() * (pfun(s + (0.5 - g) * d) + pfun(s + (0.5 + g) * d));
  };
  auto arc_primitive = [&](double th) {
    const double c = std::cos(th), s = std::sin(th);
    return a * rho * rho * (0.5 * th + 0.25 * std::sin(2.0 * th)) +
           0.5 * b.x() * rho * rho * rho * (s - s * s * s / 3.0) - b.y() * rho * rho * rho * c * c * c / 3.0;
  };

  struct Event {
    int edge;
    double t;
    bool entry;
    double angle;
  };
  std::vector<Event> events;
  double total = 0.0;
  bool any_segment = false;
  for (int i = 0; i < 3; ++i) {
    const Vec2& s = p[static_cast<std::size_t>(i)];
    const Vec2 d = p[static_cast<std::size_t>((i + 1) % 3)] - s;
    const double qa = d.dot(d), qb = 2.0 * s.dot(d), qc = s.dot(s) - rho * rho;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    const double t1 = (-qb - sq) / (2.0 * qa), t2 = (-qb + sq) / (2.0 * qa);
    const double lo = std::max(0.0, t1), hi = std::min(1.0, t2);
    if (hi <= lo) continue;
    any_segment = true;
    total += segment(s + lo * d, s + hi * d);
    if (t1 > 0.0) {
      const Vec2 x = s + t1 * d;
      events.push_back({i, t1, true, std::atan2(x.y(), x.x())});
    }
    if (t2 < 1.0) {
      const Vec2 x = s + t2 * d;
      events.push_back({i, t2, false, std::atan2(x.y(), x.x())});
    }
  }
  if (!any_segment) {
    // disk inside the triangle, or disjoint
    for (int i = 0; i < 3; ++i) {
      const Vec2& s = p[static_cast<std::size_t>(i)];
      const Vec2 e = p[static_cast<std::size_t>((i + 1) % 3)] - s;
      if (e.x() * (-s.y()) - e.y() * (-s.x()) < 0.0) return 0.0;
    }
    return arc_primitive(2.0 * M_PI) - arc_primitive(0.0);
  }
  std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
    return x.edge != y.edge ? x.edge < y.edge : x.t < y.t;
  });
  const std::size_t ne = events.size();
  for (std::size_t k = 0; k < ne; ++k) {
    if (events[k].entry) continue;
    std::size_t m = (k + 1) % ne;
    while (!events[m].entry && m != k) m = (m + 1) % ne;
    if (!events[m].entry) throw std::logic_error("unbalanced disk-triangle intersection");
    double th0 = events[k].angle, th1 = events[m].angle;
    while (th1 <= th0) th1 += 2.0 * M_PI;
    total += arc_primitive(th1) - arc_primitive(th0);
  }
  return total;
}

double annulus_mean(const Displacement& u, const Vec2& center, double R) {
  const auto& c = *u.complex();
  require_disk(c, center, R + 1.0, "window too small to contain the truncation ball");
  const double r = 0.5 * R + 1.0;
  const auto& pos = c.positions();
  CompensatedSum integral, area;
  for (const auto& cell : c.cells()) {
    const std::array<Vec2, 3> tri{pos[static_cast<std::size_t>(cell.sites[0])], pos[static_cast<std::size_t>(cell.sites[1])],
                                  pos[static_cast<std::size_t>(cell.sites[2])]};
    const Vec2 bc = (tri[0] + tri[1] + tri[2]) / 3.0;
    const double dc = (bc - center).norm();
    if (dc > R + 1.0 || dc < r - 1.0) continue;
    const std::array<double, 3> vals{u[cell.sites[0]], u[cell.sites[1]], u[cell.sites[2]]};
    const std::array<double, 3> ones{1.0, 1.0, 1.0};
    integral.add(disk_triangle_integral(tri, vals, center, R));
    integral.add(-disk_triangle_integral(tri, vals, center, r));
    area.add(disk_triangle_integral(tri, ones, center, R));
    area.add(-disk_triangle_integral(tri, ones, center, r));
  }
  return integral.value() / area.value();
}

Displacement truncate(const Displacement& u, const TruncationParams& params) {
  if (!(params.R > 2.0)) throw std::invalid_argument("truncation radius must exceed 2");
  const Vec2 xc = params.center_cell.barycenter();
  const double a = annulus_mean(u, xc, params.R);
  const auto& pos = u.complex()->positions();
  Eigen::VectorXd v(u.values().size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double e = eta((pos[static_cast<std::size_t>(i)] - xc).norm() / params.R);
    v[i] = e == 0.0 ? 0.0 : e * (u[static_cast<int>(i)] - a);
  }
  return {u.complex(), std::move(v)};
}

double default_radius_infinite(const DislocationConfig& config, const CoreCorrector& core) {
  const double l = config.separation();
  if (std::isfinite(l)) return l / 5.0;
  return core.window_radius - 2.0;
}

double default_radius_polygon(const DislocationConfig& config, const CoreCorrector& core, const LatticeComplex& polygon) {
  const ConfigMetrics m = config_metrics(config, polygon);
  double r = std::sqrt(m.S);
  if (std::isfinite(m.L)) r = std::min(r, m.L / 5.0);
  return std::min(r, core.window_radius - 2.0);
}

namespace {

Eigen::VectorXd lattice_sum(const DislocationConfig& config, const CoreCorrector& core, double R,
                            const LatticeComplex& target) {
  // R = L_D / 5 <= 2 means the cores sit closer than the construction allows
  if (!(R > 2.0)) throw GeometryError("cores too close (truncation radius must exceed 2)");
  const auto& cores = config.cores();
  for (std::size_t i = 0; i < cores.size(); ++i) {
    if (target.cell_index(cores[i].cell) < 0) throw GeometryError("core cell outside the domain");
    for (std::size_t j = i + 1; j < cores.size(); ++j)
      if ((cores[i].cell.barycenter() - cores[j].cell.barycenter()).norm() < 2.0 * R)
        throw GeometryError("cores too close");
  }
  for (const auto& core_i : cores) {
    const Vec2 xc = core_i.cell.barycenter();
    if (target.kind() == DomainKind::ball) {
      if (xc.norm() + R > target.radius()) throw GeometryError("truncation ball leaves the window");
    } else {
      require_disk(target, xc, R, "truncation ball leaves the polygon");
    }
  }
  const Displacement pu = truncate(core.u, {R, origin_cell()});
  const auto& cw = *pu.complex();
  const auto& sites = target.sites();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sites.size()));
  for (const auto& core_i : cores) {
    const Automorphism g(core_i.cell);
    const double s = core_i.sign;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const LatticeSite gs = g.forward(sites[i]);
      const Vec2 x = gs.position();
      double v = hat_y(x);
      if (x.norm() < R) {
        const int k = cw.index_of(gs);
        if (k >= 0) v += pu[k];
      }
      z[static_cast<Eigen::Index>(i)] += s * v;
    }
  }
  return z;
}

}  // namespace

Displacement assemble_predictor_infinite(const DislocationConfig& config, const CoreCorrector& core, double R,
                                         const ComplexPtr& window) {
  Eigen::VectorXd z = lattice_sum(config, core, R, *window);
  z.array() -= z[window->anchor()];
  z[window->anchor()] = 0.0;
  return {window, std::move(z), true};
}

Displacement assemble_predictor_polygon(const DislocationConfig& config, const CoreCorrector& core, double R,
                                        const ComplexPtr& polygon, const BoundaryCorrector& corr) {
  if (polygon->kind() != DomainKind::polygon) throw GeometryError("polygon predictor needs a polygon complex");
  if (corr.config.cores() != config.cores()) throw GeometryError("boundary corrector does not match the configuration");
  if (!corr.complex || corr.complex->sites() != polygon->sites())
    throw GeometryError("boundary corrector was computed on a different polygon");
  Eigen::VectorXd z = lattice_sum(config, core, R, *polygon) + corr.nodal;
  z.array() -= z[polygon->anchor()];
  z[polygon->anchor()] = 0.0;
  return {polygon, std::move(z), true};
}

DecayTable residual_decay_data(const std::vector<double>& values, const std::function<double(double)>& measure,
                               int jobs) {
  if (values.size() < 3) throw std::invalid_argument("sweep needs at least three values");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1])) throw std::invalid_argument("sweep values must be strictly ascending");

  DecayTable table;
  table.rows.resize(values.size());
  auto run = [&](std::size_t i) {
    auto& row = table.rows[i];
    row.parameter = values[i];
    try {
      row.residual = measure(values[i]);
      if (!(row.residual > 0.0) || !std::isfinite(row.residual)) throw std::runtime_error("non-positive residual");
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < values.size();) run(i);
      });
    for (auto& t : pool) t.join();
  }

  std::vector<double> xs, ys;
  for (auto& row : table.rows) {
    if (row.ok) {
      xs.push_back(row.parameter);
      ys.push_back(row.residual);
    }
    row.slope_running = power_slope(xs, ys);
  }
  table.slope = power_slope(xs, ys);
  return table;
}

}  // namespace antiplane
