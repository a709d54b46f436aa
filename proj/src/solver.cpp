#include "antiplane/solver.hpp"

#include "antiplane/elasticity.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace antiplane {

namespace {

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  return qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

double dense_min_eigenvalue(const SparseMatrix& h, const SparseMatrix& l) {
  const Eigen::MatrixXd hd(h);
  const Eigen::MatrixXd ld(l);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(hd, ld, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");
  return es.eigenvalues()[0];
}

}  // namespace

double dual_norm(const EnergyModel& model, const Eigen::VectorXd& residual) {
  const auto& c = *model.complex;
  const Eigen::VectorXd r = restrict_to_dofs(c, residual);
  if (r.size() == 0 || r.norm() == 0.0) return 0.0;
  const SparseMatrix l = laplacian_matrix(c);
  Eigen::VectorXd v;
  conjugate_gradient(l, r, v, 1e-10, std::max<int>(2000, 10 * static_cast<int>(r.size())));
  return std::sqrt(std::max(0.0, r.dot(v)));
}

RieszMap::RieszMap(const LatticeComplex& complex) : complex_(&complex), factor_(laplacian_matrix(complex)) {
  if (!factor_.positive_definite()) throw SolverError("bond Laplacian is singular on the free sites");
}

Eigen::VectorXd RieszMap::representative(const Eigen::VectorXd& residual) const {
  return extend_from_dofs(*complex_, factor_.solve(restrict_to_dofs(*complex_, residual)));
}

double RieszMap::dual_norm(const Eigen::VectorXd& residual) const {
  const Eigen::VectorXd r = restrict_to_dofs(*complex_, residual);
  if (r.size() == 0) return 0.0;
  return std::sqrt(std::max(0.0, r.dot(factor_.solve(r))));
}

nlohmann::json cores_to_json(const std::vector<Core>& cores) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cores)
    arr.push_back({{"m", c.cell.anchor.m},
                   {"n", c.cell.anchor.n},
                   {"orientation", c.cell.orientation == Orientation::up ? "up" : "down"},
                   {"sign", c.sign}});
  return arr;
}

nlohmann::json EquilibriumReport::to_json() const {
  auto finite_or_null = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return nullptr;
  };
  nlohmann::json j;
  j["dw_norm"] = dw_norm;
  j["residual_initial"] = residual_initial;
  j["residual_final"] = residual_final;
  j["lambda_min"] = lambda_min;
  j["strongly_stable"] = strongly_stable();
  j["cores"] = cores_to_json(cores);
  j["newton_iters"] = newton_iters;
  j["residual_history"] = residual_history;
  j["ift"] = {{"mu", finite_or_null(ift.mu)},
              {"r", ift.r},
              {"M", ift.M},
              {"ratio", finite_or_null(ift.ratio())}};
  if (!snapshot.empty()) j["snapshot"] = snapshot;
  return j;
}

EquilibriumReport newton_correct(const EnergyModel& model, const Displacement& z, const NewtonOptions& opt) {
  if (!model.potential.smooth) throw std::invalid_argument("Newton correction needs a smooth potential");
  const auto& c = *model.complex;
  const RieszMap riesz(c);
  auto residual = [&](const Displacement& y) { return riesz.dual_norm(gradient(model, y)); };

  EquilibriumReport rep;
  Displacement y = z;
  double r = residual(y);
  rep.residual_initial = r;
  rep.residual_history.push_back(r);
  rep.ift.r = r;
  rep.ift.M = model.potential.d3_bound;
  rep.ift.mu = std::numeric_limits<double>::quiet_NaN();
  if (opt.compute_ift) {
    try {
      rep.ift.mu = min_eigenvalue(model, z, opt.eigen_tol);
    } catch (const SolverError&) {
    }
  }

  CholeskyFactor hf;
  while (r > opt.tol) {
    if (rep.newton_iters >= opt.max_iters)
      throw SolverError("Newton did not converge within " + std::to_string(opt.max_iters) + " iterations", r);
    if (!hf.factorize(hessian_matrix(model, y))) throw SolverError("left stability basin", r);
    const Eigen::VectorXd step = extend_from_dofs(c, -hf.solve(restrict_to_dofs(c, gradient(model, y))));
    double t = 1.0;
    while (true) {
      Displacement trial(y.complex(), y.values() + t * step);
      const double rt = residual(trial);
      if (rt <= (1.0 - 1e-4 * t) * r) {
        y = std::move(trial);
        r = rt;
        break;
      }
      t *= 0.5;
      if (t < 1e-10) throw SolverError("Newton line search failed", r);
    }
    rep.residual_history.push_back(r);
    ++rep.newton_iters;
  }

  rep.residual_final = r;
  rep.w = Displacement(z.complex(), y.values() - z.values(), z.anchored() && c.clamped()[static_cast<std::size_t>(c.anchor())]);
  rep.dw_norm = finite_difference(rep.w).norm2();
  rep.lambda_min = min_eigenvalue(model, y, opt.eigen_tol);
  rep.cores = detect_cores(bond_length_form(y));
  return rep;
}

double min_eigenvalue(const EnergyModel& model, const Displacement& y, double tol, std::uint64_t seed) {
  if (!model.potential.smooth) throw std::invalid_argument("eigenvalue estimate needs a smooth potential");
  const auto& c = *model.complex;
  const SparseMatrix h = hessian_matrix(model, y);
  const SparseMatrix l = laplacian_matrix(c);
  const Eigen::Index n = h.rows();
  if (n == 0) throw SolverError("no free degrees of freedom");
  if (n <= 400) return dense_min_eigenvalue(h, l);

  const Eigen::Index block = 4;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);

  // shift below the spectrum: H - sigma L positive definite
  const double scale = std::max(std::abs(model.potential.d2(0.0)), 1e-12);
  double sigma = 0.0;
  CholeskyFactor factor;
  for (int k = 0;; ++k) {
    const SparseMatrix shifted = h - sigma * l;
    if (factor.factorize(shifted)) break;
    if (k >= 12) throw SolverError("could not find a shift below the spectrum");
    sigma = -scale * std::ldexp(0.25, k);
  }

  double theta = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= 400; ++it) {
    const Eigen::MatrixXd q = orthonormalize(factor.solve(Eigen::MatrixXd(l * x)));
    const Eigen::MatrixXd a = q.transpose() * (h * q);
    const Eigen::MatrixXd b = q.transpose() * (l * q);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), 0.5 * (b + b.transpose()));
    if (es.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz step failed");
    x = q * es.eigenvectors();
    const double next = es.eigenvalues()[0];
    if (it >= 3 && std::abs(next - theta) <= tol * std::max(1.0, std::abs(next))) return next;
    theta = next;
    if (it == 4 || it == 12) {
      // move the shift towards the Ritz value; a failed factorization means
      // the trial shift passed the smallest eigenvalue
      for (double f : {0.9, 0.5}) {
        const double trial = sigma + f * (theta - sigma);
        CholeskyFactor candidate;
        if (candidate.factorize(h - trial * l)) {
          sigma = trial;
          factor = std::move(candidate);
          break;
        }
      }
    }
  }
  throw SolverError("eigenvalue iteration did not converge");
}

InstabilityWitness global_instability_witness(const EnergyModel& model, const Displacement& equilibrium) {
  const auto& c = *model.complex;
  const ComplexPtr& cp = model.complex;
  InstabilityWitness out;
  const auto cores = detect_cores(bond_length_form(equilibrium));
  int net = 0;
  for (const auto& core : cores) net += core.sign;
  if (net != 0) throw std::invalid_argument("witness requires balanced configuration");
  if (cores.empty()) {
    out.degenerate = true;
    out.witness = Displacement::zero(cp);
    return out;
  }

  // greedy nearest pairing of + and - cores
  std::vector<Core> plus, minus;
  for (const auto& core : cores) (core.sign > 0 ? plus : minus).push_back(core);
  std::vector<std::pair<Core, Core>> pairs;
  while (!plus.empty()) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plus.size(); ++i)
      for (std::size_t j = 0; j < minus.size(); ++j) {
        const double d = (plus[i].cell.barycenter() - minus[j].cell.barycenter()).norm();
        if (d < best) best = d, bi = i, bj = j;
      }
    if (minus.empty()) throw std::runtime_error("core pairing failed");
    pairs.emplace_back(plus[bi], minus[bj]);
    plus.erase(plus.begin() + static_cast<std::ptrdiff_t>(bi));
    minus.erase(minus.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  out.pairs = static_cast<int>(pairs.size());

  const auto& sites = c.sites();
  const auto& pos = c.positions();
  const auto n = static_cast<Eigen::Index>(c.num_sites());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  double max_sep = 0.0;
  for (const auto& [p, m] : pairs) {
    const Automorphism gp(p.cell), gm(m.cell);
    const ContinuumField dip = dipole_field(p.cell.barycenter(), m.cell.barycenter());
    max_sep = std::max(max_sep, (p.cell.barycenter() - m.cell.barycenter()).norm());
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto s = sites[static_cast<std::size_t>(i)];
      const double vi = dip.value(pos[static_cast<std::size_t>(i)]);
      v[i] += vi;
      t[i] += hat_y(gp.forward(s).position()) - hat_y(gm.forward(s).position()) - vi;
    }
  }
  // t differs from an integer field by a constant
  Eigen::VectorXd yc = (t.array() - t[c.anchor()]).round();
  out.witness = Displacement(cp, yc, true);
  out.energy_gap = energy_difference(model, out.witness, equilibrium);

  const double tail_dist = std::max(10.0, 2.0 * max_sep);
  for (const auto& b : c.bonds()) {
    const Vec2 mid = 0.5 * (pos[static_cast<std::size_t>(b.tail)] + pos[static_cast<std::size_t>(b.head)]);
    bool far = true;
    for (const auto& core : cores)
      if ((mid - core.cell.barycenter()).norm() < tail_dist) {
        far = false;
        break;
      }
    if (!far) continue;
    const double d = (equilibrium[b.head] - equilibrium[b.tail]) - (v[b.head] - v[b.tail]);
    out.tail_mismatch = std::max(out.tail_mismatch, std::abs(wrap_half(d)));
  }
  if (out.tail_mismatch > 0.25) throw std::runtime_error("equilibrium tails do not match the dipole field");

  if (c.kind() == DomainKind::ball) {
    // energy of the dipole field outside the window, |grad v| <= d / (2 pi (r - d/2)^2)
    const double kappa = model.potential.d2(0.0);
    double sum = 0.0;
    for (const auto& [p, m] : pairs) {
      const Vec2 xp = p.cell.barycenter(), xm = m.cell.barycenter();
      const double d = (xp - xm).norm();
      const double a = 0.5 * d;
      const double r0 = c.radius() - 0.5 * (xp + xm).norm() - 1.0;
      const double t0 = r0 - a;
      if (t0 <= 0.0) throw GeometryError("window too small for the tail bound");
      sum += 2.0 * 0.5 * kappa * std::sqrt(3.0) * d * d / (2.0 * M_PI) *
             (1.0 / (2.0 * t0 * t0) + a / (3.0 * t0 * t0 * t0));
    }
    out.tail_bound = static_cast<double>(pairs.size()) * sum;
  }
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::strongly_stable:
      return "strongly_stable";
    case Verdict::unstable:
      return "unstable";
    case Verdict::indeterminate:
      break;
  }
  return "indeterminate";
}

Certificate certify(const EnergyModel& model, const Displacement& y, double eps, int trials, std::uint64_t seed) {
  const auto& c = *model.complex;
  Certificate cert;
  cert.lambda_min = min_eigenvalue(model, y);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  cert.worst_energy_change = std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    Eigen::VectorXd u(c.num_dofs());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
    Displacement probe(model.complex, extend_from_dofs(c, u));
    const double norm = finite_difference(probe).norm2();
    if (norm == 0.0) continue;
    probe *= eps / norm;
    const double de = energy_difference(model, y + probe, y);
    cert.worst_energy_change = std::min(cert.worst_energy_change, de);
    if (de < -1e-12) ++cert.failed_probes;
  }
  if (cert.lambda_min <= 0.0)
    cert.verdict = Verdict::unstable;
  else if (cert.failed_probes == 0)
    cert.verdict = Verdict::strongly_stable;
  else
    cert.verdict = Verdict::indeterminate;
  return cert;
}

}  // namespace antiplane
