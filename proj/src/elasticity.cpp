#include "antiplane/elasticity.hpp"

#include "antiplane/energy.hpp"
#include "antiplane/linalg.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace antiplane {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

long icross(LatticeSite o, LatticeSite a, LatticeSite b) {
  return static_cast<long>(a.m - o.m) * (b.n - o.n) - static_cast<long>(a.n - o.n) * (b.m - o.m);
}

// Ear clipping of a simple CCW lattice polygon, exact in (m, n) coordinates.
// Collinear vertices are never clipped, so edges of neighbouring lattice
// cells stay conforming.
void ear_clip(std::vector<int> poly, const std::vector<LatticeSite>& sites, std::vector<std::array<int, 3>>& out) {
  auto at = [&](int i) { return sites[static_cast<std::size_t>(i)]; };
  while (poly.size() > 3) {
    const std::size_t n = poly.size();
    bool clipped = false;
    for (std::size_t i = 0; i < n && !clipped; ++i) {
      const int p = poly[(i + n - 1) % n], c = poly[i], q = poly[(i + 1) % n];
      if (icross(at(p), at(c), at(q)) <= 0) continue;
      bool blocked = false;
      for (int v : poly) {
        if (v == p || v == c || v == q) continue;
        if (icross(at(p), at(c), at(v)) >= 0 && icross(at(c), at(q), at(v)) >= 0 && icross(at(q), at(p), at(v)) >= 0) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      out.push_back({p, c, q});
      poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
    }
    if (!clipped) throw GeometryError("sliver region could not be triangulated");
  }
  if (poly.size() == 3 && icross(at(poly[0]), at(poly[1]), at(poly[2])) > 0) out.push_back({poly[0], poly[1], poly[2]});
}

// Mean over [P, Q] of (1/2pi) log|x - c|.
double mean_log(const Vec2& p, const Vec2& q, const Vec2& c) {
  const Vec2 e = q - p;
  const double h = e.norm();
  const Vec2 t = e / h;
  const double t0 = (c - p).dot(t);
  const double d = std::abs(cross(t, c - p));
  auto anti = [d](double u) {
    const double r2 = u * u + d * d;
    const double log_term = r2 > 0.0 ? u * std::log(r2) : 0.0;
    const double atan_term = d > 0.0 ? 2.0 * d * std::atan(u / d) : 0.0;
    return 0.5 * (log_term - 2.0 * u + atan_term);
  };
  return (anti(h - t0) - anti(-t0)) / h / kTwoPi;
}

Vec2 p1_gradient(const Vec2& x0, const Vec2& x1, const Vec2& x2, double v0, double v1, double v2) {
  Eigen::Matrix2d j;
  j.col(0) = x1 - x0;
  j.col(1) = x2 - x0;
  const Eigen::Vector2d dv(v1 - v0, v2 - v0);
  return j.transpose().inverse() * dv;
}

}  // namespace

double hat_y(const Vec2& x) {
  if (x.x() == 0.0 && x.y() == 0.0) throw GeometryError("singular point");
  double a = std::atan2(x.y(), x.x());
  if (a < 0.0) a += kTwoPi;
  const double v = a / kTwoPi;
  return v >= 1.0 ? 0.0 : v;
}

Vec2 grad_hat_y(const Vec2& x) {
  const double r2 = x.squaredNorm();
  if (r2 == 0.0) throw GeometryError("singular point");
  return Vec2(-x.y(), x.x()) / (kTwoPi * r2);
}

ContinuumField dislocation_field(const Vec2& center, int sign) {
  const double s = sign;
  return {[center, s](const Vec2& x) { return s * hat_y(x - center); },
          [center, s](const Vec2& x) -> Vec2 { return s * grad_hat_y(x - center); },
          {center}};
}

ContinuumField dipole_field(const Vec2& x_plus, const Vec2& x_minus) {
  if ((x_plus - x_minus).norm() == 0.0) throw GeometryError("dipole poles coincide");
  auto value = [x_plus, x_minus](const Vec2& x) {
    const Vec2 a = x - x_plus;
    const Vec2 b = x - x_minus;
    if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) throw GeometryError("singular point");
    return std::atan2(cross(b, a), b.dot(a)) / kTwoPi;
  };
  auto grad = [x_plus, x_minus](const Vec2& x) -> Vec2 { return grad_hat_y(x - x_plus) - grad_hat_y(x - x_minus); };
  return {value, grad, {x_plus, x_minus}};
}

double loop_integral(const std::function<Vec2(const Vec2&)>& grad, const std::vector<Vec2>& loop, int samples) {
  double total = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec2& p = loop[i];
    const Vec2& q = loop[(i + 1) % loop.size()];
    const Vec2 e = q - p;
    double s = 0.5 * (grad(p).dot(e) + grad(q).dot(e));
    for (int k = 1; k < samples; ++k) s += grad(p + e * (static_cast<double>(k) / samples)).dot(e);
    total += s / samples;
  }
  return total;
}

int BoundaryCorrector::locate(const Vec2& x) const {
  const auto& pos = complex->positions();
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Vec2& a = pos[static_cast<std::size_t>(triangles[t][0])];
    const Vec2& b = pos[static_cast<std::size_t>(triangles[t][1])];
    const Vec2& c = pos[static_cast<std::size_t>(triangles[t][2])];
    constexpr double eps = -1e-12;
    if (cross(b - a, x - a) >= eps && cross(c - b, x - b) >= eps && cross(a - c, x - c) >= eps)
      return static_cast<int>(t);
  }
  return -1;
}

double BoundaryCorrector::value_at(const Vec2& x) const {
  const int t = locate(x);
  if (t < 0) throw GeometryError("point outside the polygon");
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Vec2& a = complex->positions()[static_cast<std::size_t>(tri[0])];
  return nodal[tri[0]] + gradients[static_cast<std::size_t>(t)].dot(x - a);
}

Vec2 BoundaryCorrector::gradient_at(const Vec2& x) const {
  const int t = locate(x);
  if (t < 0) throw GeometryError("point outside the polygon");
  return gradients[static_cast<std::size_t>(t)];
}

double BoundaryCorrector::max_gradient() const {
  double m = 0.0;
  for (const auto& g : gradients) m = std::max(m, g.norm());
  return m;
}

double BoundaryCorrector::jump_estimator() const {
  std::map<std::pair<int, int>, std::vector<int>> edges;
  for (std::size_t t = 0; t < triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) {
      const int a = triangles[t][static_cast<std::size_t>(k)];
      const int b = triangles[t][static_cast<std::size_t>((k + 1) % 3)];
      edges[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(t));
    }
  const auto& pos = complex->positions();
  double sum = 0.0;
  for (const auto& [e, ts] : edges) {
    if (ts.size() != 2) continue;
    const Vec2 d = pos[static_cast<std::size_t>(e.second)] - pos[static_cast<std::size_t>(e.first)];
    const double h = d.norm();
    const Vec2 n(d.y() / h, -d.x() / h);
    const double jump = (gradients[static_cast<std::size_t>(ts[0])] - gradients[static_cast<std::size_t>(ts[1])]).dot(n);
    sum += h * jump * jump;
  }
  return std::sqrt(sum);
}

BoundaryCorrector solve_boundary_corrector(const ComplexPtr& polygon, const DislocationConfig& config, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("corrector tolerance must be positive");
  if (!polygon || polygon->kind() != DomainKind::polygon || !polygon->polygon())
    throw GeometryError("boundary corrector needs a polygon complex");
  const auto& c = *polygon;
  const auto& poly = *c.polygon();
  const auto& pos = c.positions();
  const auto& sites = c.sites();

  std::vector<Vec2> hull;
  for (const auto& s : poly.corners) hull.push_back(s.position());
  std::vector<Vec2> centers;
  std::vector<double> signs;
  for (const auto& core : config.cores()) {
    const Vec2 x = core.cell.barycenter();
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2 e = hull[(i + 1) % hull.size()] - hull[i];
      if (cross(e, x - hull[i]) / e.norm() <= 1e-12) throw GeometryError("core on or outside the polygon boundary");
    }
    centers.push_back(x);
    signs.push_back(core.sign);
  }

  BoundaryCorrector out;
  out.complex = polygon;
  out.config = config;
  for (const auto& cell : c.cells()) out.triangles.push_back(cell.sites);
  out.num_lattice_triangles = out.triangles.size();

  // sliver regions between each hull period and its boundary walk
  const auto& bb = c.boundary_bonds();
  for (const auto& p : poly.periods) {
    if (p.boundary_bonds.size() < 2) continue;
    std::vector<int> walk{bb[static_cast<std::size_t>(p.boundary_bonds.front())].from};
    for (int k : p.boundary_bonds) walk.push_back(bb[static_cast<std::size_t>(k)].to);
    std::vector<int> ring{walk.front(), walk.back()};
    for (std::size_t k = walk.size() - 2; k >= 1; --k) ring.push_back(walk[k]);
    ear_clip(std::move(ring), sites, out.triangles);
  }

  // P1 stiffness
  const auto n = static_cast<Eigen::Index>(c.num_sites());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * out.triangles.size());
  for (const auto& t : out.triangles) {
    const Vec2& x0 = pos[static_cast<std::size_t>(t[0])];
    const Vec2& x1 = pos[static_cast<std::size_t>(t[1])];
    const Vec2& x2 = pos[static_cast<std::size_t>(t[2])];
    const double area = 0.5 * cross(x1 - x0, x2 - x0);
    if (!(area > 0.0)) throw GeometryError("degenerate triangle in corrector mesh");
    const std::array<Vec2, 3> g{Vec2(x1.y() - x2.y(), x2.x() - x1.x()), Vec2(x2.y() - x0.y(), x0.x() - x2.x()),
                                Vec2(x0.y() - x1.y(), x1.x() - x0.x())};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], g[i].dot(g[j]) / (4.0 * area));
  }
  SparseMatrix k(n, n);
  k.setFromTriplets(trip.begin(), trip.end());

  // Neumann load: g = d/dtau F, F = sum s (1/2pi) log|x - x^C|
  auto potential = [&](const Vec2& x) {
    double f = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) f += signs[i] * std::log((x - centers[i]).norm()) / kTwoPi;
    return f;
  };
  Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
  CompensatedSum compat;
  for (const auto& p : poly.periods) {
    const int a = c.index_of(p.start);
    const int b = c.index_of(p.end);
    const Vec2& xp = pos[static_cast<std::size_t>(a)];
    const Vec2& xq = pos[static_cast<std::size_t>(b)];
    double mean = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) mean += signs[i] * mean_log(xp, xq, centers[i]);
    const double fp = potential(xp);
    const double fq = potential(xq);
    load[b] += fq - mean;
    load[a] += mean - fp;
    compat.add(fq - fp);
  }
  out.compatibility = compat.value();
  load.array() -= load.mean();

  // pin the anchor
  const int anchor = c.anchor();
  std::vector<int> free_index(static_cast<std::size_t>(n), -1);
  int nf = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != anchor) free_index[static_cast<std::size_t>(i)] = nf++;
  std::vector<Eigen::Triplet<double>> reduced;
  reduced.reserve(static_cast<std::size_t>(k.nonZeros()));
  for (Eigen::Index col = 0; col < k.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
      const int i = free_index[static_cast<std::size_t>(it.row())];
      const int j = free_index[static_cast<std::size_t>(it.col())];
      if (i >= 0 && j >= 0) reduced.emplace_back(i, j, it.value());
    }
  SparseMatrix kr(nf, nf);
  kr.setFromTriplets(reduced.begin(), reduced.end());
  Eigen::VectorXd rhs(nf);
  for (Eigen::Index i = 0; i < n; ++i)
    if (free_index[static_cast<std::size_t>(i)] >= 0) rhs[free_index[static_cast<std::size_t>(i)]] = load[i];
  Eigen::VectorXd x;
  const CgResult cg = conjugate_gradient(kr, rhs, x, tol, std::max(1000, 20 * nf));
  out.iterations = cg.iterations;

  out.nodal = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (free_index[static_cast<std::size_t>(i)] >= 0) out.nodal[i] = x[free_index[static_cast<std::size_t>(i)]];
  const Eigen::VectorXd r = k * out.nodal - load;
  double rn = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != anchor) rn += r[i] * r[i];
  const double ln = load.norm();
  out.harmonic_residual = ln > 0.0 ? std::sqrt(rn) / ln : std::sqrt(rn);

  for (const auto& t : out.triangles)
    out.gradients.push_back(p1_gradient(pos[static_cast<std::size_t>(t[0])], pos[static_cast<std::size_t>(t[1])],
                                        pos[static_cast<std::size_t>(t[2])], out.nodal[t[0]], out.nodal[t[1]],
                                        out.nodal[t[2]]));
  return out;
}

BondForm corrector_on_bonds(const BoundaryCorrector& corr, const ComplexPtr& complex) {
  if (!complex || complex->num_sites() != static_cast<std::size_t>(corr.nodal.size()) ||
      complex->sites() != corr.complex->sites())
    throw GeometryError("corrector was computed on a different complex");
  const auto& bonds = complex->bonds();
  Eigen::VectorXd v(static_cast<Eigen::Index>(bonds.size()));
  for (std::size_t k = 0; k < bonds.size(); ++k)
    v[static_cast<Eigen::Index>(k)] = corr.nodal[bonds[k].head] - corr.nodal[bonds[k].tail];
  return {complex, std::move(v)};
}

void write_corrector(std::ostream& out, const BoundaryCorrector& corr) {
  const auto& sites = corr.complex->sites();
  out << "# m n value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < sites.size(); ++i)
    out << sites[i].m << ' ' << sites[i].n << ' ' << corr.nodal[static_cast<Eigen::Index>(i)] << '\n';
}

}  // namespace antiplane
