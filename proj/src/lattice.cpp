#include "antiplane/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace antiplane {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

long cross(LatticeSite a, LatticeSite b) {
  return static_cast<long>(a.m) * b.n - static_cast<long>(a.n) * b.m;
}

LatticeSite offset(int dir) {
  const auto& d = kDirOffsets[static_cast<std::size_t>(normalize_dir(dir) - 1)];
  return {d[0], d[1]};
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  constexpr double eps = 1e-12;
  const double d1 = cross2(q2 - q1, p1 - q1);
  const double d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1);
  const double d4 = cross2(p2 - p1, q2 - p1);
  if (((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
      ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)))
    return true;
  return point_segment_distance(p1, q1, q2) <= eps || point_segment_distance(p2, q1, q2) <= eps ||
         point_segment_distance(q1, p1, p2) <= eps || point_segment_distance(q2, p1, p2) <= eps;
}

bool inside_hull(const Vec2& p, const Shape& s) {
  constexpr double eps = 1e-12;
  const auto& v = s.points;
  if (v.size() == 1) return (p - v[0]).norm() <= eps;
  if (v.size() == 2) return point_segment_distance(p, v[0], v[1]) <= eps;
  // triangle, any orientation
  const double c0 = cross2(v[1] - v[0], p - v[0]);
  const double c1 = cross2(v[2] - v[1], p - v[1]);
  const double c2 = cross2(v[0] - v[2], p - v[2]);
  return (c0 >= -eps && c1 >= -eps && c2 >= -eps) || (c0 <= eps && c1 <= eps && c2 <= eps);
}

std::vector<std::pair<Vec2, Vec2>> edges_of(const Shape& s) {
  std::vector<std::pair<Vec2, Vec2>> e;
  const auto& v = s.points;
  if (v.size() == 1) {
    e.emplace_back(v[0], v[0]);
  } else if (v.size() == 2) {
    e.emplace_back(v[0], v[1]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) e.emplace_back(v[i], v[(i + 1) % v.size()]);
  }
  return e;
}

}  // namespace

Vec2 a1() { return {1.0, 0.0}; }
Vec2 a2() { return {0.5, 0.5 * kSqrt3}; }

Vec2 direction(int dir) { return rotation60(normalize_dir(dir) - 1) * a1(); }

Eigen::Matrix2d rotation60(int k) {
  const double t = static_cast<double>(((k % 6) + 6) % 6) * M_PI / 3.0;
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Vec2 LatticeSite::position() const {
  return (a1() + a2()) / 3.0 + static_cast<double>(m) * a1() + static_cast<double>(n) * a2();
}

LatticeSite operator+(LatticeSite a, LatticeSite b) { return {a.m + b.m, a.n + b.n}; }
LatticeSite operator-(LatticeSite a, LatticeSite b) { return {a.m - b.m, a.n - b.n}; }

Bond Bond::canonical(bool* flipped) const {
  const int d = normalize_dir(dir);
  const bool flip = d > 3;
  if (flipped) *flipped = flip;
  return flip ? Bond{tail, d}.reverse() : Bond{tail, d};
}

std::array<LatticeSite, 3> Cell::vertices() const {
  if (orientation == Orientation::up) return {anchor, anchor.step(1), anchor.step(2)};
  return {anchor, anchor.step(2), anchor.step(3)};
}

Vec2 Cell::barycenter() const {
  const auto v = vertices();
  return (v[0].position() + v[1].position() + v[2].position()) / 3.0;
}

std::array<Bond, 3> Cell::boundary() const {
  if (orientation == Orientation::up)
    return {Bond{anchor, 1}, Bond{anchor.step(1), 3}, Bond{anchor.step(2), 5}};
  return {Bond{anchor, 2}, Bond{anchor.step(2), 4}, Bond{anchor.step(3), 6}};
}

Cell origin_cell() { return {{0, -1}, Orientation::down}; }

std::optional<Cell> cell_from_vertices(std::array<LatticeSite, 3> vertices) {
  std::sort(vertices.begin(), vertices.end());
  for (const auto& anchor : vertices) {
    for (auto o : {Orientation::up, Orientation::down}) {
      Cell c{anchor, o};
      auto v = c.vertices();
      std::sort(v.begin(), v.end());
      if (v == vertices) return c;
    }
  }
  return std::nullopt;
}

// Down cells share the orientation of C_0 and map by a lattice translation;
// up cells need the extra 60-degree rotation.
Automorphism::Automorphism(const Cell& cell) : cell_(cell) {
  if (cell.orientation == Orientation::down) {
    rotation_ = 0;
    shift_ = {cell.anchor.m, cell.anchor.n + 1};
  } else {
    rotation_ = 1;
    shift_ = cell.anchor;
  }
}

LatticeSite Automorphism::forward(LatticeSite s) const {
  if (rotation_ == 0) return s - shift_;
  const LatticeSite d = s - shift_;
  return {-d.n, d.m + d.n - 1};
}

LatticeSite Automorphism::inverse(LatticeSite s) const {
  if (rotation_ == 0) return s + shift_;
  const int dn = -s.m;
  const int dm = s.n + 1 - dn;
  return shift_ + LatticeSite{dm, dn};
}

Bond Automorphism::forward(const Bond& b) const { return {forward(b.tail), normalize_dir(b.dir + rotation_)}; }
Bond Automorphism::inverse(const Bond& b) const { return {inverse(b.tail), normalize_dir(b.dir - rotation_)}; }

Cell Automorphism::forward(const Cell& c) const {
  auto v = c.vertices();
  for (auto& s : v) s = forward(s);
  return *cell_from_vertices(v);
}

Cell Automorphism::inverse(const Cell& c) const {
  auto v = c.vertices();
  for (auto& s : v) s = inverse(s);
  return *cell_from_vertices(v);
}

Vec2 Automorphism::forward(const Vec2& x) const { return rotation60(rotation_) * (x - cell_.barycenter()); }
Vec2 Automorphism::inverse(const Vec2& x) const { return rotation60(-rotation_) * x + cell_.barycenter(); }

Shape shape_of(LatticeSite s) { return {{s.position()}}; }
Shape shape_of(const Bond& b) { return {{b.tail.position(), b.head().position()}}; }
Shape shape_of(const Cell& c) {
  const auto v = c.vertices();
  return {{v[0].position(), v[1].position(), v[2].position()}};
}

double dist(const Shape& a, const Shape& b) {
  for (const auto& p : a.points)
    if (inside_hull(p, b)) return 0.0;
  for (const auto& p : b.points)
    if (inside_hull(p, a)) return 0.0;
  const auto ea = edges_of(a);
  const auto eb = edges_of(b);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [p1, p2] : ea) {
    for (const auto& [q1, q2] : eb) {
      if (segments_intersect(p1, p2, q1, q2)) return 0.0;
      best = std::min({best, point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                       point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

LatticeComplex::LatticeComplex(std::vector<LatticeSite> sites, DomainKind kind, double radius,
                               std::optional<ConvexLatticePolygon> polygon)
    : kind_(kind), radius_(radius), polygon_(std::move(polygon)), sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end(), [](LatticeSite a, LatticeSite b) {
    return std::pair(a.n, a.m) < std::pair(b.n, b.m);
  });
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  if (sites_.empty()) throw GeometryError("degenerate domain: no sites");

  int m_max = sites_.front().m, n_max = sites_.front().n;
  m_min_ = m_max;
  n_min_ = n_max;
  for (auto s : sites_) {
    m_min_ = std::min(m_min_, s.m);
    m_max = std::max(m_max, s.m);
    n_min_ = std::min(n_min_, s.n);
    n_max = std::max(n_max, s.n);
  }
  m_span_ = m_max - m_min_ + 1;
  n_span_ = n_max - n_min_ + 1;
  lookup_.assign(static_cast<std::size_t>(m_span_) * static_cast<std::size_t>(n_span_), -1);
  positions_.reserve(sites_.size());
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto s = sites_[i];
    lookup_[static_cast<std::size_t>(s.n - n_min_) * static_cast<std::size_t>(m_span_) +
            static_cast<std::size_t>(s.m - m_min_)] = static_cast<int>(i);
    positions_.push_back(s.position());
  }

  // nearest site to the origin; ties broken by (n, m), which selects the
  // bottom vertex of C_0
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const double r = positions_[i].norm();
    if (r < best - 1e-12) {
      best = r;
      anchor_ = static_cast<int>(i);
    }
  }

  build_topology();
  build_boundary();
}

int LatticeComplex::index_of(LatticeSite s) const {
  const int dm = s.m - m_min_;
  const int dn = s.n - n_min_;
  if (dm < 0 || dn < 0 || dm >= m_span_ || dn >= n_span_) return -1;
  return lookup_[static_cast<std::size_t>(dn) * static_cast<std::size_t>(m_span_) + static_cast<std::size_t>(dm)];
}

int LatticeComplex::bond_index(const Bond& b, int* sign) const {
  bool flipped = false;
  const Bond c = b.canonical(&flipped);
  if (sign) *sign = flipped ? -1 : 1;
  const int t = index_of(c.tail);
  if (t < 0) return -1;
  return out_bond_[static_cast<std::size_t>(t)][static_cast<std::size_t>(c.dir - 1)];
}

int LatticeComplex::cell_index(const Cell& c) const {
  const int a = index_of(c.anchor);
  if (a < 0) return -1;
  return cell_at_[static_cast<std::size_t>(a)][c.orientation == Orientation::up ? 0 : 1];
}

Bond LatticeComplex::bond(int index) const {
  const auto& r = bonds_[static_cast<std::size_t>(index)];
  return {sites_[static_cast<std::size_t>(r.tail)], r.dir};
}

void LatticeComplex::build_topology() {
  const std::size_t n = sites_.size();
  out_bond_.assign(n, {-1, -1, -1});
  cell_at_.assign(n, {-1, -1});
  neighbour_count_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = sites_[i];
    for (int d = 1; d <= 6; ++d)
      if (contains(s.step(d))) ++neighbour_count_[i];
    for (int d = 1; d <= 3; ++d) {
      const int j = index_of(s.step(d));
      if (j < 0) continue;
      out_bond_[i][static_cast<std::size_t>(d - 1)] = static_cast<int>(bonds_.size());
      bonds_.push_back({static_cast<int>(i), j, static_cast<std::int8_t>(d), 1, 0});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (auto o : {Orientation::up, Orientation::down}) {
      const Cell c{sites_[i], o};
      const auto v = c.vertices();
      CellRecord rec{c, {}, {}, {}};
      bool ok = true;
      for (std::size_t k = 0; k < 3 && ok; ++k) {
        rec.sites[k] = index_of(v[k]);
        ok = rec.sites[k] >= 0;
      }
      if (!ok) continue;
      const auto edges = c.boundary();
      for (std::size_t k = 0; k < 3; ++k) {
        int sgn = 1;
        rec.bonds[k] = bond_index(edges[k], &sgn);
        rec.signs[k] = static_cast<std::int8_t>(sgn);
        ++bonds_[static_cast<std::size_t>(rec.bonds[k])].cell_count;
      }
      cell_at_[i][o == Orientation::up ? 0 : 1] = static_cast<int>(cells_.size());
      cells_.push_back(rec);
    }
  }
}

void LatticeComplex::build_boundary() {
  for (std::size_t i = 0; i < sites_.size(); ++i)
    if (neighbour_count_[i] < 6) boundary_sites_.push_back(static_cast<int>(i));

  // Positive orientation of a boundary bond is the one it carries in the
  // counterclockwise boundary of its single cell.
  std::vector<BoundaryBond> unordered;
  for (const auto& c : cells_) {
    for (std::size_t k = 0; k < 3; ++k) {
      auto& b = bonds_[static_cast<std::size_t>(c.bonds[k])];
      if (b.cell_count != 1) continue;
      b.tie = c.signs[k];
      const int from = c.signs[k] > 0 ? b.tail : b.head;
      const int to = c.signs[k] > 0 ? b.head : b.tail;
      unordered.push_back({c.bonds[k], c.signs[k], from, to});
    }
  }

  clamped_.assign(sites_.size(), 0);
  if (kind_ == DomainKind::ball) {
    for (int s : boundary_sites_) clamped_[static_cast<std::size_t>(s)] = 1;
    boundary_bonds_ = std::move(unordered);
  } else {
    clamped_[static_cast<std::size_t>(anchor_)] = 1;
    for (const auto& b : bonds_)
      if (b.cell_count == 0) throw GeometryError("invalid polygon: dangling bond outside every cell");

    std::vector<int> next(sites_.size(), -1);
    for (std::size_t k = 0; k < unordered.size(); ++k) {
      auto& slot = next[static_cast<std::size_t>(unordered[k].from)];
      if (slot >= 0) throw GeometryError("invalid polygon: boundary of W is not a simple cycle");
      slot = static_cast<int>(k);
    }
    auto& poly = *polygon_;
    const int start = index_of(poly.corners.front());
    if (start < 0 || next[static_cast<std::size_t>(start)] < 0)
      throw GeometryError("invalid polygon: corner not on the boundary of W");
    std::vector<int> position_in_cycle(sites_.size(), -1);
    int site = start;
    do {
      const int k = next[static_cast<std::size_t>(site)];
      if (k < 0 || position_in_cycle[static_cast<std::size_t>(site)] >= 0)
        throw GeometryError("invalid polygon: boundary of W is not a simple cycle");
      position_in_cycle[static_cast<std::size_t>(site)] = static_cast<int>(boundary_bonds_.size());
      boundary_bonds_.push_back(unordered[static_cast<std::size_t>(k)]);
      site = unordered[static_cast<std::size_t>(k)].to;
    } while (site != start);
    if (boundary_bonds_.size() != unordered.size())
      throw GeometryError("invalid polygon: boundary of W has several components");

    // periods between consecutive lattice points of each hull segment
    const std::size_t nb = boundary_bonds_.size();
    poly.index_per_segment.assign(poly.segments.size(), 0.0);
    for (std::size_t m = 0; m < poly.segments.size(); ++m) {
      const auto& seg = poly.segments[m];
      for (int j = 0; j < seg.multiplicity; ++j) {
        const LatticeSite zeta{seg.from.m + j * seg.tangent.m, seg.from.n + j * seg.tangent.n};
        const LatticeSite zeta_next{zeta.m + seg.tangent.m, zeta.n + seg.tangent.n};
        const int a = index_of(zeta);
        const int b = index_of(zeta_next);
        if (a < 0 || b < 0 || position_in_cycle[static_cast<std::size_t>(a)] < 0)
          throw GeometryError("invalid polygon: hull point missing from the boundary of W");
        BoundaryPeriod p{static_cast<int>(m), zeta, zeta_next, {}, 0.0};
        std::size_t k = static_cast<std::size_t>(position_in_cycle[static_cast<std::size_t>(a)]);
        while (true) {
          p.boundary_bonds.push_back(static_cast<int>(k));
          p.length += 1.0;
          if (boundary_bonds_[k].to == b) break;
          k = (k + 1) % nb;
          if (p.boundary_bonds.size() > nb) throw GeometryError("invalid polygon: period walk failed");
        }
        poly.index_per_segment[m] = std::max(poly.index_per_segment[m], p.length);
        poly.periods.push_back(std::move(p));
      }
    }
    poly.index = *std::max_element(poly.index_per_segment.begin(), poly.index_per_segment.end());
  }

  dof_.assign(sites_.size(), -1);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (clamped_[i]) continue;
    dof_[i] = static_cast<int>(site_of_dof_.size());
    site_of_dof_.push_back(static_cast<int>(i));
  }
}

nlohmann::json LatticeComplex::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_ == DomainKind::ball ? "ball" : "polygon";
  if (kind_ == DomainKind::ball) j["radius"] = radius_;
  if (polygon_) {
    auto& corners = j["corners"] = nlohmann::json::array();
    for (auto c : polygon_->corners) corners.push_back({c.m, c.n});
    j["index"] = polygon_->index;
  }
  j["anchor"] = {anchor_site().m, anchor_site().n};
  auto& sites = j["sites"] = nlohmann::json::array();
  for (auto s : sites_) sites.push_back({s.m, s.n});
  return j;
}

// ---------------------------------------------------------------------------

ComplexPtr build_ball(double radius) {
  if (!(radius >= 2.0)) throw GeometryError("degenerate domain: ball radius must be >= 2");
  // |position| <= radius implies |m|, |n| <= 2 radius / sqrt(3) + 1
  const int bound = static_cast<int>(std::ceil(2.0 * radius / kSqrt3)) + 2;
  std::vector<LatticeSite> sites;
  for (int n = -bound; n <= bound; ++n)
    for (int m = -bound; m <= bound; ++m) {
      const LatticeSite s{m, n};
      if (s.position().norm() <= radius) sites.push_back(s);
    }
  return std::make_shared<const LatticeComplex>(std::move(sites), DomainKind::ball, radius, std::nullopt);
}

ComplexPtr build_polygon(const std::vector<LatticeSite>& corners) {
  const std::size_t count = corners.size();
  if (count < 3) throw GeometryError("invalid polygon: fewer than three corners");
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j)
      if (corners[i] == corners[j]) throw GeometryError("invalid polygon: repeated corner");
  // (m, n) coordinates are an orientation-preserving affine image of the
  // plane, so convexity and orientation can be tested exactly there.
  for (std::size_t i = 0; i < count; ++i) {
    const auto& p = corners[i];
    const auto& q = corners[(i + 1) % count];
    const auto& r = corners[(i + 2) % count];
    if (cross(q - p, r - q) <= 0) throw GeometryError("invalid polygon: corners not strictly convex and counterclockwise");
  }
  long winding = 0;
  for (std::size_t i = 0; i < count; ++i) winding += cross(corners[i], corners[(i + 1) % count]);
  if (winding <= 0) throw GeometryError("invalid polygon: corners not counterclockwise");
  // a counterclockwise convex turn sequence can still wind more than once
  double turning = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto e1 = corners[(i + 1) % count] - corners[i];
    const auto e2 = corners[(i + 2) % count] - corners[(i + 1) % count];
    turning += std::atan2(static_cast<double>(cross(e1, e2)),
                          static_cast<double>(static_cast<long>(e1.m) * e2.m + static_cast<long>(e1.n) * e2.n));
  }
  if (std::abs(turning - 2.0 * M_PI) > 1e-6) throw GeometryError("invalid polygon: corners wind more than once");

  ConvexLatticePolygon poly;
  poly.corners = corners;
  for (std::size_t i = 0; i < count; ++i) {
    PolygonSegment seg;
    seg.from = corners[i];
    seg.to = corners[(i + 1) % count];
    const LatticeSite d = seg.to - seg.from;
    const int g = std::gcd(std::abs(d.m), std::abs(d.n));
    seg.multiplicity = g;
    seg.tangent = {d.m / g, d.n / g};
    for (int dir = 1; dir <= 6; ++dir) {
      const LatticeSite ai = offset(dir);
      const LatticeSite aj = offset(dir + 1);
      const long det = cross(ai, aj);
      const long j = cross(seg.tangent, aj) / det;
      const long k = cross(ai, seg.tangent) / det;
      if (j > 0 && k >= 0) {
        seg.dir_index = dir;
        seg.coeff_j = static_cast<int>(j);
        seg.coeff_k = static_cast<int>(k);
        break;
      }
    }
    poly.segments.push_back(seg);
  }

  int m_lo = corners[0].m, m_hi = corners[0].m, n_lo = corners[0].n, n_hi = corners[0].n;
  for (auto c : corners) {
    m_lo = std::min(m_lo, c.m);
    m_hi = std::max(m_hi, c.m);
    n_lo = std::min(n_lo, c.n);
    n_hi = std::max(n_hi, c.n);
  }
  std::vector<LatticeSite> sites;
  for (int n = n_lo; n <= n_hi; ++n)
    for (int m = m_lo; m <= m_hi; ++m) {
      const LatticeSite s{m, n};
      bool inside = true;
      for (std::size_t i = 0; i < count && inside; ++i)
        inside = cross(corners[(i + 1) % count] - corners[i], s - corners[i]) >= 0;
      if (inside) sites.push_back(s);
    }
  for (auto v : origin_cell().vertices())
    if (std::find(sites.begin(), sites.end(), v) == sites.end())
      throw GeometryError("origin cell excluded from the polygon");

  return std::make_shared<const LatticeComplex>(std::move(sites), DomainKind::polygon, 0.0, std::move(poly));
}

std::vector<LatticeSite> hexagon_corners(int k) {
  return {{0, -k}, {k - 1, -k}, {k - 1, 0}, {0, k - 1}, {-k, k - 1}, {-k, 0}};
}

ComplexPtr build_hexagon(int k) {
  if (k < 2) throw GeometryError("degenerate domain: hexagon half-width must be >= 2");
  return build_polygon(hexagon_corners(k));
}

BoundaryDecomposition boundary_decomposition(const LatticeComplex& complex) {
  if (complex.kind() != DomainKind::polygon || !complex.polygon())
    throw GeometryError("boundary decomposition requires a polygon domain");
  return {complex.boundary_sites(), complex.boundary_bonds(), complex.polygon()->periods};
}

double distance_to_boundary(const LatticeComplex& complex, const Cell& cell) {
  if (complex.kind() == DomainKind::ball) return std::numeric_limits<double>::infinity();
  const Shape cs = shape_of(cell);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : complex.boundary_bonds()) best = std::min(best, dist(cs, shape_of(complex.bond(b.bond))));
  return best;
}

}  // namespace antiplane
