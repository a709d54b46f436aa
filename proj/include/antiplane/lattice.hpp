#pragma once

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace antiplane {

using Vec2 = Eigen::Vector2d;

/// Raised for invalid geometric input (degenerate domains, bad polygons,
/// cores outside the domain, overlapping truncation balls).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lattice offsets (dm, dn) of the six nearest-neighbour directions a_1..a_6,
/// where a_i is a_1 rotated by (i-1)*60 degrees.
inline constexpr std::array<std::array<int, 2>, 6> kDirOffsets{{
    {1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

/// Maps any integer direction index onto 1..6.
constexpr int normalize_dir(int dir) { return ((dir - 1) % 6 + 6) % 6 + 1; }

/// A point of the triangular lattice (a1+a2)/3 + m*a1 + n*a2.
struct LatticeSite {
  int m = 0;
  int n = 0;

  auto operator<=>(const LatticeSite&) const = default;

  [[nodiscard]] Vec2 position() const;
  [[nodiscard]] LatticeSite step(int dir) const {
    const auto& d = kDirOffsets[static_cast<std::size_t>(normalize_dir(dir) - 1)];
    return {m + d[0], n + d[1]};
  }
};

LatticeSite operator+(LatticeSite a, LatticeSite b);
LatticeSite operator-(LatticeSite a, LatticeSite b);

/// Lattice basis vectors.
Vec2 a1();
Vec2 a2();
/// Nearest-neighbour direction a_dir (dir taken modulo 6).
Vec2 direction(int dir);
/// Rotation by k*60 degrees.
Eigen::Matrix2d rotation60(int k);

/// Oriented bond from `tail` along direction `dir` in 1..6.
struct Bond {
  LatticeSite tail;
  int dir = 1;

  auto operator<=>(const Bond&) const = default;

  [[nodiscard]] LatticeSite head() const { return tail.step(dir); }
  [[nodiscard]] Bond reverse() const { return {head(), normalize_dir(dir + 3)}; }
  /// Same bond stored with dir in 1..3; `flipped` reports a reversal.
  [[nodiscard]] Bond canonical(bool* flipped = nullptr) const;
};

enum class Orientation : std::uint8_t { up, down };

/// A positively oriented triangle. Up cells are (x, x+a1, x+a2); down cells
/// are (x, x+a2, x+a3) with the anchor at the bottom vertex.
struct Cell {
  LatticeSite anchor;
  Orientation orientation = Orientation::up;

  auto operator<=>(const Cell&) const = default;

  [[nodiscard]] std::array<LatticeSite, 3> vertices() const;
  [[nodiscard]] Vec2 barycenter() const;
  /// Counterclockwise boundary bonds.
  [[nodiscard]] std::array<Bond, 3> boundary() const;
};

/// The cell whose barycentre is the origin.
Cell origin_cell();

/// Builds the cell with the given vertex set, if the three sites form one.
std::optional<Cell> cell_from_vertices(std::array<LatticeSite, 3> vertices);

/// The lattice automorphism G^C (and its inverse H^C) mapping C onto C_0.
/// G(x) = R6^i (x - x^C), with i = 1 exactly when C and C_0 differ in
/// orientation.
class Automorphism {
 public:
  explicit Automorphism(const Cell& cell);

  [[nodiscard]] int rotation() const { return rotation_; }
  [[nodiscard]] const Cell& cell() const { return cell_; }

  [[nodiscard]] LatticeSite forward(LatticeSite s) const;
  [[nodiscard]] LatticeSite inverse(LatticeSite s) const;
  [[nodiscard]] Bond forward(const Bond& b) const;
  [[nodiscard]] Bond inverse(const Bond& b) const;
  [[nodiscard]] Cell forward(const Cell& c) const;
  [[nodiscard]] Cell inverse(const Cell& c) const;
  [[nodiscard]] Vec2 forward(const Vec2& x) const;
  [[nodiscard]] Vec2 inverse(const Vec2& x) const;

 private:
  Cell cell_;
  int rotation_ = 0;
  LatticeSite shift_;  // lattice part of x^C in the rotated frame
};

/// Compact point set used for Euclidean set distances.
struct Shape {
  std::vector<Vec2> points;  // 1 (site), 2 (bond) or 3 (cell) vertices
};

Shape shape_of(LatticeSite s);
Shape shape_of(const Bond& b);
Shape shape_of(const Cell& c);

/// Infimum distance between the closed convex hulls of two shapes.
double dist(const Shape& a, const Shape& b);

template <class A, class B>
double dist(const A& a, const B& b) {
  return dist(shape_of(a), shape_of(b));
}

enum class DomainKind : std::uint8_t { ball, polygon };

/// One straight side of a convex lattice polygon.
struct PolygonSegment {
  LatticeSite from;
  LatticeSite to;
  LatticeSite tangent;        // irreducible lattice tangent tau, in (m, n)
  int multiplicity = 1;       // to - from = multiplicity * tangent
  int dir_index = 1;          // i with tangent = j*a_i + k*a_{i+1}
  int coeff_j = 1;
  int coeff_k = 0;
};

/// Piece of the boundary of W between two consecutive lattice points of a
/// segment of the convex hull.
struct BoundaryPeriod {
  int segment = 0;
  LatticeSite start;
  LatticeSite end;
  std::vector<int> boundary_bonds;  // indices into LatticeComplex::boundary_bonds()
  double length = 0.0;
};

struct ConvexLatticePolygon {
  std::vector<LatticeSite> corners;
  std::vector<PolygonSegment> segments;
  std::vector<BoundaryPeriod> periods;
  std::vector<double> index_per_segment;
  double index = 0.0;
};

/// Canonical bond of a complex (dir in 1..3) with precomputed endpoints.
struct BondRecord {
  int tail = -1;
  int head = -1;
  std::int8_t dir = 1;
  /// +1: bond-length representative taken in (-1/2, 1/2] on this
  /// orientation; -1: in [-1/2, 1/2).
  std::int8_t tie = 1;
  std::int8_t cell_count = 0;
};

struct CellRecord {
  Cell cell;
  std::array<int, 3> sites{};
  std::array<int, 3> bonds{};
  std::array<std::int8_t, 3> signs{};  // orientation of each bond in the CCW boundary
};

/// Boundary bond of W with its positive orientation relative to storage.
struct BoundaryBond {
  int bond = -1;
  std::int8_t sign = 1;
  int from = -1;  // site index, following the positive orientation
  int to = -1;
};

/// Immutable subcomplex of the triangular lattice generated by a finite site
/// set: sites, every nearest-neighbour bond and every triangle with all
/// vertices present.
class LatticeComplex {
 public:
  LatticeComplex(std::vector<LatticeSite> sites, DomainKind kind, double radius,
                 std::optional<ConvexLatticePolygon> polygon);

  [[nodiscard]] DomainKind kind() const { return kind_; }
  [[nodiscard]] double radius() const { return radius_; }
  [[nodiscard]] const std::optional<ConvexLatticePolygon>& polygon() const { return polygon_; }

  [[nodiscard]] std::size_t num_sites() const { return sites_.size(); }
  [[nodiscard]] std::size_t num_bonds() const { return bonds_.size(); }
  [[nodiscard]] std::size_t num_cells() const { return cells_.size(); }

  [[nodiscard]] const std::vector<LatticeSite>& sites() const { return sites_; }
  [[nodiscard]] const std::vector<Vec2>& positions() const { return positions_; }
  [[nodiscard]] const std::vector<BondRecord>& bonds() const { return bonds_; }
  [[nodiscard]] const std::vector<CellRecord>& cells() const { return cells_; }

  [[nodiscard]] int anchor() const { return anchor_; }
  [[nodiscard]] LatticeSite anchor_site() const { return sites_[static_cast<std::size_t>(anchor_)]; }

  /// Site index or -1.
  [[nodiscard]] int index_of(LatticeSite s) const;
  [[nodiscard]] bool contains(LatticeSite s) const { return index_of(s) >= 0; }
  /// Canonical bond index, with `sign` = -1 when `b` is the reversed storage.
  [[nodiscard]] int bond_index(const Bond& b, int* sign = nullptr) const;
  [[nodiscard]] int cell_index(const Cell& c) const;
  [[nodiscard]] Bond bond(int index) const;

  /// Number of nearest neighbours present in the complex.
  [[nodiscard]] int neighbour_count(int site) const { return neighbour_count_[static_cast<std::size_t>(site)]; }
  /// Sites without a full set of neighbours.
  [[nodiscard]] const std::vector<int>& boundary_sites() const { return boundary_sites_; }
  /// Positively oriented boundary bonds of W (bonds in exactly one cell).
  /// For polygons they are ordered along the boundary cycle.
  [[nodiscard]] const std::vector<BoundaryBond>& boundary_bonds() const { return boundary_bonds_; }

  /// Sites held fixed for perturbations: boundary sites of ball windows
  /// (zero clamp), the anchor site of polygons (pure Neumann gauge).
  [[nodiscard]] const std::vector<std::uint8_t>& clamped() const { return clamped_; }
  /// site -> free degree of freedom, or -1 when clamped.
  [[nodiscard]] const std::vector<int>& dof_of_site() const { return dof_; }
  [[nodiscard]] const std::vector<int>& site_of_dof() const { return site_of_dof_; }
  [[nodiscard]] int num_dofs() const { return static_cast<int>(site_of_dof_.size()); }

  [[nodiscard]] nlohmann::json to_json() const;

 private:
  void build_topology();
  void build_boundary();

  DomainKind kind_;
  double radius_;
  std::optional<ConvexLatticePolygon> polygon_;
  std::vector<LatticeSite> sites_;
  std::vector<Vec2> positions_;
  std::vector<BondRecord> bonds_;
  std::vector<CellRecord> cells_;
  std::vector<std::array<int, 3>> out_bond_;  // canonical bond per (site, dir 1..3)
  std::vector<std::array<int, 2>> cell_at_;   // (up, down) cell index per anchor site
  std::vector<int> neighbour_count_;
  std::vector<int> boundary_sites_;
  std::vector<BoundaryBond> boundary_bonds_;
  std::vector<std::uint8_t> clamped_;
  std::vector<int> dof_;
  std::vector<int> site_of_dof_;
  int anchor_ = -1;
  // dense lookup over the (m, n) bounding box
  int m_min_ = 0, n_min_ = 0, m_span_ = 0, n_span_ = 0;
  std::vector<int> lookup_;
};

using ComplexPtr = std::shared_ptr<const LatticeComplex>;

/// All sites with |position| <= radius. Throws GeometryError for radius < 2.
ComplexPtr build_ball(double radius);

/// Omega = conv(corners) ∩ Λ with its boundary descriptor.
ComplexPtr build_polygon(const std::vector<LatticeSite>& corners);

/// Hexagon {-k <= m, n <= k-1, -k <= m+n <= k-1}: invariant under the
/// 120-degree rotation about the origin, sides along lattice lines.
ComplexPtr build_hexagon(int k);
std::vector<LatticeSite> hexagon_corners(int k);

/// Boundary sites, positively oriented boundary bonds and periods of a polygon.
struct BoundaryDecomposition {
  std::vector<int> sites;
  std::vector<BoundaryBond> bonds;
  std::vector<BoundaryPeriod> periods;
};
BoundaryDecomposition boundary_decomposition(const LatticeComplex& complex);

/// Distance from a cell to the boundary of W (+inf for ball windows).
double distance_to_boundary(const LatticeComplex& complex, const Cell& cell);

}  // namespace antiplane
