#pragma once

#include "antiplane/forms.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

namespace antiplane {

/// (1/2pi) arg(x) with arg in [0, 2pi), cut along the positive x1-axis.
double hat_y(const Vec2& x);
/// (1/2pi) (-x2, x1) / |x|^2.
Vec2 grad_hat_y(const Vec2& x);

struct ContinuumField {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  std::vector<Vec2> singular_points;
};

/// Screw dislocation field centred at `center`, i.e. hat_y(x - center).
ContinuumField dislocation_field(const Vec2& center, int sign = 1);

/// v = (1/2pi)[arg(x - x_plus) - arg(x - x_minus)], cut on the segment
/// between the two poles.
ContinuumField dipole_field(const Vec2& x_plus, const Vec2& x_minus);

/// Integral of a gradient field around a closed polygonal loop, trapezoid
/// rule with `samples` points per edge.
double loop_integral(const std::function<Vec2(const Vec2&)>& grad, const std::vector<Vec2>& loop, int samples = 64);

/// P1 solution of the pure Neumann problem on the convex hull of a polygon
/// complex, cancelling the normal derivative of sum_s s*hat_y(x - x^C).
struct BoundaryCorrector {
  ComplexPtr complex;
  DislocationConfig config;
  /// Nodal values per site of `complex`, zero at the anchor.
  Eigen::VectorXd nodal;
  /// Lattice cells first, then sliver triangles; node indices are site indices.
  std::vector<std::array<int, 3>> triangles;
  std::size_t num_lattice_triangles = 0;
  std::vector<Vec2> gradients;  // per triangle
  /// Integral of the Neumann data over the hull boundary.
  double compatibility = 0.0;
  /// Relative residual of the discrete Laplace system at free nodes.
  double harmonic_residual = 0.0;
  int iterations = 0;

  [[nodiscard]] int locate(const Vec2& x) const;
  [[nodiscard]] double value_at(const Vec2& x) const;
  [[nodiscard]] Vec2 gradient_at(const Vec2& x) const;
  [[nodiscard]] double max_gradient() const;
  /// sqrt(sum_E h_E |[grad.n]|^2) over interior edges; an L2 proxy for the
  /// second derivatives of the corrector.
  [[nodiscard]] double jump_estimator() const;
};

BoundaryCorrector solve_boundary_corrector(const ComplexPtr& polygon, const DislocationConfig& config,
                                           double tol = 1e-10);

/// Bond differences of the corrector's nodal values.
BondForm corrector_on_bonds(const BoundaryCorrector& corr, const ComplexPtr& complex);

void write_corrector(std::ostream& out, const BoundaryCorrector& corr);

}  // namespace antiplane
