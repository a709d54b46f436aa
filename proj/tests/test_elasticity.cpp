#include <doctest.h>

#include "antiplane/elasticity.hpp"

#include <cmath>

using namespace antiplane;

TEST_CASE("hat_y branch cut and gradient") {
  CHECK(hat_y(Vec2(1.0, 0.0)) == 0.0);
  CHECK(hat_y(Vec2(0.0, 2.0)) == doctest::Approx(0.25));
  CHECK(hat_y(Vec2(1.0, -1e-12)) == doctest::Approx(1.0));
  CHECK(hat_y(Vec2(1.0, -1e-12)) < 1.0);
  CHECK_THROWS(hat_y(Vec2(0.0, 0.0)));
  const Vec2 x(0.3, -1.1);
  const double h = 1e-6;
  const Vec2 fd((hat_y(x + Vec2(h, 0)) - hat_y(x - Vec2(h, 0))) / (2 * h),
                (hat_y(x + Vec2(0, h)) - hat_y(x - Vec2(0, h))) / (2 * h));
  CHECK((fd - grad_hat_y(x)).norm() < 1e-8);
}

TEST_CASE("loop integrals count enclosed cores") {
  const std::vector<Vec2> square{{-2, -2}, {2, -2}, {2, 2}, {-2, 2}};
  CHECK(loop_integral(grad_hat_y, square, 4000) == doctest::Approx(1.0).epsilon(1e-6));
  const std::vector<Vec2> away{{3, 3}, {5, 3}, {5, 5}, {3, 5}};
  CHECK(std::abs(loop_integral(grad_hat_y, away, 400)) < 1e-6);
  const auto dip = dipole_field(Vec2(-1.0, 0.0), Vec2(1.0, 0.0));
  const std::vector<Vec2> both{{-4, -4}, {4, -4}, {4, 4}, {-4, 4}};
  CHECK(std::abs(loop_integral(dip.gradient, both, 4000)) < 1e-6);
}

TEST_CASE("dipole field jumps across the segment between its poles") {
  const auto dip = dipole_field(Vec2(-2.0, 0.0), Vec2(2.0, 0.0));
  const double above = dip.value(Vec2(0.0, 1e-9));
  const double below = dip.value(Vec2(0.0, -1e-9));
  CHECK(std::abs(std::abs(above - below) - 1.0) < 1e-6);
  // continuous across the line outside the segment
  CHECK(std::abs(dip.value(Vec2(5.0, 1e-9)) - dip.value(Vec2(5.0, -1e-9))) < 1e-6);
}

TEST_CASE("boundary corrector of a centred core on a hexagon") {
  const auto h = build_hexagon(12);
  const DislocationConfig cfg({{origin_cell(), 1}});
  const BoundaryCorrector c = solve_boundary_corrector(h, cfg);
  CHECK(std::abs(c.compatibility) < 1e-10);
  CHECK(c.harmonic_residual < 1e-8);
  CHECK(c.nodal[h->anchor()] == 0.0);
  // threefold symmetry forces a critical point at the centre
  CHECK(c.gradient_at(Vec2(0.0, 0.0)).norm() < 1e-8);
  CHECK(c.max_gradient() > 0.0);
  CHECK(c.max_gradient() < 1.0);
  // the hull is covered: sliver triangles only when the boundary is not a lattice line
  CHECK(c.triangles.size() >= c.num_lattice_triangles);
  CHECK(c.locate(Vec2(0.0, 0.0)) >= 0);
}

TEST_CASE("boundary corrector without cores vanishes") {
  const auto p = build_polygon({{-5, -5}, {7, -5}, {-5, 7}});
  const BoundaryCorrector c = solve_boundary_corrector(p, DislocationConfig{});
  CHECK(c.nodal.norm() < 1e-12);
}

TEST_CASE("boundary corrector rejects cores outside the polygon") {
  const auto h = build_hexagon(6);
  const DislocationConfig far({{Cell{{20, 0}, Orientation::up}, 1}});
  CHECK_THROWS_AS(solve_boundary_corrector(h, far), GeometryError);
}

TEST_CASE("boundary corrector cancels the normal flux on a skew polygon") {
  const auto p = build_polygon({{-9, -7}, {10, -7}, {6, 5}, {-9, 9}});
  const DislocationConfig cfg({{origin_cell(), 1}});
  const BoundaryCorrector c = solve_boundary_corrector(p, cfg);
  CHECK(c.triangles.size() > c.num_lattice_triangles);
  CHECK(c.harmonic_residual < 1e-8);
  const BondForm d = corrector_on_bonds(c, p);
  CHECK(d.values().allFinite());
}
