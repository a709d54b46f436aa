#include <doctest.h>

#include "antiplane/predictor.hpp"
#include "antiplane/solver.hpp"

#include <cmath>
#include <sstream>

using namespace antiplane;

namespace {

const CoreCorrector& core24() {
  static const CoreCorrector core = compute_core_corrector({build_ball(24.0), make_psi_cos(1.0)});
  return core;
}

}  // namespace

TEST_CASE("cutoff profile") {
  CHECK(eta(0.0) == 1.0);
  CHECK(eta(0.75) == 1.0);
  CHECK(eta(1.0) == 0.0);
  CHECK(eta(2.0) == 0.0);
  CHECK(eta(0.875) == doctest::Approx(0.5));
  CHECK(eta(0.8) > eta(0.9));
}

TEST_CASE("disk-triangle integrals") {
  const std::array<Vec2, 3> tri{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  // triangle inside a large disk: area times the centroid value
  CHECK(disk_triangle_integral(tri, {1.0, 1.0, 1.0}, Vec2(0, 0), 10.0) == doctest::Approx(0.5));
  CHECK(disk_triangle_integral(tri, {0.0, 3.0, 0.0}, Vec2(0, 0), 10.0) == doctest::Approx(0.5));
  // quarter disk of radius 1/2 at the right-angle corner
  CHECK(disk_triangle_integral(tri, {1.0, 1.0, 1.0}, Vec2(0, 0), 0.5) == doctest::Approx(M_PI / 16.0));
  CHECK(disk_triangle_integral(tri, {1.0, 1.0, 1.0}, Vec2(5, 5), 1.0) == 0.0);
}

TEST_CASE("annulus mean reproduces constants and needs room") {
  const auto w = build_ball(20.0);
  const Displacement ones(w, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(w->num_sites())));
  CHECK(annulus_mean(ones, Vec2(0, 0), 8.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS(annulus_mean(ones, Vec2(0, 0), 19.5));
  CHECK_THROWS_AS(truncate(ones, {2.0}), std::invalid_argument);
  const Displacement t = truncate(ones, {8.0});
  CHECK(t.values().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("core corrector on a small window") {
  const CoreCorrector& core = core24();
  CHECK(core.lambda_d_estimate > 0.05);
  CHECK(core.lambda_d_estimate < 0.2);
  CHECK(core.residual < 1e-8);
  CHECK(core.decay_fit.slope < -1.0);
  CHECK(core.at({100, 100}) == 0.0);
  // hat_y + u keeps exactly one core
  const Displacement y = hat_y_on(core.u.complex()) + core.u;
  const auto cores = detect_cores(bond_length_form(y));
  REQUIRE(cores.size() == 1);
  CHECK(cores[0].cell == origin_cell());
}

TEST_CASE("core corrector preconditions") {
  CHECK_THROWS_AS(compute_core_corrector({build_ball(12.0), make_psi_cos(1.0)}), GeometryError);
  CHECK_THROWS_AS(compute_core_corrector({build_hexagon(20), make_psi_cos(1.0)}), GeometryError);
  CHECK_THROWS(compute_core_corrector({build_ball(20.0), make_psi_lin(1.0)}));
}

TEST_CASE("core corrector file round trip") {
  const CoreCorrector& core = core24();
  std::stringstream ss;
  write_core_corrector(ss, core);
  const CoreCorrector back = read_core_corrector(ss, core.potential);
  CHECK(back.window_radius == core.window_radius);
  CHECK(back.lambda_d_estimate == doctest::Approx(core.lambda_d_estimate));
  CHECK((back.u.values() - core.u.values()).cwiseAbs().maxCoeff() < 1e-14);
  std::stringstream again;
  write_core_corrector(again, core);
  CHECK_THROWS(read_core_corrector(again, make_psi_cos(2.0)));
}

TEST_CASE("predictor keeps the prescribed cores") {
  const CoreCorrector& core = core24();
  const auto w = build_ball(60.0);
  const DislocationConfig cfg({{Cell{{12, -1}, Orientation::down}, 1}, {Cell{{-12, -1}, Orientation::down}, -1}});
  const double R = default_radius_infinite(cfg, core);
  CHECK(R == doctest::Approx(23.0 / 5.0));
  const Displacement z = assemble_predictor_infinite(cfg, core, R, w);
  CHECK(z[w->anchor()] == 0.0);
  const auto found = detect_cores(bond_length_form(z));
  CHECK(found == cfg.cores());
}

TEST_CASE("close or misplaced cores are rejected") {
  const CoreCorrector& core = core24();
  const auto w = build_ball(40.0);
  const DislocationConfig close({{Cell{{2, -1}, Orientation::down}, 1}, {Cell{{-2, -1}, Orientation::down}, -1}});
  CHECK_THROWS_AS(assemble_predictor_infinite(close, core, default_radius_infinite(close, core), w), GeometryError);
  const DislocationConfig outside({{Cell{{80, 0}, Orientation::up}, 1}});
  CHECK_THROWS_AS(assemble_predictor_infinite(outside, core, 5.0, w), GeometryError);
}

TEST_CASE("polygon predictor adds the boundary corrector") {
  const CoreCorrector& core = core24();
  const auto h = build_hexagon(20);
  const DislocationConfig cfg({{origin_cell(), 1}});
  const BoundaryCorrector corr = solve_boundary_corrector(h, cfg);
  const double R = default_radius_polygon(cfg, core, *h);
  CHECK(R > 2.0);
  const Displacement z = assemble_predictor_polygon(cfg, core, R, h, corr);
  CHECK(detect_cores(bond_length_form(z)) == cfg.cores());
  const EnergyModel model{h, core.potential};
  // the boundary corrector removes the leading boundary force
  const double with = dual_norm(model, gradient(model, z));
  Displacement bare = z;
  bare.values() -= corr.nodal;
  const double without = dual_norm(model, gradient(model, bare));
  CHECK(with < 0.5 * without);
}

TEST_CASE("decay table fits a power law") {
  const DecayTable t = residual_decay_data({2.0, 4.0, 8.0, 16.0}, [](double x) { return 3.0 / (x * x); }, 2);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.slope == doctest::Approx(-2.0));
  CHECK(std::isnan(t.rows[0].slope_running));
  CHECK(t.rows[3].slope_running == doctest::Approx(-2.0));
  CHECK_THROWS(residual_decay_data({1.0, 2.0}, [](double) { return 1.0; }));
  CHECK_THROWS(residual_decay_data({1.0, 3.0, 2.0}, [](double) { return 1.0; }));
  const DecayTable bad = residual_decay_data({1.0, 2.0, 3.0, 4.0}, [](double x) {
    if (x == 2.0) throw std::runtime_error("boom");
    return 1.0 / x;
  });
  CHECK_FALSE(bad.rows[1].ok);
  CHECK(bad.slope == doctest::Approx(-1.0));
}
