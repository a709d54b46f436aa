#include <doctest.h>

#include "antiplane/elasticity.hpp"
#include "antiplane/forms.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace antiplane;

namespace {

Displacement field_on(const ComplexPtr& w, const std::vector<std::pair<Cell, int>>& cores) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w->num_sites()));
  for (std::size_t i = 0; i < w->num_sites(); ++i)
    for (const auto& [c, s] : cores) v[static_cast<Eigen::Index>(i)] += s * hat_y(w->positions()[i] - c.barycenter());
  return {w, v};
}

}  // namespace

TEST_CASE("wrap_half ties") {
  CHECK(wrap_half(0.5) == 0.5);
  CHECK(wrap_half(-0.5) == 0.5);
  CHECK(wrap_half(0.5, -1) == -0.5);
  CHECK(wrap_half(1.25) == doctest::Approx(0.25));
  CHECK(wrap_half(-0.75) == doctest::Approx(0.25));
}

TEST_CASE("hat_y on the origin cell vertices") {
  const auto v = origin_cell().vertices();
  // vertices at angles 30, 150 and 270 degrees
  std::map<std::pair<int, int>, double> expect{{{0, 0}, 1.0 / 12}, {{-1, 0}, 5.0 / 12}, {{0, -1}, 0.75}};
  for (const auto& s : v) CHECK(hat_y(s.position()) == doctest::Approx(expect.at({s.m, s.n})).epsilon(1e-14));
}

TEST_CASE("hat_y has a single core at the origin cell") {
  const auto w = build_ball(12.0);
  const auto y = field_on(w, {{origin_cell(), 1}});
  const BondForm alpha = bond_length_form(y);
  const auto cores = detect_cores(alpha);
  REQUIRE(cores.size() == 1);
  CHECK(cores[0].cell == origin_cell());
  CHECK(cores[0].sign == 1);
  // every CCW difference around C_0 is 1/3
  for (const auto& b : origin_cell().boundary()) CHECK(alpha.at(b) == doctest::Approx(1.0 / 3.0));
  CHECK(boundary_circulation(alpha) == 1);
  CHECK(net_burgers(y) == 1);
}

TEST_CASE("circulations are integers and Stokes holds") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto p = build_polygon({{-9, -7}, {10, -7}, {6, 5}, {-9, 9}});
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(p->num_sites()));
    for (auto& x : v) x = u(rng);
    const BondForm alpha = bond_length_form(Displacement(p, v));
    int total = 0;
    for (std::size_t c = 0; c < p->num_cells(); ++c) {
      const int k = cell_circulation(alpha, static_cast<int>(c));
      CHECK(std::abs(k) <= 1);
      total += k;
    }
    CHECK(total == boundary_circulation(alpha));
  }
}

TEST_CASE("dipole field carries opposite cores") {
  const auto w = build_ball(20.0);
  const Cell plus{{4, -1}, Orientation::down};
  const Cell minus{{-4, -1}, Orientation::down};
  const auto y = field_on(w, {{plus, 1}, {minus, -1}});
  const auto cores = detect_cores(bond_length_form(y));
  REQUIRE(cores.size() == 2);
  const DislocationConfig cfg(cores);
  CHECK(cfg.net_burgers() == 0);
  CHECK(cfg.separation() == doctest::Approx(7.0));
  CHECK(net_burgers(y) == 0);
}

TEST_CASE("config metrics on a hexagon") {
  const auto h = build_hexagon(8);
  const DislocationConfig cfg({{origin_cell(), 1}});
  const auto m = config_metrics(cfg, *h);
  CHECK(std::isinf(m.L));
  CHECK(m.S == doctest::Approx(std::sqrt(3.0) / 2.0 * 7.0));
  CHECK_THROWS_AS(config_metrics(DislocationConfig({{Cell{{30, 0}, Orientation::up}, 1}}), *h), GeometryError);
}

TEST_CASE("displacement validation and text round trip") {
  const auto w = build_ball(5.0);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(w->num_sites()), -1.0, 2.0);
  CHECK_THROWS(Displacement(w, Eigen::VectorXd::Zero(3)));
  Eigen::VectorXd bad = v;
  bad[2] = NAN;
  CHECK_THROWS(Displacement(w, bad));
  const Displacement y(w, v);
  std::stringstream ss;
  write_displacement(ss, y);
  const Displacement back = read_displacement(ss, w);
  CHECK((back.values() - y.values()).norm() == 0.0);
  const Displacement a = y.anchored_copy();
  CHECK(a[w->anchor()] == 0.0);
  CHECK(a.anchored());
}

TEST_CASE("finite differences are antisymmetric") {
  const auto w = build_ball(4.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(w->num_sites()));
  for (std::size_t i = 0; i < w->num_sites(); ++i) v[static_cast<Eigen::Index>(i)] = w->positions()[i].x();
  const BondForm d = finite_difference(Displacement(w, v));
  const Bond b{{0, 0}, 1};
  CHECK(d.at(b) == doctest::Approx(1.0));
  CHECK(d.at(b.reverse()) == doctest::Approx(-1.0));
}

TEST_CASE("bond-length form ignores integer shifts") {
  const auto w = build_ball(7.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> k(-3, 3);
  Eigen::VectorXd v(static_cast<Eigen::Index>(w->num_sites())), shift(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = u(rng);
    shift[i] = k(rng);
  }
  const BondForm a = bond_length_form(Displacement(w, v));
  const BondForm b = bond_length_form(Displacement(w, v + shift));
  CHECK((a.values() - b.values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("interior ties do not change the Burgers vector") {
  const auto w = build_ball(6.0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w->num_sites()));
  v[w->index_of({1, 1})] = 0.5;  // every bond at this site is a tie
  const Displacement y(w, v);
  const BondForm alpha = bond_length_form(y);
  for (std::size_t c = 0; c < w->num_cells(); ++c) CHECK(std::abs(cell_circulation(alpha, static_cast<int>(c))) <= 1);
  CHECK(net_burgers(y) == 0);
  CHECK(net_burgers(y) == net_burgers(Displacement(w, -v)));
}

TEST_CASE("relabelling by an automorphism preserves the bond norm") {
  const auto w = build_ball(20.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w->num_sites()));
  for (std::size_t i = 0; i < w->num_sites(); ++i)
    if (w->positions()[i].norm() < 4.0) v[static_cast<Eigen::Index>(i)] = u(rng);
  const Displacement y(w, v);
  for (const Cell c : {Cell{{2, 1}, Orientation::up}, Cell{{-3, 2}, Orientation::down}}) {
    const Automorphism g(c);
    Eigen::VectorXd pulled(v.size());
    for (std::size_t i = 0; i < w->num_sites(); ++i) {
      const int j = w->index_of(g.forward(w->sites()[i]));
      pulled[static_cast<Eigen::Index>(i)] = j >= 0 ? v[j] : 0.0;
    }
    CHECK(finite_difference(Displacement(w, pulled)).norm2() == doctest::Approx(finite_difference(y).norm2()));
  }
}
