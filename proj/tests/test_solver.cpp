#include <doctest.h>

#include "antiplane/predictor.hpp"
#include "antiplane/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

using namespace antiplane;

namespace {

Eigen::VectorXd random_dual(const LatticeComplex& w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::VectorXd r(static_cast<Eigen::Index>(w.num_sites()));
  for (auto& x : r) x = n(rng);
  return r;
}

const CoreCorrector& core24() {
  static const CoreCorrector core = compute_core_corrector({build_ball(24.0), make_psi_cos(1.0)});
  return core;
}

}  // namespace

TEST_CASE("dual norm agrees with a dense solve") {
  const auto w = build_ball(6.0);
  const EnergyModel model{w, make_psi_cos(1.0)};
  const Eigen::VectorXd r = random_dual(*w, 1);
  const Eigen::MatrixXd L(laplacian_matrix(*w));
  const Eigen::VectorXd rf = restrict_to_dofs(*w, r);
  const double dense = std::sqrt(rf.dot(L.ldlt().solve(rf)));
  CHECK(dual_norm(model, r) == doctest::Approx(dense).epsilon(1e-8));
  const RieszMap riesz(*w);
  CHECK(riesz.dual_norm(r) == doctest::Approx(dense).epsilon(1e-10));
}

TEST_CASE("dual norm on a polygon ignores the gauge") {
  const auto p = build_hexagon(6);
  const EnergyModel model{p, make_psi_cos(1.0)};
  Eigen::VectorXd r = random_dual(*p, 2);
  const RieszMap riesz(*p);
  CHECK(riesz.dual_norm(r) == doctest::Approx(dual_norm(model, r)).epsilon(1e-8));
}

TEST_CASE("homogeneous state has eigenvalue kappa") {
  for (double radius : {6.0, 14.0}) {
    const auto w = build_ball(radius);
    const EnergyModel model{w, make_psi_cos(2.0)};
    CHECK(min_eigenvalue(model, Displacement::zero(w)) == doctest::Approx(2.0).epsilon(1e-7));
  }
}

TEST_CASE("dense and iterative eigenvalues agree") {
  // n below and above the dense threshold for the same kind of state
  const auto w = build_ball(14.0);
  REQUIRE(w->num_dofs() > 400);
  const EnergyModel model{w, make_psi_cos(1.0)};
  const Displacement y = hat_y_on(w);
  const double it = min_eigenvalue(model, y);
  const auto H = hessian_matrix(model, y);
  const Eigen::MatrixXd Hd(H), Ld(laplacian_matrix(*w));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Hd, Ld);
  CHECK(it == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-6));
}

TEST_CASE("Newton equilibrates a single core") {
  const CoreCorrector& core = core24();
  const auto w = build_ball(40.0);
  const DislocationConfig cfg({{origin_cell(), 1}});
  const Displacement z = assemble_predictor_infinite(cfg, core, default_radius_infinite(cfg, core), w);
  const EnergyModel model{w, core.potential};
  const EquilibriumReport rep = newton_correct(model, z);
  CHECK(rep.residual_final < 1e-8);
  CHECK(rep.residual_final < rep.residual_initial);
  CHECK(rep.strongly_stable());
  CHECK(rep.cores == cfg.cores());
  CHECK(rep.ift.mu > 0.0);
  CHECK(rep.residual_history.size() == static_cast<std::size_t>(rep.newton_iters + 1));
  const auto j = rep.to_json();
  CHECK(j.contains("lambda_min"));
  const Certificate cert = certify(model, z + rep.w, 0.1, 4);
  CHECK(cert.verdict == Verdict::strongly_stable);
  CHECK(cert.failed_probes == 0);
}

TEST_CASE("Newton reports non-convergence") {
  const auto w = build_ball(10.0);
  const EnergyModel model{w, make_psi_cos(1.0)};
  const Displacement z = hat_y_on(w);
  NewtonOptions opt;
  opt.tol = 1e-30;
  opt.max_iters = 1;
  CHECK_THROWS_AS(newton_correct(model, z, opt), SolverError);
}

TEST_CASE("witness preconditions") {
  const auto w = build_ball(30.0);
  const EnergyModel model{w, make_psi_cos(1.0)};
  const InstabilityWitness none = global_instability_witness(model, Displacement::zero(w));
  CHECK(none.degenerate);
  CHECK(none.pairs == 0);
  CHECK_THROWS_AS(global_instability_witness(model, hat_y_on(w)), std::invalid_argument);
}

TEST_CASE("verdict names") {
  CHECK(to_string(Verdict::strongly_stable) == "strongly_stable");
  CHECK(to_string(Verdict::unstable) == "unstable");
  CHECK(to_string(Verdict::indeterminate) == "indeterminate");
}
