#include "antiplane/energy.hpp"

#include <cmath>
#include <vector>

namespace antiplane {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double dist_to_integers(double r) { return r - std::round(r); }

void check_differentiable(const PeriodicPotential& psi, double r) {
  if (psi.smooth) return;
  if (std::abs(std::abs(dist_to_integers(r)) - 0.5) < 1e-12)
    throw EnergyError("nondifferentiable point of " + psi.kind + " potential at bond difference " + std::to_string(r));
}

template <class F>
Eigen::SparseMatrix<double> assemble_weighted_laplacian(const LatticeComplex& c, F weight) {
  const auto& dof = c.dof_of_site();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * c.num_bonds());
  const auto& bonds = c.bonds();
  for (std::size_t k = 0; k < bonds.size(); ++k) {
    const double w = weight(k);
    const int i = dof[static_cast<std::size_t>(bonds[k].tail)];
    const int j = dof[static_cast<std::size_t>(bonds[k].head)];
    if (i >= 0) t.emplace_back(i, i, w);
    if (j >= 0) t.emplace_back(j, j, w);
    if (i >= 0 && j >= 0) {
      t.emplace_back(i, j, -w);
      t.emplace_back(j, i, -w);
    }
  }
  Eigen::SparseMatrix<double> a(c.num_dofs(), c.num_dofs());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

}  // namespace

PeriodicPotential make_psi_cos(double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("psi_cos requires kappa > 0");
  PeriodicPotential p;
  p.kind = "cos";
  p.parameter = kappa;
  p.smooth = true;
  p.value = [kappa](double r) { return kappa * (1.0 - std::cos(kTwoPi * r)) / (kTwoPi * kTwoPi); };
  p.d1 = [kappa](double r) { return kappa * std::sin(kTwoPi * r) / kTwoPi; };
  p.d2 = [kappa](double r) { return kappa * std::cos(kTwoPi * r); };
  p.d3 = [kappa](double r) { return -kappa * kTwoPi * std::sin(kTwoPi * r); };
  p.d3_bound = kappa * kTwoPi;
  return p;
}

PeriodicPotential make_psi_lin(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("psi_lin requires lambda > 0");
  PeriodicPotential p;
  p.kind = "lin";
  p.parameter = lambda;
  p.smooth = false;
  p.value = [lambda](double r) {
    const double d = dist_to_integers(r);
    return 0.5 * lambda * d * d;
  };
  p.d1 = [lambda](double r) { return lambda * dist_to_integers(r); };
  p.d2 = [lambda](double) { return lambda; };
  p.d3 = [](double) { return 0.0; };
  p.d3_bound = 0.0;
  return p;
}

double energy(const EnergyModel& model, const Displacement& y) {
  CompensatedSum sum;
  for (const auto& b : model.complex->bonds()) sum.add(model.potential.value(y[b.head] - y[b.tail]));
  return sum.value();
}

double energy_difference(const EnergyModel& model, const Displacement& y, const Displacement& y_ref) {
  CompensatedSum sum;
  const auto& psi = model.potential.value;
  for (const auto& b : model.complex->bonds()) {
    sum.add(psi(y[b.head] - y[b.tail]));
    sum.add(-psi(y_ref[b.head] - y_ref[b.tail]));
  }
  return sum.value();
}

Eigen::VectorXd gradient(const EnergyModel& model, const Displacement& y) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(y.values().size());
  for (const auto& b : model.complex->bonds()) {
    const double r = y[b.head] - y[b.tail];
    check_differentiable(model.potential, r);
    const double f = model.potential.d1(r);
    g[b.head] += f;
    g[b.tail] -= f;
  }
  return g;
}

Eigen::VectorXd hessian_apply(const EnergyModel& model, const Displacement& y, const Displacement& v) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(y.values().size());
  for (const auto& b : model.complex->bonds()) {
    const double r = y[b.head] - y[b.tail];
    check_differentiable(model.potential, r);
    const double f = model.potential.d2(r) * (v[b.head] - v[b.tail]);
    h[b.head] += f;
    h[b.tail] -= f;
  }
  return h;
}

Eigen::SparseMatrix<double> hessian_matrix(const EnergyModel& model, const Displacement& y) {
  const auto& bonds = model.complex->bonds();
  return assemble_weighted_laplacian(*model.complex, [&](std::size_t k) {
    const double r = y[bonds[k].head] - y[bonds[k].tail];
    check_differentiable(model.potential, r);
    return model.potential.d2(r);
  });
}

Eigen::SparseMatrix<double> laplacian_matrix(const LatticeComplex& complex) {
  return assemble_weighted_laplacian(complex, [](std::size_t) { return 1.0; });
}

Eigen::VectorXd restrict_to_dofs(const LatticeComplex& complex, const Eigen::VectorXd& per_site) {
  const auto& sites = complex.site_of_dof();
  Eigen::VectorXd r(static_cast<Eigen::Index>(sites.size()));
  for (std::size_t i = 0; i < sites.size(); ++i) r[static_cast<Eigen::Index>(i)] = per_site[sites[i]];
  return r;
}

Eigen::VectorXd extend_from_dofs(const LatticeComplex& complex, const Eigen::VectorXd& per_dof) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(complex.num_sites()));
  const auto& sites = complex.site_of_dof();
  for (std::size_t i = 0; i < sites.size(); ++i) r[sites[i]] = per_dof[static_cast<Eigen::Index>(i)];
  return r;
}

}  // namespace antiplane
