#pragma once

#include "antiplane/forms.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <string>

namespace antiplane {

class EnergyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Even, 1-periodic nearest-neighbour pair potential with derivatives.
struct PeriodicPotential {
  std::string kind;
  double parameter = 0.0;
  /// False for potentials that are not C^4 (excluded from Newton paths).
  bool smooth = true;
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;
  /// sup |psi'''|, the Lipschitz constant of the Hessian.
  double d3_bound = 0.0;
};

/// psi(r) = kappa (1 - cos 2 pi r) / (4 pi^2), so psi''(0) = kappa.
PeriodicPotential make_psi_cos(double kappa);
/// psi(r) = lambda dist(r, Z)^2 / 2; only C^0 at half-integers.
PeriodicPotential make_psi_lin(double lambda);

struct EnergyModel {
  ComplexPtr complex;
  PeriodicPotential potential;
};

/// Sum over bonds of psi(Dy_b).
double energy(const EnergyModel& model, const Displacement& y);
/// E(y; y_ref) = sum_b psi(Dy_b) - psi(Dy_ref_b).
double energy_difference(const EnergyModel& model, const Displacement& y, const Displacement& y_ref);

/// Per-site forces g with <dE(y), v> = sum_i g_i v_i.
Eigen::VectorXd gradient(const EnergyModel& model, const Displacement& y);
/// Action of the Hessian at y on v, as a per-site dual vector.
Eigen::VectorXd hessian_apply(const EnergyModel& model, const Displacement& y, const Displacement& v);
/// Hessian at y restricted to the free degrees of freedom of the complex.
Eigen::SparseMatrix<double> hessian_matrix(const EnergyModel& model, const Displacement& y);
/// Bond-graph Laplacian on the free degrees of freedom (the ||D.||_2 metric).
Eigen::SparseMatrix<double> laplacian_matrix(const LatticeComplex& complex);

/// Per-site vector -> free-dof vector.
Eigen::VectorXd restrict_to_dofs(const LatticeComplex& complex, const Eigen::VectorXd& per_site);
/// Free-dof vector -> per-site vector with zeros on clamped sites.
Eigen::VectorXd extend_from_dofs(const LatticeComplex& complex, const Eigen::VectorXd& per_dof);

}  // namespace antiplane
