#pragma once

#include "antiplane/lattice.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace antiplane {

/// Internal consistency failure, e.g. a non-integer cell circulation.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Real-valued function on the sites of a complex.
class Displacement {
 public:
  Displacement() = default;
  Displacement(ComplexPtr complex, Eigen::VectorXd values, bool anchored = false);

  static Displacement zero(ComplexPtr complex);

  [[nodiscard]] const ComplexPtr& complex() const { return complex_; }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  [[nodiscard]] Eigen::VectorXd& values() { return values_; }
  [[nodiscard]] double operator[](int site) const { return values_[site]; }
  [[nodiscard]] double at(LatticeSite s) const;
  [[nodiscard]] bool anchored() const { return anchored_; }

  /// Copy shifted so that the anchor site carries 0.
  [[nodiscard]] Displacement anchored_copy() const;

  Displacement& operator+=(const Displacement& other);
  Displacement& operator-=(const Displacement& other);
  Displacement& operator*=(double s);

 private:
  ComplexPtr complex_;
  Eigen::VectorXd values_;
  bool anchored_ = false;
};

Displacement operator+(Displacement a, const Displacement& b);
Displacement operator-(Displacement a, const Displacement& b);
Displacement operator*(double s, Displacement a);

/// Antisymmetric function on bonds, stored once per canonical bond.
class BondForm {
 public:
  BondForm() = default;
  BondForm(ComplexPtr complex, Eigen::VectorXd values);

  [[nodiscard]] const ComplexPtr& complex() const { return complex_; }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  [[nodiscard]] Eigen::VectorXd& values() { return values_; }
  /// Value on an oriented bond; reversed bonds read the negated value.
  [[nodiscard]] double at(const Bond& b) const;
  [[nodiscard]] double norm2() const { return values_.norm(); }

 private:
  ComplexPtr complex_;
  Eigen::VectorXd values_;
};

/// Dy_b = y(head) - y(tail).
BondForm finite_difference(const Displacement& y);

/// Representative of x modulo 1 in (-1/2, 1/2] (tie = +1) or [-1/2, 1/2)
/// (tie = -1).
double wrap_half(double x, int tie = 1);

/// Canonical bond-length form alpha in [Dy]. Boundary bonds of W follow the
/// half-open rule on their positive orientation; interior ties resolve to
/// +1/2 on the stored orientation.
BondForm bond_length_form(const Displacement& y);
BondForm bond_length_form(const BondForm& dy);

/// Integral of alpha around the positively oriented boundary of a cell.
int cell_circulation(const BondForm& alpha, int cell_index);
int cell_circulation(const BondForm& alpha, const Cell& cell);

struct Core {
  Cell cell;
  int sign = 1;

  auto operator<=>(const Core&) const = default;
};

/// All cells with circulation +-1, in complex order.
std::vector<Core> detect_cores(const BondForm& alpha);

/// Integral of alpha along the positively oriented boundary of W.
int boundary_circulation(const BondForm& alpha);

/// Sum of circulations over detected cores.
int net_burgers(const Displacement& y);

/// Finite set of cores with Burgers vectors +-1.
class DislocationConfig {
 public:
  DislocationConfig() = default;
  explicit DislocationConfig(std::vector<Core> cores);

  [[nodiscard]] const std::vector<Core>& cores() const { return cores_; }
  [[nodiscard]] std::size_t size() const { return cores_.size(); }
  [[nodiscard]] bool empty() const { return cores_.empty(); }
  [[nodiscard]] int net_burgers() const;

  /// Minimum pairwise set distance between distinct core cells; +inf for
  /// fewer than two cores.
  [[nodiscard]] double separation() const;

 private:
  std::vector<Core> cores_;
};

struct ConfigMetrics {
  double L = 0.0;  // minimum core separation
  double S = 0.0;  // minimum core distance to the boundary of W
};

/// Throws GeometryError when a core cell is not part of the complex.
ConfigMetrics config_metrics(const DislocationConfig& config, const LatticeComplex& complex);

// columnar text: "m n value" per site, "m n dir value" per canonical bond
void write_displacement(std::ostream& out, const Displacement& y);
Displacement read_displacement(std::istream& in, ComplexPtr complex);
void write_bond_form(std::ostream& out, const BondForm& f);

}  // namespace antiplane
