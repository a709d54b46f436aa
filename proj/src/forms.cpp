#include "antiplane/forms.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace antiplane {

Displacement::Displacement(ComplexPtr complex, Eigen::VectorXd values, bool anchored)
    : complex_(std::move(complex)), values_(std::move(values)), anchored_(anchored) {
  if (!complex_) throw std::invalid_argument("displacement without complex");
  if (values_.size() != static_cast<Eigen::Index>(complex_->num_sites()))
    throw std::invalid_argument("displacement size does not match complex");
  if (!values_.allFinite()) throw std::invalid_argument("displacement has non-finite values");
  if (anchored_ && values_[complex_->anchor()] != 0.0)
    throw std::invalid_argument("anchored displacement must vanish at the anchor site");
}

Displacement Displacement::zero(ComplexPtr complex) {
  const auto n = static_cast<Eigen::Index>(complex->num_sites());
  return {std::move(complex), Eigen::VectorXd::Zero(n), true};
}

double Displacement::at(LatticeSite s) const {
  const int i = complex_->index_of(s);
  if (i < 0) throw GeometryError("site outside the complex");
  return values_[i];
}

Displacement Displacement::anchored_copy() const {
  Eigen::VectorXd v = values_.array() - values_[complex_->anchor()];
  return {complex_, std::move(v), true};
}

Displacement& Displacement::operator+=(const Displacement& other) {
  values_ += other.values_;
  anchored_ = anchored_ && other.anchored_;
  return *this;
}

Displacement& Displacement::operator-=(const Displacement& other) {
  values_ -= other.values_;
  anchored_ = anchored_ && other.anchored_;
  return *this;
}

Displacement& Displacement::operator*=(double s) {
  values_ *= s;
  return *this;
}

Displacement operator+(Displacement a, const Displacement& b) { return a += b; }
Displacement operator-(Displacement a, const Displacement& b) { return a -= b; }
Displacement operator*(double s, Displacement a) { return a *= s; }

BondForm::BondForm(ComplexPtr complex, Eigen::VectorXd values)
    : complex_(std::move(complex)), values_(std::move(values)) {
  if (values_.size() != static_cast<Eigen::Index>(complex_->num_bonds()))
    throw std::invalid_argument("bond form size does not match complex");
}

double BondForm::at(const Bond& b) const {
  int sign = 1;
  const int k = complex_->bond_index(b, &sign);
  if (k < 0) throw GeometryError("bond outside the complex");
  return sign * values_[k];
}

BondForm finite_difference(const Displacement& y) {
  const auto& c = *y.complex();
  Eigen::VectorXd d(static_cast<Eigen::Index>(c.num_bonds()));
  const auto& bonds = c.bonds();
  for (std::size_t k = 0; k < bonds.size(); ++k)
    d[static_cast<Eigen::Index>(k)] = y[bonds[k].head] - y[bonds[k].tail];
  return {y.complex(), std::move(d)};
}

double wrap_half(double x, int tie) {
  if (tie >= 0) return x - std::ceil(x - 0.5);
  return x - std::floor(x + 0.5);
}

BondForm bond_length_form(const BondForm& dy) {
  const auto& bonds = dy.complex()->bonds();
  Eigen::VectorXd a(dy.values().size());
  for (Eigen::Index k = 0; k < a.size(); ++k)
    a[k] = wrap_half(dy.values()[k], bonds[static_cast<std::size_t>(k)].tie);
  return {dy.complex(), std::move(a)};
}

BondForm bond_length_form(const Displacement& y) { return bond_length_form(finite_difference(y)); }

int cell_circulation(const BondForm& alpha, int cell_index) {
  const auto& rec = alpha.complex()->cells()[static_cast<std::size_t>(cell_index)];
  double sum = 0.0;
  for (std::size_t k = 0; k < 3; ++k) sum += rec.signs[k] * alpha.values()[rec.bonds[k]];
  const double r = std::round(sum);
  if (std::abs(sum - r) > 1e-9) throw ConsistencyError("non-integer cell circulation");
  return static_cast<int>(r);
}

int cell_circulation(const BondForm& alpha, const Cell& cell) {
  const int k = alpha.complex()->cell_index(cell);
  if (k < 0) throw GeometryError("cell outside the complex");
  return cell_circulation(alpha, k);
}

std::vector<Core> detect_cores(const BondForm& alpha) {
  std::vector<Core> cores;
  const auto& cells = alpha.complex()->cells();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const int c = cell_circulation(alpha, static_cast<int>(k));
    if (c != 0) cores.push_back({cells[k].cell, c});
  }
  return cores;
}

int boundary_circulation(const BondForm& alpha) {
  double sum = 0.0;
  for (const auto& b : alpha.complex()->boundary_bonds()) sum += b.sign * alpha.values()[b.bond];
  const double r = std::round(sum);
  if (std::abs(sum - r) > 1e-9) throw ConsistencyError("non-integer boundary circulation");
  return static_cast<int>(r);
}

int net_burgers(const Displacement& y) {
  int total = 0;
  for (const auto& c : detect_cores(bond_length_form(y))) total += c.sign;
  return total;
}

DislocationConfig::DislocationConfig(std::vector<Core> cores) {
  std::sort(cores.begin(), cores.end());
  cores.erase(std::unique(cores.begin(), cores.end()), cores.end());
  for (std::size_t i = 0; i + 1 < cores.size(); ++i)
    if (cores[i].cell == cores[i + 1].cell)
      throw GeometryError("configuration lists one cell with both Burgers vectors");
  for (const auto& c : cores)
    if (c.sign != 1 && c.sign != -1) throw GeometryError("core sign must be +1 or -1");
  cores_ = std::move(cores);
}

int DislocationConfig::net_burgers() const {
  int total = 0;
  for (const auto& c : cores_) total += c.sign;
  return total;
}

double DislocationConfig::separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cores_.size(); ++i)
    for (std::size_t j = i + 1; j < cores_.size(); ++j) best = std::min(best, dist(cores_[i].cell, cores_[j].cell));
  return best;
}

ConfigMetrics config_metrics(const DislocationConfig& config, const LatticeComplex& complex) {
  ConfigMetrics m{config.separation(), std::numeric_limits<double>::infinity()};
  for (const auto& c : config.cores()) {
    if (complex.cell_index(c.cell) < 0) throw GeometryError("core cell outside the domain");
    m.S = std::min(m.S, distance_to_boundary(complex, c.cell));
  }
  return m;
}

void write_displacement(std::ostream& out, const Displacement& y) {
  const auto& sites = y.complex()->sites();
  out << "# m n value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < sites.size(); ++i)
    out << sites[i].m << ' ' << sites[i].n << ' ' << y[static_cast<int>(i)] << '\n';
}

Displacement read_displacement(std::istream& in, ComplexPtr complex) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(complex->num_sites()));
  std::vector<char> seen(complex->num_sites(), 0);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    LatticeSite s;
    double value = 0.0;
    if (!(row >> s.m >> s.n >> value)) throw std::runtime_error("malformed displacement row: " + line);
    const int i = complex->index_of(s);
    if (i < 0) continue;
    v[i] = value;
    seen[static_cast<std::size_t>(i)] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::runtime_error("displacement file does not cover every site");
  return {std::move(complex), std::move(v)};
}

void write_bond_form(std::ostream& out, const BondForm& f) {
  const auto& c = *f.complex();
  out << "# m n dir value\n" << std::setprecision(17);
  for (std::size_t k = 0; k < c.num_bonds(); ++k) {
    const Bond b = c.bond(static_cast<int>(k));
    out << b.tail.m << ' ' << b.tail.n << ' ' << b.dir << ' ' << f.values()[static_cast<Eigen::Index>(k)] << '\n';
  }
}

}  // namespace antiplane
