#pragma once

#include "antiplane/energy.hpp"
#include "antiplane/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace antiplane {

/// A physical precondition fails, e.g. no strongly stable core exists.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sup <residual, phi> / ||D phi||_2 over phi vanishing on clamped sites,
/// via a conjugate-gradient solve of the bond Laplacian (relative tol 1e-10).
double dual_norm(const EnergyModel& model, const Eigen::VectorXd& residual);

/// Bond-Laplacian Riesz map with a reusable direct factorization.
class RieszMap {
 public:
  explicit RieszMap(const LatticeComplex& complex);
  /// Per-site representative v with L v = residual on free sites.
  [[nodiscard]] Eigen::VectorXd representative(const Eigen::VectorXd& residual) const;
  [[nodiscard]] double dual_norm(const Eigen::VectorXd& residual) const;

 private:
  const LatticeComplex* complex_;
  CholeskyFactor factor_;
};

/// Diagnostics of the quantitative inverse function theorem at the start
/// of a Newton correction.
struct IftDiagnostics {
  double mu = 0.0;  // smallest generalized Hessian eigenvalue at z
  double r = 0.0;   // initial dual residual
  double M = 0.0;   // Lipschitz constant of the Hessian, sup |psi'''|
  [[nodiscard]] double ratio() const { return mu > 0.0 ? 2.0 * M * r / (mu * mu) : INFINITY; }
};

struct EquilibriumReport {
  Displacement w;
  double dw_norm = 0.0;
  double residual_initial = 0.0;
  double residual_final = 0.0;
  double lambda_min = 0.0;
  std::vector<Core> cores;
  int newton_iters = 0;
  std::vector<double> residual_history;
  IftDiagnostics ift;
  std::string snapshot;  // path of the displacement snapshot, when written

  [[nodiscard]] bool strongly_stable() const { return lambda_min > 0.0; }
  [[nodiscard]] nlohmann::json to_json() const;
};

nlohmann::json cores_to_json(const std::vector<Core>& cores);

struct NewtonOptions {
  double tol = 1e-8;
  int max_iters = 50;
  double eigen_tol = 1e-8;
  bool compute_ift = true;
};

/// Damped Newton for z + w with w vanishing on clamped sites; Armijo
/// backtracking on the dual residual.
EquilibriumReport newton_correct(const EnergyModel& model, const Displacement& z, const NewtonOptions& opt = {});

/// Smallest lambda with H(y) v = lambda L v on free sites (block shifted
/// inverse iteration with Rayleigh-Ritz).
double min_eigenvalue(const EnergyModel& model, const Displacement& y, double tol = 1e-8, std::uint64_t seed = 7);

struct InstabilityWitness {
  double energy_gap = 0.0;
  double tail_bound = 0.0;
  /// max over far bonds of |wrap(D equilibrium - D v)|
  double tail_mismatch = 0.0;
  bool degenerate = false;
  int pairs = 0;
  /// Comparison state with integer bond differences.
  Displacement witness;
};

/// Energy comparison of a balanced equilibrium with the homogeneous state
/// through the dipole annihilation field.
InstabilityWitness global_instability_witness(const EnergyModel& model, const Displacement& equilibrium);

enum class Verdict : std::uint8_t { strongly_stable, indeterminate, unstable };
std::string to_string(Verdict v);

struct Certificate {
  Verdict verdict = Verdict::indeterminate;
  double lambda_min = 0.0;
  double worst_energy_change = 0.0;
  int failed_probes = 0;
};

/// Random probes u with ||Du||_2 = eps checking E(y + u; y) >= -1e-12,
/// combined with the sign of lambda_min.
Certificate certify(const EnergyModel& model, const Displacement& y, double eps, int trials, std::uint64_t seed = 1);

}  // namespace antiplane
