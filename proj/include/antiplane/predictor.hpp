#pragma once

#include "antiplane/elasticity.hpp"
#include "antiplane/energy.hpp"
#include "antiplane/linalg.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace antiplane {

/// Decaying lattice displacement u with hat_y + u an equilibrium on a ball
/// window around the origin cell (zero clamp on the window boundary).
struct CoreCorrector {
  Displacement u;
  PeriodicPotential potential;
  double lambda_d_estimate = 0.0;
  PowerLawFit decay_fit;
  double window_radius = 0.0;
  double residual = 0.0;
  int newton_iters = 0;

  /// u at a lattice site, zero outside the window.
  [[nodiscard]] double at(LatticeSite s) const;
};

struct CoreCorrectorOptions {
  double tol = 1e-9;
  int max_iters = 60;
  double eigen_tol = 1e-8;
  /// Decay fit range in units of the window radius.
  double fit_min = 3.0;
  double fit_max_fraction = 0.5;
};

/// hat_y evaluated at every site of a complex (no anchoring).
Displacement hat_y_on(const ComplexPtr& complex);

/// Newton minimisation of E(hat_y + u; hat_y) on a ball window.
CoreCorrector compute_core_corrector(const EnergyModel& model, const CoreCorrectorOptions& opt = {});

/// Reads back the core corrector file written by write_core_corrector.
void write_core_corrector(std::ostream& out, const CoreCorrector& core);
CoreCorrector read_core_corrector(std::istream& in, const PeriodicPotential& potential);

/// Shell maxima of |Du_b| against dist(b, C_0), used for the decay fit.
struct DecaySample {
  std::vector<double> distance;
  std::vector<double> magnitude;
};
DecaySample corrector_decay(const Displacement& u, double dmin, double dmax);

struct TruncationParams {
  double R = 0.0;
  Cell center_cell = origin_cell();
};

/// Cutoff profile: 1 on [0, 3/4], 0 on [1, inf), cubic Hermite in between.
double eta(double t);

/// Integral of a linear function a + b.(x - center) over T intersected with
/// the disk of radius rho around center (exact).
double disk_triangle_integral(const std::array<Vec2, 3>& tri, const std::array<double, 3>& values, const Vec2& center,
                              double rho);

/// Mean of the P1 interpolant of u over x^C + (B_R \ B_{R/2+1}).
double annulus_mean(const Displacement& u, const Vec2& center, double R);

/// Pi_R u = eta(|x - x^C| / R) (u - a_R).
Displacement truncate(const Displacement& u, const TruncationParams& params);

/// Default truncation radii: L_D / 5 on the lattice, min(L_D / 5, sqrt S_D)
/// on polygons. A lone core uses the largest radius the core window allows.
double default_radius_infinite(const DislocationConfig& config, const CoreCorrector& core);
double default_radius_polygon(const DislocationConfig& config, const CoreCorrector& core, const LatticeComplex& polygon);

/// z = sum_s s (hat_y + Pi_R u) o G^C, shifted to vanish at the anchor.
Displacement assemble_predictor_infinite(const DislocationConfig& config, const CoreCorrector& core, double R,
                                         const ComplexPtr& window);

/// Lattice sum plus the boundary corrector's nodal values.
Displacement assemble_predictor_polygon(const DislocationConfig& config, const CoreCorrector& core, double R,
                                        const ComplexPtr& polygon, const BoundaryCorrector& corr);

struct DecayRow {
  double parameter = 0.0;
  double residual = 0.0;
  double slope_running = 0.0;  // NaN until two rows succeeded
  bool ok = true;
  std::string error;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  double slope = 0.0;
};

/// Runs `measure` on each sweep value (ascending, at least three), keeping
/// rows in sweep order; failing rows are marked and skipped by the fit.
DecayTable residual_decay_data(const std::vector<double>& values, const std::function<double(double)>& measure,
                               int jobs = 1);

}  // namespace antiplane
