"""Anti-plane screw dislocations on the triangular lattice."""

from antiplane._core import (
    Complex,
    CoreCorrector,
    Potential,
    build_ball,
    build_hexagon,
    build_polygon,
    compute_core_corrector,
    detect_cores,
    dual_norm,
    energy,
    equilibrate,
    gradient,
    hat_y,
    hat_y_on,
    min_eigenvalue,
    parse_manifest,
    psi_cos,
    psi_lin,
    run_cli,
)

__all__ = [
    "Complex",
    "CoreCorrector",
    "Potential",
    "build_ball",
    "build_hexagon",
    "build_polygon",
    "compute_core_corrector",
    "detect_cores",
    "dual_norm",
    "energy",
    "equilibrate",
    "gradient",
    "hat_y",
    "hat_y_on",
    "min_eigenvalue",
    "parse_manifest",
    "psi_cos",
    "psi_lin",
    "run_cli",
]
