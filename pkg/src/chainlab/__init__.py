"""chainlab: a numerical laboratory for chains on strictly pseudoconvex
hypersurfaces in C^2.

The package builds the Fefferman light-cone Hamiltonian of a hypersurface
given in Chern-Moser-style graph form, integrates its chain flow, and tests
chain traces against the moment conditions for stationary-disc attachment.
"""

from __future__ import annotations

from .series import Jet, WeightedSeries
from .surface import (
    Hypersurface,
    MongeAmpereApprox,
    SurfacePoint,
    approx_ma_solutions,
    monge_ampere,
)
from .hamiltonian import PhasePoint, Hamiltonian, make_hamiltonian, truncation_gap
from .flow import (
    FamilySeed,
    ChainTrajectory,
    ScanEntry,
    FitResult,
    integrate_chain,
    solve_initial_chi,
    detect_period,
    family_scan,
    fit_cubic_coefficient,
    single_orbit_cubic,
    sphere_chain_closed_form,
)
from .moments import (
    DiscReport,
    ObstructionResult,
    ObstructionRun,
    StationarityReport,
    SurfaceCurve,
    contour_moment,
    fourier_coeffs,
    stationarity_integrands,
    stationarity_residual,
    obstruction_scan,
    verify_sphere_disc,
)

__version__ = "0.1.0"

__all__ = [
    "Jet",
    "WeightedSeries",
    "Hypersurface",
    "MongeAmpereApprox",
    "SurfacePoint",
    "approx_ma_solutions",
    "monge_ampere",
    "PhasePoint",
    "Hamiltonian",
    "make_hamiltonian",
    "truncation_gap",
    "FamilySeed",
    "ChainTrajectory",
    "ScanEntry",
    "FitResult",
    "integrate_chain",
    "solve_initial_chi",
    "detect_period",
    "family_scan",
    "fit_cubic_coefficient",
    "single_orbit_cubic",
    "sphere_chain_closed_form",
    "DiscReport",
    "ObstructionResult",
    "ObstructionRun",
    "StationarityReport",
    "SurfaceCurve",
    "contour_moment",
    "fourier_coeffs",
    "stationarity_integrands",
    "stationarity_residual",
    "obstruction_scan",
    "verify_sphere_disc",
    "__version__",
]
