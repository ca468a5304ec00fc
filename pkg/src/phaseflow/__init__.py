"""phaseflow: higher-order phase-transition energies at desk scale.

A library and CLI for discretizing and minimizing double-well energies
singularly perturbed by derivative terms of orders 1..k, with general
symmetric-tensor norms and possibly negative intermediate coefficients.
It estimates optimal-profile constants, interpolation thresholds for the
negative coefficients, anisotropic cell densities, and runs sharp-interface
convergence experiments.
"""

__version__ = "0.1.0"

from .potential import PotentialSpec, quartic, eval_potential, eval_potential_slope, check_hypotheses
from .tensors import SymTensor, NormSpec, apply_direction, operatorial_norm, norm_value, equivalence_constants
from .discretize import (
    Grid1D,
    Grid2D,
    Field1D,
    Field2D,
    FunctionalSpec,
    EnergyReport,
    derivative_1d,
    grad_tensor_2d,
    assemble_energy,
    assemble_gradient,
)
from .boundary import BoundaryProfile, build_boundary_profile
from .profile1d import ProfileProblem, ProfileSolution, solve_profile, estimate_m, estimate_m_k, tail_diagnostics
from .interpolation import (
    InterpolationReport,
    check_unit_interval,
    check_scaled,
    adversarial_threshold,
    lower_bound_delta,
    functional_lower_bound_check,
)
from .cell2d import (
    CellProblem,
    CellResult,
    solve_cell,
    estimate_g,
    anisotropy_scan,
    basis_independence_check,
    positivity_check,
)
from .gamma import InterfaceSpec, GammaReport, predicted_limit, run_gamma_1d, run_gamma_2d, compactness_probe

__all__ = [
    "__version__",
    "PotentialSpec",
    "quartic",
    "eval_potential",
    "eval_potential_slope",
    "check_hypotheses",
    "SymTensor",
    "NormSpec",
    "apply_direction",
    "operatorial_norm",
    "norm_value",
    "equivalence_constants",
    "Grid1D",
    "Grid2D",
    "Field1D",
    "Field2D",
    "FunctionalSpec",
    "EnergyReport",
    "derivative_1d",
    "grad_tensor_2d",
    "assemble_energy",
    "assemble_gradient",
    "BoundaryProfile",
    "build_boundary_profile",
    "ProfileProblem",
    "ProfileSolution",
    "solve_profile",
    "estimate_m",
    "estimate_m_k",
    "tail_diagnostics",
    "InterpolationReport",
    "check_unit_interval",
    "check_scaled",
    "adversarial_threshold",
    "lower_bound_delta",
    "functional_lower_bound_check",
    "CellProblem",
    "CellResult",
    "solve_cell",
    "estimate_g",
    "anisotropy_scan",
    "basis_independence_check",
    "positivity_check",
    "InterfaceSpec",
    "GammaReport",
    "predicted_limit",
    "run_gamma_1d",
    "run_gamma_2d",
    "compactness_probe",
]
