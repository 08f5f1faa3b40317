"""Radial ground states and verification tools for the weighted mixed local/nonlocal Henon problem."""
from .functional import (
    AdmissibilityReport,
    EnergyBreakdown,
    InterpolationExponents,
    Verdict,
    classify,
    energy,
    gradient,
    interpolation_exponents,
    phi_p,
    residual,
)
from .io import load_solution, save_solution
from .kernel import (
    KernelMatrix,
    angular_kernel,
    assemble_kernel_matrix,
    gagliardo_seminorm,
    load_kernel,
    save_kernel,
    seminorm_oracle,
)
from .params import Params, p_star
from .radial import (
    RadialFunction,
    RadialGrid,
    interpolate,
    make_grid,
    radial_gradient_norm,
    sphere_area,
    weighted_lp_norm,
)
from .solver import SolveReport, SolverConfig, mountain_pass_geometry_check, nehari_scale, solve_ground_state

__version__ = "0.1.0"
