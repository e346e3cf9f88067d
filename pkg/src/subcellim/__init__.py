"""Entropy-stable subcell flux limiting for DG spectral element solvers."""

from .operators import QuadratureRule1D, OperatorSet, lgl_rule, build_operator_set, apply_axis
from .models import (ConservationLawModel, euler_model, kpp_model, llf_flux,
                     euler_flux, euler_entropy_quantities, specific_entropy_phi)
from .mesh import Mesh, ElementField, interval_mesh, rectangle_mesh, field_from_initial
from .limiter import LimiterConfig, LPInstance, greedy_solve, modal_smoothness, blending_alpha
from .timeloop import advance, cfl_dt, ssprk33_step, DiagnosticsRecord
from .problems import setup_problem, ProblemSetup
from .diagnostics import l2_error, entropy_residuals, convergence_table

__version__ = "0.1.0"

__all__ = [
    "QuadratureRule1D", "OperatorSet", "lgl_rule", "build_operator_set", "apply_axis",
    "ConservationLawModel", "euler_model", "kpp_model", "llf_flux",
    "euler_flux", "euler_entropy_quantities", "specific_entropy_phi",
    "Mesh", "ElementField", "interval_mesh", "rectangle_mesh", "field_from_initial",
    "LimiterConfig", "LPInstance", "greedy_solve", "modal_smoothness", "blending_alpha",
    "advance", "cfl_dt", "ssprk33_step", "DiagnosticsRecord",
    "setup_problem", "ProblemSetup",
    "l2_error", "entropy_residuals", "convergence_table",
    "__version__",
]
