"""Asymptotic travelling-wave solutions with constant vorticity in the height-function formulation."""

__version__ = "0.1.0"

from .calibration import CalibrationResult, calibrate, select_b, select_btilde, stagnation_threshold, sweep
from .errors import (ConditioningWarning, DegenerateFitError, DomainError, NoDispersionRootError,
                     ResonantModeError, ShearWaveError, SingularCoefficientError, SingularDenominatorError,
                     StagnationError, StagnationWarning, UnreachableEpsilonError)
from .expansion import (Expansion, Partials, SecondOrderCoeffs, ThirdOrderCoeffs, evaluate_height,
                        first_order_term, make_expansion, second_order_coeffs, second_order_term,
                        third_order_coeffs, third_order_term)
from .fields import (FlowFieldGrid, SurfaceProfile, curvature_transition, flow_field, pressure,
                     streamline, surface_profile, velocity)
from .laminar import (FlowParams, LaminarState, hydraulic_head, laminar_height, linear_wave_speed,
                      r_profile, solve_dispersion)
from .oracle import (ModeBVP, extract_b_coefficient, finite_difference_partials,
                     measure_solvability_defect, run_verification, solve_mode_bvp)
from .residuals import (Grid, ResidualReport, bed_residual, fit_residual_order, interior_residual,
                        residual_norms, surface_residual)

__all__ = [
    "CalibrationResult", "ConditioningWarning", "DegenerateFitError", "DomainError", "Expansion",
    "FlowFieldGrid", "FlowParams", "Grid", "LaminarState", "ModeBVP", "NoDispersionRootError",
    "Partials", "ResidualReport", "ResonantModeError", "SecondOrderCoeffs", "ShearWaveError",
    "SingularCoefficientError", "SingularDenominatorError", "StagnationError", "StagnationWarning",
    "SurfaceProfile", "ThirdOrderCoeffs", "UnreachableEpsilonError", "bed_residual", "calibrate",
    "curvature_transition", "evaluate_height", "extract_b_coefficient", "finite_difference_partials",
    "first_order_term", "fit_residual_order", "flow_field", "hydraulic_head", "interior_residual",
    "laminar_height", "linear_wave_speed", "make_expansion", "measure_solvability_defect", "pressure",
    "r_profile", "residual_norms", "run_verification", "second_order_coeffs", "second_order_term",
    "select_b", "select_btilde", "solve_dispersion", "solve_mode_bvp", "stagnation_threshold",
    "streamline", "surface_profile", "surface_residual", "sweep", "third_order_coeffs",
    "third_order_term", "velocity",
]
