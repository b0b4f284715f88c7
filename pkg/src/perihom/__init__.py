"""Effective conductivity of periodic two-phase composites with temperature-dependent conductivities."""

from .averaging import (
    CellAverages,
    EffectiveCurve,
    cell_averages,
    cell_sweep_curve,
    compare_procedures,
    prepare_sweep,
    resistance_curve,
)
from .bounds import bounds_report, proportional_compare, voigt_reuss
from .cell_solver import CellProblem, HarmonicCellSolution, SolverError, linear_tensor, solve
from .conductivity import (
    ConductivityProfile,
    ContrastFamily,
    KirchhoffMap,
    NotProportionalError,
    reference_family,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .geometry import CellGeometry, Inclusion, reference_geometry, volume_fraction
from .reconstruction import NonlinearField, nonlinear_residual

__version__ = "0.1.0"

__all__ = [
    "CellAverages", "EffectiveCurve", "cell_averages", "cell_sweep_curve", "compare_procedures",
    "prepare_sweep", "resistance_curve", "bounds_report", "proportional_compare", "voigt_reuss",
    "CellProblem", "HarmonicCellSolution", "SolverError", "linear_tensor", "solve",
    "ConductivityProfile", "ContrastFamily", "KirchhoffMap", "NotProportionalError", "reference_family",
    "ConfigError", "RunConfig", "load_config", "parse_config",
    "CellGeometry", "Inclusion", "reference_geometry", "volume_fraction",
    "NonlinearField", "nonlinear_residual",
]
