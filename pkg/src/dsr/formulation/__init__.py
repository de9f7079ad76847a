"""MILP formulations of multi-period feeder restoration.

Three kinds are supported: ``traditional`` (one energization binary per
load), ``block`` (one per load block) and ``block_gfm`` (blocks plus the
grid-forming coloring model).
"""

from .build import build_dsr, closed_form_binary_count
from .core import (
    GROUPS,
    BuildError,
    ConstraintGroupReport,
    DsrBuilder,
    FormulationKind,
    FormulationOptions,
    VarIndex,
)
from .gfm import add_gfm_coloring_constraints
from .loads import load_energy_weights, objective_coefficients
from .power import add_lindistflow_constraints, lindistflow_matrices, polygon_directions
from .topology import add_radiality_constraints

__all__ = [
    "GROUPS",
    "BuildError",
    "ConstraintGroupReport",
    "DsrBuilder",
    "FormulationKind",
    "FormulationOptions",
    "VarIndex",
    "add_gfm_coloring_constraints",
    "add_lindistflow_constraints",
    "add_radiality_constraints",
    "build_dsr",
    "closed_form_binary_count",
    "lindistflow_matrices",
    "load_energy_weights",
    "objective_coefficients",
    "polygon_directions",
]
