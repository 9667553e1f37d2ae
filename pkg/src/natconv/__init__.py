"""Penalized equal-order finite elements for buoyancy-driven flow.

Linear velocity, pressure and temperature on a structured triangulation
of the unit square, stabilized by a pressure penalty instead of an
inf-sup stable pair.  The package provides the penalized Stokes
projection, the coupled implicit time stepper, and convergence-study
tooling around both.
"""

from .analysis import (
    ConvergenceTable,
    ErrorRecord,
    convergence_rates,
    emit_table,
    error_norm,
    parse_table,
)
from .cases import GAMMA_POLICIES, Case, PhysicalParams, gamma_value, make_case
from .fem import FEFunction, FunctionSpace, interpolate
from .mesh import Mesh, build_uniform_square_mesh
from .projection import PenaltyForm, ProjectedPair, modified_projection
from .reference import ensure_reference, generate_reference, load_reference
from .solver import (
    ConvectionSystem,
    SystemState,
    TimeScheme,
    initial_state,
    run_transient,
)
from .study import StudyConfig, count_dofs, run_study, temporal_orders

__version__ = "0.1.0"

__all__ = [
    "GAMMA_POLICIES",
    "Case",
    "ConvectionSystem",
    "ConvergenceTable",
    "ErrorRecord",
    "FEFunction",
    "FunctionSpace",
    "Mesh",
    "PenaltyForm",
    "PhysicalParams",
    "ProjectedPair",
    "StudyConfig",
    "SystemState",
    "TimeScheme",
    "build_uniform_square_mesh",
    "convergence_rates",
    "count_dofs",
    "emit_table",
    "ensure_reference",
    "error_norm",
    "gamma_value",
    "generate_reference",
    "initial_state",
    "interpolate",
    "load_reference",
    "make_case",
    "modified_projection",
    "parse_table",
    "run_study",
    "run_transient",
    "temporal_orders",
    "__version__",
]
