"""Finite element solver for diffraction by gratings of negative-index material."""

from .exceptions import (
    DegenerateLayer,
    InsufficientSampling,
    InvalidConfig,
    MeshError,
    NimGratingError,
    SingularSystem,
    TruncationMismatch,
    WoodAnomaly,
)
from .problem import (
    GratingProfile,
    Numerics,
    ProblemConfig,
    Region,
    derive_scalars,
    load_config,
    reference_config,
    reference_flat_config,
    validate,
)
from .mesh import Mesh, build_mesh, refine
from .dtn import ModeSet, TraceCoefficients, build_mode_set
from .assembly import AssembledSystem, assemble
from .solver import ComplexField, SolveReport, laps_continuation, prepare, solve, stability_sweep
from .oracle import l2_error, solve_flat
from .analysis import adn_check, adn_sweep, coercivity_check, extension_R, trace_norm

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "ComplexField", "DegenerateLayer", "GratingProfile", "InsufficientSampling",
    "InvalidConfig", "Mesh", "MeshError", "ModeSet", "NimGratingError", "Numerics", "ProblemConfig",
    "Region", "SingularSystem", "SolveReport", "TraceCoefficients", "TruncationMismatch", "WoodAnomaly",
    "adn_check", "adn_sweep", "assemble", "build_mesh", "build_mode_set", "coercivity_check",
    "derive_scalars", "extension_R", "l2_error", "laps_continuation", "load_config", "prepare",
    "reference_config", "reference_flat_config", "refine", "solve", "solve_flat", "stability_sweep",
    "trace_norm", "validate",
]
