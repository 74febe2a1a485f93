"""Numerical toolkit for bipartite Bell-scenario strategies."""

from __future__ import annotations

from .algebra import Field, StructureType, TypeTag, close_algebra, is_irreducible, structure_type
from .classify import RealnessReport, classify_strategy, moment_real_algebraic, moment_real_direct
from .dilation import (
    DilationWitness,
    check_complex_local_dilation,
    check_local_dilation,
    naimark_dilate,
    real_simulation_dilation_witness,
    restrict_to_support,
)
from .projgen import projections_quaternion, verify_generation
from .selftest import (
    bell_value,
    build_chsh_strategy,
    build_pauli3_strategy,
    build_quaternion_strategy,
    seesaw_optimize,
    six_chsh_functional,
)
from .strategy import Strategy, correlation, moment, real_simulation, validate

__version__ = "0.1.0"

__all__ = [
    "DilationWitness",
    "Field",
    "RealnessReport",
    "Strategy",
    "StructureType",
    "TypeTag",
    "bell_value",
    "build_chsh_strategy",
    "build_pauli3_strategy",
    "build_quaternion_strategy",
    "check_complex_local_dilation",
    "check_local_dilation",
    "classify_strategy",
    "close_algebra",
    "correlation",
    "is_irreducible",
    "moment",
    "moment_real_algebraic",
    "moment_real_direct",
    "naimark_dilate",
    "projections_quaternion",
    "real_simulation",
    "real_simulation_dilation_witness",
    "restrict_to_support",
    "seesaw_optimize",
    "six_chsh_functional",
    "structure_type",
    "validate",
    "verify_generation",
]
