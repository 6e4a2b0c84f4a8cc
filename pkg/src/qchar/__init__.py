"""Phase-space quantum dynamics with quantum characteristics.

Exact star-product algebra on polynomial symbols (:mod:`qchar.poly`),
tau-series of quantum phase flow (:mod:`qchar.dynamics`), a semiclassical
ODE propagator (:mod:`qchar.semiclassical`), Gaussian Wigner expectations
(:mod:`qchar.wigner`), constraint projection (:mod:`qchar.constraints`) and a
truncated star product for smooth symbols (:mod:`qchar.numstar`).
"""
import logging

from .dynamics import (
    CLASSICAL,
    QUANTUM,
    canonicity_deviation,
    check_inertia_flow,
    conjugate_flow,
    dot_compose,
    flow_series,
    inertia_flow,
    observable_series,
    star_compose,
    verify_identity,
)
from .poly import (
    DimensionError,
    PolySymbol,
    SymplecticStructure,
    circ_product,
    evaluate,
    grade_extract,
    is_linear,
    moyal_and_circ,
    moyal_bracket,
    multiply,
    partial_derivative,
    poisson_bracket,
    star_product,
    symmetrized_circ_power,
)
from .records import VerificationRecord
from .series import TauSeries, TruncationError

__version__ = "0.1.0"

__all__ = [
    "CLASSICAL",
    "QUANTUM",
    "DimensionError",
    "PolySymbol",
    "SymplecticStructure",
    "TauSeries",
    "TruncationError",
    "VerificationRecord",
    "canonicity_deviation",
    "check_inertia_flow",
    "circ_product",
    "conjugate_flow",
    "dot_compose",
    "evaluate",
    "flow_series",
    "grade_extract",
    "inertia_flow",
    "is_linear",
    "moyal_and_circ",
    "moyal_bracket",
    "multiply",
    "observable_series",
    "partial_derivative",
    "poisson_bracket",
    "star_compose",
    "star_product",
    "symmetrized_circ_power",
    "verify_identity",
]

logging.getLogger(__name__).addHandler(logging.NullHandler())
