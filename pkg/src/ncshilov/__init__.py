"""Noncommutative Shilov boundaries, multiplier algebras and operator-algebra certificates
for finite-dimensional operator spaces."""

__version__ = "0.1.0"

from .envelope import TripleEnvelope, complete_isometry_defect, linking_algebra, triple_envelope
from .errors import NcShilovError
from .matcore import DEFAULT_TOL, Tolerances
from .multiplier import adjointable_left, left_multipliers, multiplier_norm, right_multipliers
from .opspace import OperatorSpace

__all__ = [
    "DEFAULT_TOL",
    "NcShilovError",
    "OperatorSpace",
    "Tolerances",
    "TripleEnvelope",
    "adjointable_left",
    "complete_isometry_defect",
    "left_multipliers",
    "linking_algebra",
    "multiplier_norm",
    "right_multipliers",
    "triple_envelope",
]
