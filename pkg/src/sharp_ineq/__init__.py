"""Sharp fractional Sobolev and HLS inequalities on R^n and S^n, numerically."""
from .errors import (
    AccuracyError,
    DomainError,
    InsufficientDataError,
    LiftError,
    PositivityError,
    PreconditionError,
    RangeError,
    RegularityError,
    SharpIneqError,
    SingularityError,
    StiffnessError,
)
from .special import Params, sobolev_constant

__all__ = [
    "AccuracyError",
    "DomainError",
    "InsufficientDataError",
    "LiftError",
    "Params",
    "PositivityError",
    "PreconditionError",
    "RangeError",
    "RegularityError",
    "SharpIneqError",
    "SingularityError",
    "StiffnessError",
    "sobolev_constant",
]
