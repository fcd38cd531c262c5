"""Numerics for the pq-biharmonic eigenvalue problem with Navier boundary conditions."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .dynamics import ProblemParams, detect_blowup, integrate, spow
from .errors import (
    DomainError,
    IntegrationError,
    NoZeroFound,
    QuadratureError,
    ShootingError,
    StiffnessError,
)
from .gentrig import GenTrigParams, cos_rs, pi_rs, sin_rs
from .shooting import Eigenfunction, mismatch, solve_eigenproblem, solve_first
from .spectral import embedding_norm, s_number_bounds

__all__ = [
    "DomainError",
    "Eigenfunction",
    "GenTrigParams",
    "IntegrationError",
    "NoZeroFound",
    "ProblemParams",
    "QuadratureError",
    "ShootingError",
    "StiffnessError",
    "cos_rs",
    "detect_blowup",
    "embedding_norm",
    "integrate",
    "mismatch",
    "pi_rs",
    "s_number_bounds",
    "sin_rs",
    "solve_eigenproblem",
    "solve_first",
    "spow",
]
