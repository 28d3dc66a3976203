"""Numerical laboratory for ``sigma_2(A(rho, u)) = f(u)`` on R^4.

``A(rho, u) = -D^2 u + rho du (x) du - rho/2 |du|^2 I``. The package solves
the radial problem, evaluates the level-set mass along super-solutions and
checks the integral identities the equation satisfies.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .functions import BETA, S3_AREA, FSpec, KSpec
from .radial import (
    DomainError,
    GaugeError,
    NonexistenceError,
    RadialProfile,
    asymptotic_slope,
    solve_radial,
    solve_radial_general,
)

__all__ = [
    "__version__",
    "BETA",
    "S3_AREA",
    "FSpec",
    "KSpec",
    "DomainError",
    "GaugeError",
    "NonexistenceError",
    "RadialProfile",
    "asymptotic_slope",
    "solve_radial",
    "solve_radial_general",
]
