"""Dimension of elliptic harmonic measure on snowspheres.

Postcritically finite rational maps, Birkhoff estimates of the Lyapunov
exponent, the densities ``kappa_j``, orbifold signatures and the chain
metric of abstract snowspheres.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .ratmap import RationalMap, builtin, catalog_names, load_map
from .sphere import INF, ONE, ZERO, RngStream, SpherePoint, chordal_distance

__all__ = [
    "BACKEND",
    "INF",
    "ONE",
    "ZERO",
    "RationalMap",
    "RngStream",
    "SpherePoint",
    "builtin",
    "catalog_names",
    "chordal_distance",
    "load_map",
    "__version__",
]
