"""Numerical iteration theory of hyperbolic self-maps of the disk, the upper
half-plane and the unit ball: orbits, Denjoy-Wolff points, dilatation
coefficients, the Valiron/Pommerenke intertwining map, Koenigs maps, the
Heins curve, and Korányi-region confinement in several variables.
"""

__version__ = "0.1.0"

from .errors import (BranchError, ConvergenceError, DescriptorError, DomainError,  # noqa: E402
                     Inconclusive, NotSelfMap)
from .maps import MapDescriptor, derivative, evaluate, from_json, validate_self_map  # noqa: E402

__all__ = [
    "__version__", "MapDescriptor", "evaluate", "derivative", "from_json", "validate_self_map",
    "DomainError", "DescriptorError", "BranchError", "ConvergenceError", "Inconclusive", "NotSelfMap",
]
