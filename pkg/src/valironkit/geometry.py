"""Invariant geometry of the unit disk and the upper half-plane.

Points are plain complex numbers at the function level; the small point
classes below exist to validate inputs at API boundaries.  The Cayley
convention is fixed once for the whole package::

    C(z) = i (1 + z) / (1 - z),      C(0) = i,  C(1) = infinity.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DomainError

BOUNDARY_EPS = 1e-15


@dataclass(frozen=True)
class DiskPoint:
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not abs(v) < 1.0 - BOUNDARY_EPS:
            raise DomainError(f"{v} is not inside the unit disk")
        object.__setattr__(self, "value", v)

    def __complex__(self):
        return self.value


@dataclass(frozen=True)
class HalfPlanePoint:
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not v.imag > BOUNDARY_EPS:
            raise DomainError(f"{v} is not in the upper half-plane")
        object.__setattr__(self, "value", v)

    def __complex__(self):
        return self.value


@dataclass(frozen=True)
class Horodisk:
    """Horodisk ``{(1-|z|^2)/|base-z|^2 > 1/level}`` tangent at ``base``."""

    base: complex
    level: float

    def __post_init__(self):
        b = complex(self.base)
        if abs(abs(b) - 1.0) > 1e-12:
            raise ValueError("horodisk base must lie on the unit circle")
        if not self.level > 0:
            raise ValueError("horodisk level must be positive")
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "level", float(self.level))


def _c(z) -> complex:
    return complex(z)


def pseudo_distance(z, w) -> float:
    """Pseudo-hyperbolic distance ``|z - w| / |1 - conj(w) z|`` in the disk."""
    z, w = _c(z), _c(w)
    return abs(z - w) / abs(1.0 - w.conjugate() * z)


def hyperbolic_distance(z, w) -> float:
    d = pseudo_distance(z, w)
    return math.log1p(d) - math.log1p(-d)


def halfplane_pseudo_distance(z, w) -> float:
    """Pseudo-hyperbolic distance in H: ``|z - w| / |z - conj(w)|``."""
    z, w = _c(z), _c(w)
    return abs(z - w) / abs(z - w.conjugate())


def disk_automorphism(a, c, z) -> complex:
    """``c (z - a) / (1 - conj(a) z)``; with ``c = 1`` this is gamma_a."""
    a, c, z = _c(a), _c(c), _c(z)
    if abs(a) >= 1.0:
        raise DomainError("automorphism centre must lie inside the disk")
    if abs(abs(c) - 1.0) > 1e-12:
        raise ValueError("rotation factor must have unit modulus")
    return c * (z - a) / (1.0 - a.conjugate() * z)


def cayley_to_halfplane(z) -> complex:
    z = _c(z)
    if abs(1.0 - z) <= BOUNDARY_EPS:
        raise DomainError("the Cayley transform sends 1 to infinity")
    return 1j * (1.0 + z) / (1.0 - z)


def cayley_to_disk(w) -> complex:
    """Inverse Cayley transform ``(w - i) / (w + i)``."""
    w = _c(w)
    if cmath.isinf(w):
        return 1.0 + 0j
    return (w - 1j) / (w + 1j)


def poisson_ratio(zeta, z) -> float:
    """``(1 - |z|^2) / |zeta - z|^2``; level function of the horodisks at zeta."""
    zeta, z = _c(zeta), _c(z)
    return (1.0 - abs(z) ** 2) / abs(zeta - z) ** 2


def horodisk_contains(h: Horodisk, z) -> bool:
    return poisson_ratio(h.base, z) > 1.0 / h.level


def pseudo_disk_boundary(a, r, n=64):
    """``n`` points on the boundary circle of the pseudo-hyperbolic disk Delta(a, r)."""
    a = _c(a)
    out = []
    for k in range(n):
        u = r * cmath.exp(2j * math.pi * k / n)
        # gamma_a^{-1}(u) = (u + a) / (1 + conj(a) u)
        out.append((u + a) / (1.0 + a.conjugate() * u))
    return out
