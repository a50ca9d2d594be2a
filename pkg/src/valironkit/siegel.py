"""Geometry of the unit ball B^N and the Siegel domain H^N.

Vectors are 1-d complex numpy arrays.  Inner products are linear in the first
slot: ``(z, w) = sum z_j conj(w_j)``.  The ball Cayley transform used
everywhere is::

    w1 = i (1 + z1) / (1 - z1),    w' = z' / (1 - z1)

so that ``C(0) = iota = (i, 0')`` and ``height(C(z)) = (1-|z|^2)/|1-z1|^2``.

Quantities that degenerate near the boundary of the ball (``1-|z|^2``,
``Q``, the Koranyi functional) have exact Siegel-coordinate forms below.
Those forms are what the orbit code uses, since ball coordinates lose every
significant digit once ``1-|z|`` drops under ~1e-16.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

BOUNDARY_EPS = 1e-15
KORANYI_THRESHOLD = 3.0 - np.sqrt(8.0)


def _vec(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


def inner(z, w) -> complex:
    return complex(np.vdot(_vec(w), _vec(z)))


def norm2(z) -> float:
    z = _vec(z)
    return float(np.real(np.vdot(z, z)))


@dataclass(frozen=True, eq=False)
class BallPoint:
    coords: np.ndarray

    def __post_init__(self):
        c = _vec(self.coords).copy()
        if not np.sqrt(norm2(c)) < 1.0 - BOUNDARY_EPS:
            raise DomainError("point is not inside the unit ball")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def N(self) -> int:
        return self.coords.size


@dataclass(frozen=True, eq=False)
class SiegelPoint:
    w1: complex
    wprime: np.ndarray

    def __post_init__(self):
        wp = np.asarray(self.wprime, dtype=complex).reshape(-1).copy()
        wp.setflags(write=False)
        object.__setattr__(self, "w1", complex(self.w1))
        object.__setattr__(self, "wprime", wp)
        if not self.height > 0:
            raise DomainError("point is not in the Siegel domain")

    @classmethod
    def from_vector(cls, w) -> "SiegelPoint":
        w = _vec(w)
        return cls(w[0], w[1:])

    @property
    def height(self) -> float:
        return self.w1.imag - norm2(self.wprime)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([[self.w1], self.wprime])


def iota(N: int) -> np.ndarray:
    v = np.zeros(N, dtype=complex)
    v[0] = 1j
    return v


def height(w) -> float:
    w = _vec(w)
    return float(w[0].imag - norm2(w[1:]))


def boundary_defect(w) -> float:
    """``Im w1 - |w'|^2``, zero on the boundary of H^N."""
    return height(w)


# --- ball ------------------------------------------------------------------

def ball_automorphism(a, z) -> np.ndarray:
    """gamma_a(z) = (P_a z + s_a Q_a z - a) / (1 - (z, a)), gamma_0 = -id."""
    a, z = _vec(a), _vec(z)
    aa = norm2(a)
    if aa == 0.0:
        return -z
    if aa >= 1.0:
        raise DomainError("automorphism centre must lie inside the ball")
    za = inner(z, a)
    p = (za / aa) * a
    q = z - p
    s = np.sqrt(1.0 - aa)
    return (p + s * q - a) / (1.0 - za)


def ball_distance(a, b) -> float:
    """Pseudo-hyperbolic distance ``|gamma_a(b)|`` in the ball."""
    return float(np.sqrt(norm2(ball_automorphism(a, b))))


def q_quantity(a, b) -> float:
    """``|1-(a,b)|^2 / ((1-|a|^2)(1-|b|^2))`` in ball coordinates."""
    a, b = _vec(a), _vec(b)
    return abs(1.0 - inner(a, b)) ** 2 / ((1.0 - norm2(a)) * (1.0 - norm2(b)))


def koranyi_functional(z) -> float:
    """``|1 - z1| / (1 - |z|^2)`` at a ball point."""
    z = _vec(z)
    return abs(1.0 - z[0]) / (1.0 - norm2(z))


# --- Cayley ----------------------------------------------------------------

def ball_cayley(z) -> np.ndarray:
    z = _vec(z)
    if abs(1.0 - z[0]) <= BOUNDARY_EPS:
        raise DomainError("the ball Cayley transform sends e1 to infinity")
    den = 1.0 - z[0]
    out = z / den
    out[0] = 1j * (1.0 + z[0]) / den
    return out


def ball_cayley_inverse(w) -> np.ndarray:
    w = _vec(w)
    den = w[0] + 1j
    out = 2j * w / den
    out[0] = (w[0] - 1j) / den
    return out


# --- exact Siegel-coordinate forms of ball quantities -----------------------

def siegel_one_minus_norm2(w) -> float:
    """``1 - |z|^2`` for ``z = C^{-1}(w)``: ``4 h(w) / |w1 + i|^2``."""
    w = _vec(w)
    r = abs(w[0] + 1j)
    return 4.0 * (height(w) / r) / r


def siegel_one_minus_norm(w) -> float:
    """``1 - |z|`` for ``z = C^{-1}(w)`` without cancellation."""
    omn2 = siegel_one_minus_norm2(w)
    nz = np.sqrt(max(0.0, 1.0 - omn2))
    return omn2 / (1.0 + nz)


def siegel_koranyi(w) -> float:
    """Koranyi functional of ``C^{-1}(w)``: ``|w1 + i| / (2 h(w))``."""
    w = _vec(w)
    return abs(w[0] + 1j) / (2.0 * height(w))


def siegel_one_minus_z1(w) -> complex:
    """``1 - z1`` for ``z = C^{-1}(w)``: ``2i / (w1 + i)``."""
    w = _vec(w)
    return 2j / (w[0] + 1j)


def siegel_q(w, v) -> float:
    """Q of the ball preimages: ``|w1 - conj(v1) - 2i<w',v'>|^2 / (4 h(w) h(v))``."""
    w, v = _vec(w), _vec(v)
    x = w[0] - np.conj(v[0]) - 2j * complex(np.vdot(v[1:], w[1:]))
    r = abs(x) / (2.0 * np.sqrt(height(w)) * np.sqrt(height(v)))
    return float(r * r)


def siegel_normalize(a, w) -> np.ndarray:
    """Automorphism of H^N sending ``a`` to iota, applied to ``w``."""
    a, w = _vec(a), _vec(w)
    A = height(a)
    ap = a[1:]
    out = np.empty_like(w)
    out[0] = (w[0] - a[0].real + 1j * norm2(ap) - 2j * complex(np.vdot(ap, w[1:]))) / A
    out[1:] = (w[1:] - ap) / np.sqrt(A)
    return out


def siegel_distance(a, b) -> float:
    """Pseudo-hyperbolic distance of the ball preimages, computed without
    passing through ball coordinates of points near the boundary."""
    u = siegel_normalize(a, b)
    return float(np.sqrt(norm2(ball_cayley_inverse(u))))


# --- automorphisms of H^N ---------------------------------------------------

def on_boundary(b, tol: float = 1e-12) -> bool:
    b = _vec(b)
    return abs(b[0].imag - norm2(b[1:])) <= tol * max(1.0, abs(b[0].imag))


def siegel_translation(b, w) -> np.ndarray:
    """Heisenberg translation ``(w1 + b1 + 2i<w',b'>, w' + b')``; b on the boundary."""
    b, w = _vec(b), _vec(w)
    if not on_boundary(b):
        raise DomainError("translation parameter must lie on the boundary of H^N")
    out = w + b
    out[0] = w[0] + b[0] + 2j * complex(np.vdot(b[1:], w[1:]))
    return out


def heisenberg_inverse(b) -> np.ndarray:
    """Parameter of the inverse translation: ``(-b1 + 2i|b'|^2, -b')``."""
    b = _vec(b)
    out = -b
    out[0] = -b[0] + 2j * norm2(b[1:])
    return out


def siegel_dilation(A: float, w) -> np.ndarray:
    if not A > 0:
        raise ValueError("dilation factor must be positive")
    w = _vec(w).copy()
    w[1:] *= np.sqrt(A)
    w[0] *= A
    return w


def check_unitary(U, tol: float = 1e-10) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    if U.shape[0] != U.shape[1]:
        raise ValueError("unitary must be square")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])), initial=0.0) > tol:
        raise ValueError("matrix is not unitary")
    return U


def _check_psi(A, a, U):
    a = _vec(a)
    if not A > 1:
        raise ValueError("hyperbolic automorphism needs A > 1")
    h = height(a)
    if abs(h - A) > 1e-10 * max(1.0, A):
        raise ValueError(f"height of a is {h}, expected A = {A}")
    U = check_unitary(U if U is not None else np.eye(a.size - 1))
    if U.shape[0] != a.size - 1:
        raise ValueError("unitary must act on the last N-1 coordinates")
    return a, U


def psi_automorphism(A: float, a, U, z) -> np.ndarray:
    """Hyperbolic automorphism of H^N with attracting point infinity, Psi(iota) = a.

    ``Psi(z) = (A z1 + Re a1 + i|a'|^2 + 2i sqrt(A) <U z', a'>, sqrt(A) U z' + a')``
    """
    a, U = _check_psi(A, a, U)
    z = _vec(z)
    sA = np.sqrt(A)
    ap = a[1:]
    uz = U @ z[1:]
    out = np.empty_like(z)
    out[0] = A * z[0] + a[0].real + 1j * norm2(ap) + 2j * sA * complex(np.vdot(ap, uz))
    out[1:] = sA * uz + ap
    return out


def psi_boundary_fixed_point(A: float, a, U) -> np.ndarray:
    """The finite fixed point of Psi on the boundary of H^N."""
    a, U = _check_psi(A, a, U)
    sA = np.sqrt(A)
    n = a.size - 1
    Uinv = U.conj().T
    M = np.eye(n) - Uinv / sA
    cp = np.linalg.solve(M, -(Uinv @ a[1:]) / sA) if n else np.zeros(0, complex)
    rhs = a[0].real + 1j * norm2(a[1:]) + 2j * sA * complex(np.vdot(a[1:], U @ cp))
    c1 = rhs / (1.0 - A)
    return np.concatenate([[c1], cp])


def psi0(A: float, U, z) -> np.ndarray:
    """Normal form ``(A z1, sqrt(A) U z')`` of a hyperbolic automorphism."""
    z = _vec(z)
    U = check_unitary(U if U is not None else np.eye(z.size - 1))
    out = np.empty_like(z)
    out[0] = A * z[0]
    out[1:] = np.sqrt(A) * (U @ z[1:])
    return out
