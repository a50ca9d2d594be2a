"""Dynamics of hyperbolic self-maps of the ball, computed in Siegel coordinates.

The Denjoy-Wolff point is always ``e1`` in the ball, i.e. infinity in H^N.
Orbits are iterated in H^N, where the quantities that matter have exact
closed forms (``h`` is the height ``Im w1 - |w'|^2``)::

    1 - |z|^2 = 4 h / |w1 + i|^2
    L         = |1 - z1| / (1 - |z|^2) = |w1 + i| / (2 h)
    S_n       = |w1_n + i| / |w1_{n+1} + i|

so nothing is lost when ``1 - |z_n|`` drops far below machine epsilon.
Geometry primitives live in :mod:`valironkit.siegel` and are re-exported here.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import accel
from .errors import DomainError
from .maps import (MapDescriptor, evaluate, evaluate_unchecked, halton, iterate_descriptor,
                   require_self_map, sample_points, unwrap_cayley)
from .siegel import (KORANYI_THRESHOLD, BallPoint, SiegelPoint, ball_automorphism,  # noqa: F401
                     ball_cayley, ball_cayley_inverse, ball_distance, height, iota, koranyi_functional,
                     psi0, psi_automorphism, psi_boundary_fixed_point, q_quantity, siegel_distance,
                     siegel_dilation, siegel_koranyi, siegel_one_minus_norm, siegel_q,
                     siegel_translation)

OVERFLOW_GUARD = 1e300
AGREEMENT_TOL = 1e-4
JULIA_SLACK = 1e-9
STABLE_WINDOW = 25
STABLE_REL = 1e-6


def siegel_form(m: MapDescriptor) -> MapDescriptor | None:
    """The H^N version of ``m`` when it is available without round-off."""
    if m.domain == "siegel":
        return m
    if m.domain == "ball":
        return unwrap_cayley(m)
    raise ValueError("ball dynamics need a ball or Siegel map")


def to_siegel_point(m: MapDescriptor, z) -> np.ndarray:
    """Start points are given in the ball (BallPoint / vector) for ball maps
    and for Siegel maps alike; SiegelPoint inputs pass through."""
    if isinstance(z, SiegelPoint):
        return z.vector
    if isinstance(z, BallPoint):
        z = z.coords
    return ball_cayley(BallPoint(z).coords)


def siegel_orbit(core: MapDescriptor, w0, n: int) -> np.ndarray:
    """Columns ``w_0..w_n`` (fewer if the overflow guard trips)."""
    w = np.asarray(w0, dtype=complex)
    out = [w]
    for _ in range(n):
        w = np.asarray(evaluate(core, w), dtype=complex)
        if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > OVERFLOW_GUARD:
            break
        out.append(w)
    return np.array(out).T


# --- dilatation coefficient -----------------------------------------------------------

@dataclass
class BallDilatation:
    c: float
    radial: accel.LimitEstimate
    orbital: accel.LimitEstimate
    flagged: bool
    iterate_law: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _radial_sequence(m: MapDescriptor, ks) -> np.ndarray:
    core = siegel_form(m)
    if core is not None:
        y = 2.0 ** (ks + 1) - 1.0           # C(r e1) = (i (1+r)/(1-r), 0'),  r = 1 - 2^-k
        w = np.zeros((m.N, ks.size), dtype=complex)
        w[0] = 1j * y
        img = evaluate(core, w)
        return np.array([siegel_one_minus_norm(img[:, j]) for j in range(ks.size)]) * 2.0 ** ks
    z = np.zeros((m.N, ks.size), dtype=complex)
    z[0] = 1.0 - 2.0 ** (-ks)
    img = evaluate(m, z)
    return (1.0 - np.sqrt(np.sum(np.abs(img) ** 2, axis=0))) * 2.0 ** ks


def _orbital_sequence(m: MapDescriptor, n: int) -> np.ndarray:
    core = siegel_form(m)
    if core is not None:
        orb = siegel_orbit(core, iota(m.N), n)
        e = np.array([siegel_one_minus_norm(orb[:, j]) for j in range(orb.shape[1])])
    else:
        z = np.zeros(m.N, dtype=complex)
        e = [1.0]
        for _ in range(n):
            z = evaluate(m, z)
            r = 1.0 - np.sqrt(np.sum(np.abs(z) ** 2))
            if r < 1e-13:
                break
            e.append(r)
        e = np.array(e)
    e = e[e > 0]
    return e[1:] / e[:-1]


def ball_dilatation(m: MapDescriptor, check_iterates=(2, 3), orbit_steps: int = 60) -> BallDilatation:
    """Radial and orbital estimates of the dilatation coefficient at ``e1``, plus
    the iterate law ``c(phi_n) = c^n`` (10% relative)."""
    require_self_map(m)
    ks = np.arange(4, 41)
    radial = accel.limit(_radial_sequence(m, ks))
    orb = _orbital_sequence(m, orbit_steps)
    orbital = accel.limit(orb) if orb.size else radial
    c = float(np.real(radial.value))
    notes = []
    flagged = abs(c - float(np.real(orbital.value))) > AGREEMENT_TOL
    if flagged:
        notes.append("radial and orbital estimates disagree")
    if not c > 1e-8:
        flagged = True
        notes.append("estimated c is not positive")
    law = {}
    for n in check_iterates:
        mn = iterate_descriptor(m, n)
        cn = float(np.real(accel.limit(_radial_sequence(mn, ks)).value))
        rel = abs(cn - c ** n) / c ** n
        law[n] = {"c_n": cn, "c_pow_n": c ** n, "rel_err": rel, "ok": bool(rel <= 0.1)}
        if rel > 0.1:
            flagged = True
            notes.append(f"iterate law fails for n={n}")
    return BallDilatation(c, radial, orbital, flagged, law, notes)


# --- Koranyi trace ----------------------------------------------------------------------

@dataclass
class KoranyiTrace:
    w: np.ndarray              # Siegel orbit, shape (N, n+1)
    L: np.ndarray
    S: np.ndarray
    heights: np.ndarray
    z1: np.ndarray             # first ball coordinate of each orbit point
    c: float
    sup_L: float
    argmax: int
    bounded_verdict: bool
    stable: bool
    max_julia_excess: float

    @property
    def julia_ok(self) -> bool:
        return self.max_julia_excess <= 0.0

    def rows(self):
        for n in range(self.L.size):
            yield {"n": n, "L": self.L[n], "S": self.S[n] if n < self.S.size else "",
                   "height": self.heights[n], "re_z1": self.z1[n].real, "im_z1": self.z1[n].imag}

    def write_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            wr = csv.DictWriter(fh, fieldnames=["n", "L", "S", "height", "re_z1", "im_z1"],
                                lineterminator="\n")
            wr.writeheader()
            for row in self.rows():
                wr.writerow({k: (repr(float(v)) if not isinstance(v, (str, int)) else v)
                             for k, v in row.items()})


def bounded_verdict(L: np.ndarray, tail_frac: float = 0.25, rel: float = 1e-9) -> tuple[bool, int]:
    """Max over the computed range is (up to rounding) attained before the final quarter.

    A sequence that has converged ties its running maximum to within rounding
    in the tail; ties up to ``rel`` count as attained early.
    """
    cut = int(np.floor(L.size * (1.0 - tail_frac)))
    head, tail = np.max(L[:cut]), np.max(L[cut:])
    return bool(tail <= head * (1.0 + rel)), int(np.argmax(L))


def _stable(L: np.ndarray) -> bool:
    w = L[-(STABLE_WINDOW + 1):]
    return bool(np.max(np.abs(np.diff(w)) / np.abs(w[1:])) < STABLE_REL)


def _trace_from_orbit(orb: np.ndarray, c: float) -> KoranyiTrace:
    r = np.abs(orb[0] + 1j)
    h = np.array([height(orb[:, j]) for j in range(orb.shape[1])])
    if np.any(h <= 0):
        raise DomainError("orbit left the Siegel domain")
    L = r / (2.0 * h)
    S = r[:-1] / r[1:]
    z1 = (orb[0] - 1j) / (orb[0] + 1j)
    # S_n <= c L_n / L_{n+1} and the ball Julia inequality both reduce to h_{n+1} >= h_n / c
    excess = S / (c * L[:-1] / L[1:]) - (1.0 + JULIA_SLACK)
    bounded, amax = bounded_verdict(L)
    return KoranyiTrace(orb, L, S, h, z1, c, float(np.max(L)), amax, bounded, _stable(L),
                        float(np.max(excess, initial=-np.inf)))


def koranyi_trace(m: MapDescriptor, z0, n: int = 200, c: float | None = None) -> KoranyiTrace:
    """``L_n`` and ``S_n`` along the orbit of ``z0`` (a ball point)."""
    require_self_map(m)
    core = siegel_form(m)
    if core is None:
        raise ValueError("koranyi_trace needs a Siegel map or a Cayley-transported one")
    if c is None:
        c = ball_dilatation(m, check_iterates=()).c
    orb = siegel_orbit(core, to_siegel_point(m, z0), n)
    if orb.shape[1] < n + 1:
        raise DomainError(f"orbit overflowed after {orb.shape[1] - 1} steps")
    return _trace_from_orbit(orb, c)


def julia_along_orbit(tr: KoranyiTrace) -> float:
    """Largest relative excess of ``|1-z1_{n+1}|^2/(1-|z_{n+1}|^2)`` over
    ``c |1-z1_n|^2/(1-|z_n|^2)``; both sides equal ``1/h`` in Siegel coordinates."""
    lhs = 1.0 / tr.heights[1:]
    rhs = tr.c / tr.heights[:-1]
    return float(max(0.0, np.max(lhs / rhs - 1.0)))


# --- Claim extension via iterates -------------------------------------------------------------

@dataclass
class ClaimExtension:
    N_power: int
    c: float
    c_power: float
    iterate_trace: KoranyiTrace
    full_L: np.ndarray
    sup_L: float
    bounded: bool
    interleave_excess: float

    @property
    def interleave_ok(self) -> bool:
        return self.interleave_excess <= 1e-10


def claim_extension_check(m: MapDescriptor, z0, N_power: int, n: int = 200,
                          c: float | None = None) -> ClaimExtension:
    """Run the Koranyi test on ``phi^N_power`` and carry the bound to the full orbit.

    Between ``z_{kN}`` and ``z_{(k+1)N}`` the orbit stays within hyperbolic
    distance ``max_j d(z_0, z_j)`` of ``z_{kN}``; that is checked directly.
    """
    require_self_map(m)
    core = siegel_form(m)
    if core is None:
        raise ValueError("claim_extension_check needs a Siegel map or a Cayley-transported one")
    if c is None:
        c = ball_dilatation(m, check_iterates=()).c
    cN = c ** N_power
    if not cN < KORANYI_THRESHOLD:
        raise ValueError(f"c^{N_power} = {cN:.6g} is not below the threshold {KORANYI_THRESHOLD:.6g}")
    orb = siegel_orbit(core, to_siegel_point(m, z0), N_power * n)
    if orb.shape[1] < N_power * n + 1:
        raise DomainError("orbit overflowed before the requested length")
    it = _trace_from_orbit(orb[:, ::N_power], cN)
    r = np.abs(orb[0] + 1j)
    h = np.array([height(orb[:, j]) for j in range(orb.shape[1])])
    full_L = r / (2.0 * h)
    bounded, _ = bounded_verdict(full_L)
    base = [siegel_distance(orb[:, 0], orb[:, j]) for j in range(N_power)]
    excess = -np.inf
    for k in range(n):
        for j in range(N_power):
            d = siegel_distance(orb[:, k * N_power], orb[:, k * N_power + j])
            excess = max(excess, d - base[j])
    return ClaimExtension(N_power, c, cN, it, full_L, float(np.max(full_L)),
                          bool(bounded and it.bounded_verdict), float(excess))


def seed_points(N: int, n_seeds: int = 5, rng_seed: int = 0, rmax: float = 0.9) -> list[np.ndarray]:
    """Deterministic random start points in the ball."""
    rng = np.random.default_rng(rng_seed)
    out = []
    for _ in range(n_seeds):
        v = rng.normal(size=N) + 1j * rng.normal(size=N)
        v /= np.linalg.norm(v)
        out.append(v * rmax * rng.uniform() ** (1.0 / (2 * N)))
    return out


# --- sampled invariants --------------------------------------------------------------------------

@dataclass
class PairCheck:
    n_pairs: int
    q_excess: float
    d_excess: float

    @property
    def passed(self) -> bool:
        return self.q_excess <= 1e-12 and self.d_excess <= 1e-12


def _q_and_d(domain, a, b):
    """Batched Q and pseudo-hyperbolic distance; vector points are columns."""
    if domain == "disk":
        q = np.abs(1 - a * np.conj(b)) ** 2 / ((1 - np.abs(a) ** 2) * (1 - np.abs(b) ** 2))
        return q, np.abs(a - b) / np.abs(1 - np.conj(b) * a)
    if domain == "halfplane":
        q = (np.abs(a - np.conj(b)) / (2 * np.sqrt(a.imag * b.imag))) ** 2
        return q, np.abs(a - b) / np.abs(a - np.conj(b))
    if domain == "ball":
        aa = np.sum(np.abs(a) ** 2, axis=0)
        bb = np.sum(np.abs(b) ** 2, axis=0)
        ab = np.sum(a * np.conj(b), axis=0)
        q = np.abs(1 - ab) ** 2 / ((1 - aa) * (1 - bb))
        ba = np.conj(ab)
        safe = np.where(aa > 0, aa, 1.0)
        proj = (ba / safe) * a
        s = np.sqrt(1 - aa)
        g = np.where(aa > 0, (proj + s * (b - proj) - a) / (1 - ba), -b)
        return q, np.sqrt(np.sum(np.abs(g) ** 2, axis=0))
    ha = a[0].imag - np.sum(np.abs(a[1:]) ** 2, axis=0)
    hb = b[0].imag - np.sum(np.abs(b[1:]) ** 2, axis=0)
    x = a[0] - np.conj(b[0]) - 2j * np.sum(a[1:] * np.conj(b[1:]), axis=0)
    q = (np.abs(x) / (2 * np.sqrt(ha) * np.sqrt(hb))) ** 2
    # move a to iota, then measure |C^{-1}(.)|
    u1 = (b[0] - a[0].real + 1j * np.sum(np.abs(a[1:]) ** 2, axis=0)
          - 2j * np.sum(b[1:] * np.conj(a[1:]), axis=0)) / ha
    up = (b[1:] - a[1:]) / np.sqrt(ha)
    den = u1 + 1j
    d2 = np.abs((u1 - 1j) / den) ** 2 + np.sum(np.abs(2j * up / den) ** 2, axis=0)
    return q, np.sqrt(d2)


def pair_monotonicity(m: MapDescriptor, n_pairs: int = 10000, seed: int = 0) -> PairCheck:
    """Relative excess of ``Q(phi a, phi b)`` over ``Q(a, b)`` and absolute excess of
    the pseudo-hyperbolic distance, on quasi-random pairs."""
    dim = 2 if m.domain in ("disk", "halfplane") else 2 * m.N + 1
    u = halton(2 * dim, n_pairs, seed)
    a = sample_points(m.domain, m.N, u[:, :dim])
    b = sample_points(m.domain, m.N, u[:, dim:])
    fa, fb = evaluate_unchecked(m, a), evaluate_unchecked(m, b)
    q0, d0 = _q_and_d(m.domain, a, b)
    q1, d1 = _q_and_d(m.domain, fa, fb)
    return PairCheck(n_pairs, float(np.max(q1 / q0 - 1.0)), float(np.max(d1 - d0)))


def closed_form_psi0_orbit(A: float, U, w, n: int) -> np.ndarray:
    """``Psi0^n(w) = (A^n w1, A^{n/2} U^n w')``."""
    w = np.asarray(w, dtype=complex)
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    out = np.empty_like(w)
    out[0] = A ** n * w[0]
    out[1:] = A ** (n / 2.0) * (np.linalg.matrix_power(U, n) @ w[1:])
    return out


def interior_attractor(m: MapDescriptor, n: int = 2000, step_tol: float = 1e-13) -> np.ndarray | None:
    """Interior limit of the orbit of the origin, if it settles inside the ball.

    Used to reject maps the Korányi test does not apply to (elliptic ones).
    """
    core = siegel_form(m)
    if core is not None:
        w = iota(m.N)
        for _ in range(n):
            v = np.asarray(evaluate(core, w), dtype=complex)
            if np.max(np.abs(v)) > 1e12:
                return None
            if np.max(np.abs(v - w)) < step_tol * max(1.0, np.max(np.abs(v))):
                return ball_cayley_inverse(v)
            w = v
        return None
    z = np.zeros(m.N, dtype=complex)
    for _ in range(n):
        v = np.asarray(evaluate(m, z), dtype=complex)
        if 1.0 - np.linalg.norm(v) < 1e-9:
            return None
        if np.max(np.abs(v - z)) < step_tol:
            return v
        z = v
    return None
