"""Renormalized iterates and the intertwining map of a hyperbolic self-map of H.

For a base orbit ``z_n = x_n + i y_n`` the affine maps
``tau_n(z) = (z - x_n) / y_n`` send ``z_n`` to ``i``; the renormalized iterates
``sigma_n = tau_n o Phi_n`` converge to a map ``sigma`` with

    sigma o Phi = A sigma + b_inf,     sigma(z_0) = i.

Everything below works with the orbit capped at ``|z| = 1e12`` and reads
limits off Aitken-accelerated sequences (see :mod:`valironkit.accel`).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import accel, geometry
from .dynamics1d import OrbitTrace, iterate_orbit
from .errors import ConvergenceError, Inconclusive
from .maps import MapDescriptor, derivative, evaluate, require_self_map, to_disk

LIMIT_TOL = 1e-6
THETA_CROSSCHECK_TOL = 1e-4
SIGMA_TOL = 1e-9
MIN_TRACE = 6


# --- renormalizers --------------------------------------------------------------

@dataclass(frozen=True)
class Renormalizer:
    """``tau(z) = (z - x) / y``."""
    x: float
    y: float

    def __call__(self, z):
        return (np.asarray(z) - self.x) / self.y if np.ndim(z) else (complex(z) - self.x) / self.y

    def inverse(self, z):
        return self.x + np.asarray(z) * self.y if np.ndim(z) else self.x + complex(z) * self.y


def renormalizers(trace: OrbitTrace) -> list[Renormalizer]:
    if trace.domain != "halfplane":
        raise ValueError("renormalizers need a half-plane orbit")
    if np.any(trace.y <= 0):
        raise ValueError("orbit left the half-plane")
    return [Renormalizer(float(z.real), float(z.imag)) for z in trace.points]


def q_sequence(trace: OrbitTrace) -> np.ndarray:
    """``q_n = tau_n(z_{n+1})``; its imaginary part is ``y_{n+1}/y_n``."""
    p = trace.points
    return (p[1:] - p[:-1].real) / p[:-1].imag


# --- limit data -------------------------------------------------------------------

@dataclass
class LimitData:
    A: float
    b_inf: float
    theta: float
    theta_direct: float
    A_est: accel.LimitEstimate
    b_est: accel.LimitEstimate
    arg_est: accel.LimitEstimate
    flagged: bool

    @property
    def cot_defect(self) -> float:
        return abs(self.b_inf - (self.A - 1.0) / math.tan(self.theta))


def limit_data(trace: OrbitTrace) -> LimitData:
    """``(A, b_inf, theta)`` from the accelerated ratio, drift and argument sequences."""
    if trace.domain != "halfplane":
        raise ValueError("limit data needs a half-plane orbit")
    if len(trace) < MIN_TRACE:
        raise ValueError(f"orbit has {len(trace)} points, need at least {MIN_TRACE}")
    x, y = trace.x, trace.y
    A_est = accel.limit(y[1:] / y[:-1])
    b_est = accel.limit(np.diff(x) / y[:-1])
    arg_est = accel.limit(np.angle(trace.points))
    for name, est in (("A", A_est), ("b_inf", b_est), ("Arg z_n", arg_est)):
        if not est.converged(LIMIT_TOL * max(1.0, abs(est.value))):
            raise ConvergenceError(f"{name} did not converge (residual {est.residual:.3g})",
                                   last=est.value)
    A = float(np.real(A_est.value))
    b = float(np.real(b_est.value))
    if not A > 1.0:
        raise ValueError(f"ratio limit A = {A} is not > 1; map is not hyperbolic")
    theta = math.atan2(A - 1.0, b)
    direct = float(np.real(arg_est.value))
    flagged = abs(theta - direct) > THETA_CROSSCHECK_TOL
    return LimitData(A, b, theta, direct, A_est, b_est, arg_est, flagged)


# --- the model ---------------------------------------------------------------------

@dataclass
class ValironModel:
    m: MapDescriptor
    z0: complex
    A: float
    b_inf: float
    theta: float
    base_orbit: OrbitTrace
    limits: LimitData
    taus: list
    residual_stats: dict = field(default_factory=dict)
    n_used: list = field(default_factory=list)
    flagged: bool = False

    @property
    def n_max_used(self) -> int:
        return max(self.n_used, default=0)

    @property
    def shift(self) -> float:
        """``b_inf / (A - 1)``: ``sigma_hat = sigma + shift`` solves ``sigma_hat o Phi = A sigma_hat``."""
        return self.b_inf / (self.A - 1.0)

    def sigma(self, z, tol: float = SIGMA_TOL):
        return sigma_evaluate(self, z, tol)

    def sigma_hat(self, z, tol: float = SIGMA_TOL):
        return sigma_evaluate(self, z, tol) + self.shift

    def T(self, z):
        return self.A * z + self.b_inf


def build_model(m: MapDescriptor, z0=1j, max_n: int = 400, escape_cap: float = 1e12,
                residual_grid: bool = True) -> ValironModel:
    if m.domain != "halfplane":
        raise ValueError("the Valiron construction works on half-plane maps")
    require_self_map(m)
    trace = iterate_orbit(m, z0, max_n=max_n, escape_cap=escape_cap)
    if trace.termination != "escaped":
        raise Inconclusive(f"base orbit ended with '{trace.termination}', expected escape to infinity")
    ld = limit_data(trace)
    model = ValironModel(m, complex(z0), ld.A, ld.b_inf, ld.theta, trace, ld,
                         renormalizers(trace), flagged=ld.flagged)
    if residual_grid:
        rmax, rmean = functional_residual(model, hyperbolic_grid(model.z0))
        model.residual_stats = {"max": rmax, "mean": rmean}
    return model


def _accelerated_prefix(s: np.ndarray, tol: float):
    """Deepen ``n`` until two successive accelerated values agree to ``tol`` (relative
    once |value| > 1).  Returns (value, n_used) or raises ConvergenceError."""
    prev = None
    for k in range(3, s.size + 1):
        est = accel.limit(s[:k])
        v = est.value
        scale = tol * max(1.0, abs(v))
        # two successive values agreeing can be a coincidence early on; also
        # demand that the acceleration certificate itself is below tolerance
        if prev is not None and abs(v - prev) < scale and est.residual < scale:
            return complex(v), k - 1
        prev = v
    last = (complex(prev) if prev is not None else complex(s[-1]), complex(s[-1]))
    raise ConvergenceError("renormalized iterates did not settle", last=last)


def sigma_table(model: ValironModel, z) -> np.ndarray:
    """Rows ``n``, columns query points: ``tau_n(Phi_n(z))``."""
    w = np.atleast_1d(np.asarray(z, dtype=complex))
    pts = model.base_orbit.points
    out = np.empty((pts.size, w.size), dtype=complex)
    for n in range(pts.size):
        out[n] = (w - pts[n].real) / pts[n].imag
        if n + 1 < pts.size:
            w = evaluate(model.m, w)
    return out


def sigma_evaluate(model: ValironModel, z, tol: float = SIGMA_TOL):
    """Accelerated limit of ``tau_n(Phi_n(z))``; scalar in, scalar out."""
    scalar = np.ndim(z) == 0
    tab = sigma_table(model, z)
    vals = np.empty(tab.shape[1], dtype=complex)
    for j in range(tab.shape[1]):
        vals[j], n = _accelerated_prefix(tab[:, j], tol)
        model.n_used.append(n)
    return complex(vals[0]) if scalar else vals


def psi_n(model: ValironModel, n: int, z):
    """``tau_{n+1} o Phi o tau_n^{-1}``; tends to the identity."""
    t = model.taus
    return t[n + 1](evaluate(model.m, t[n].inverse(z)))


def hyperbolic_grid(z0, radius: float = 3.0, n_r: int = 5, n_t: int = 5) -> np.ndarray:
    """``n_r x n_t`` polar grid in the hyperbolic ball of the given radius about ``z0``."""
    z0 = complex(z0)
    rho = radius * np.arange(1, n_r + 1) / n_r
    r = np.tanh(rho / 2.0)
    t = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    w = (r[:, None] * np.exp(1j * t[None, :])).ravel()
    u = 1j * (1 + w) / (1 - w)                       # disk -> H, 0 -> i
    return z0.real + z0.imag * u


def functional_residual(model: ValironModel, grid) -> tuple[float, float]:
    """Max and mean of ``|sigma(Phi(z)) - A sigma(z) - b_inf|`` over ``grid``."""
    grid = np.asarray(grid, dtype=complex)
    s = sigma_evaluate(model, grid)
    sp = sigma_evaluate(model, evaluate(model.m, grid))
    r = np.abs(sp - model.A * s - model.b_inf)
    return float(np.max(r)), float(np.mean(r))


# --- semi-conformality and the angular derivative ----------------------------------------

@dataclass
class RayResult:
    angle: float
    limit: float
    residual: float
    raw_last: float


def semiconformality_check(model: ValironModel, rays=(np.pi / 4, np.pi / 2, 3 * np.pi / 4),
                           ks=range(3, 21)) -> tuple[float, list]:
    """Extrapolated ``Arg(sigma_hat(z)/z)`` as ``|z| = 2^k -> infinity`` along rays."""
    ks = np.asarray(list(ks))
    out = []
    for t in rays:
        z = 2.0 ** ks * np.exp(1j * t)
        args = np.angle((sigma_evaluate(model, z) + model.shift) / z)
        est = accel.limit(args)
        out.append(RayResult(float(t), float(np.real(est.value)), est.residual, float(args[-1])))
    return max(abs(r.limit) for r in out), out


@dataclass
class AngularDerivative:
    value: float | None
    L: complex | None
    residual: float
    diagnostics: str = ""

    @property
    def present(self) -> bool:
        return self.value is not None


def normalized_orbit(model: ValironModel) -> np.ndarray:
    """``z_n / A^n`` along the base orbit."""
    pts = model.base_orbit.points
    n = np.arange(pts.size)
    return pts / model.A ** n


def angular_derivative(model: ValironModel, tol: float = 1e-6) -> AngularDerivative:
    """``sigma_hat(z_0) / lim z_n/A^n`` when that limit exists and is nonzero."""
    seq = normalized_orbit(model)
    mags = np.abs(seq)
    tail = mags[len(mags) // 2:]
    if tail[-1] > 1e3 * max(tail[0], 1e-300) or not np.all(np.isfinite(seq)):
        return AngularDerivative(None, None, math.inf, "z_n/A^n grows without bound")
    est = accel.limit(seq)
    L = complex(est.value)
    if not est.converged(tol * max(1.0, abs(L))) or abs(L) < 1e-12:
        return AngularDerivative(None, L, est.residual, "z_n/A^n does not settle to a nonzero limit")
    ratio = (model.sigma(model.z0) + model.shift) / L
    if abs(ratio.imag) > 1e-6 * abs(ratio) or ratio.real <= 0:
        return AngularDerivative(None, L, est.residual, f"ratio {ratio} is not a positive real")
    return AngularDerivative(float(ratio.real), L, est.residual)


@dataclass
class BourdonShapiro:
    passed: bool
    max_excess: float
    worst: complex
    n_samples: int


def bourdon_shapiro_check(m: MapDescriptor, A: float, M: float, eps: float,
                          n_samples: int = 10000, n_rays: int = 10,
                          rmin: float = 1.0, rmax: float = 1e10) -> BourdonShapiro:
    """Sampled test of ``|Phi(z) - A z| <= M |z|^(1-eps)`` (1e-9 relative slack)."""
    per = max(1, n_samples // n_rays)
    t = np.pi * (np.arange(n_rays) + 0.5) / n_rays
    r = np.geomspace(rmin, rmax, per)
    z = (r[None, :] * np.exp(1j * t[:, None])).ravel()
    gamma = np.abs(evaluate(m, z) - A * z)
    bound = M * np.abs(z) ** (1.0 - eps)
    excess = (gamma - bound) / bound
    i = int(np.argmax(excess))
    return BourdonShapiro(bool(excess[i] <= 1e-9), float(max(excess[i], 0.0)), complex(z[i]), z.size)


# --- Heins curve ---------------------------------------------------------------------------

@dataclass
class HeinsSample:
    t: float
    value: complex | float | None
    kind: str            # interior-fixed | boundary-dw | infinity-dw | inconclusive
    steps: int

    def row(self):
        if self.kind == "infinity-dw":
            return {"t": self.t, "kind": self.kind, "re": "inf", "im": "inf"}
        if self.kind == "inconclusive" or self.value is None:
            return {"t": self.t, "kind": self.kind, "re": "nan", "im": "nan"}
        v = complex(self.value)
        return {"t": self.t, "kind": self.kind, "re": v.real, "im": v.imag}


def heins_point(model: ValironModel, t: float, max_steps: int = 10000,
                step_tol: float = 1e-12) -> HeinsSample:
    """Interior fixed point or Denjoy-Wolff point of ``z -> t sigma(z)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    z = 1j
    for k in range(1, max_steps + 1):
        w = t * model.sigma(z)
        if abs(w) > 1e10:
            return HeinsSample(float(t), None, "infinity-dw", k)
        if abs(w - z) < step_tol * max(1.0, abs(w)):
            return HeinsSample(float(t), w, "interior-fixed", k)
        if w.imag < 1e-10 * max(1.0, abs(w.real)) and abs(w.real) < 1e10:
            # the orbit creeps to the real axis: boundary Denjoy-Wolff point
            if abs(w - z) < 1e-9 * max(1.0, abs(w)):
                return HeinsSample(float(t), w.real, "boundary-dw", k)
        z = w
    return HeinsSample(float(t), z, "inconclusive", max_steps)


def heins_curve(model: ValironModel, t_grid, max_steps: int = 10000) -> list[HeinsSample]:
    # t*sigma maps H into H as soon as sigma does; confirm sigma does on the model grid
    g = hyperbolic_grid(model.z0)
    if np.any(np.imag(sigma_evaluate(model, g)) <= 0):
        raise Inconclusive("sigma left the half-plane on the model grid")
    return [heins_point(model, float(t), max_steps) for t in t_grid]


# --- uniqueness ------------------------------------------------------------------------------

@dataclass
class UniquenessResult:
    mu: complex
    deviation: float
    passed: bool


def uniqueness_cross_check(m: MapDescriptor, z0, z0_alt, dev_tol: float = 1e-5) -> UniquenessResult:
    """The two normalized solutions ``sigma_hat`` from different bases are proportional."""
    a = build_model(m, z0, residual_grid=False)
    b = build_model(m, z0_alt, residual_grid=False)
    grid = hyperbolic_grid(a.z0)
    sa = a.sigma_hat(grid)
    sb = b.sigma_hat(grid)
    mu = complex(np.mean(sb / sa))
    dev = float(np.max(np.abs(sb - mu * sa)))
    ok = dev <= dev_tol and abs(mu.imag) <= 1e-8 and mu.real > 0
    return UniquenessResult(mu, dev, bool(ok))


# --- theta as a function of the base point ----------------------------------------------------

def theta_at(m: MapDescriptor, z0, max_n: int = 400) -> float:
    trace = iterate_orbit(m, z0, max_n=max_n)
    return limit_data(trace).theta


def theta_field(m: MapDescriptor, points) -> np.ndarray:
    return np.array([theta_at(m, complex(p)) for p in points])


def harmonicity_defect(m: MapDescriptor, z0, radius: float = 0.1, n: int = 64) -> float:
    """``|theta(z0) - mean of theta on a circle about z0|``."""
    ring = complex(z0) + radius * np.exp(2j * np.pi * np.arange(n) / n)
    return abs(theta_at(m, z0) - float(np.mean(theta_field(m, ring))))


def automorphism_theta(A: float, b: float, z0) -> float:
    """Closed form of theta for ``z -> A z + b``: the orbit is
    ``A^n (z0 + b/(A-1)) - b/(A-1)``, so theta = Arg(z0 + b/(A-1))."""
    return cmath.phase(complex(z0) + b / (A - 1.0))


# --- Koenigs map -----------------------------------------------------------------------------------

@dataclass
class KoenigsMap:
    """``sigma(z) = lim lambda^{-n} g(phi_n(z))`` where ``g`` moves the fixed point to 0."""
    m: MapDescriptor
    fixed: complex
    lam: complex
    disk_map: MapDescriptor
    disk_fixed: complex
    max_n: int = 400

    def _to_disk(self, z):
        z = np.asarray(z, dtype=complex)
        return z if self.m.domain == "disk" else (z - 1j) / (z + 1j)

    def _g(self, w):
        p = self.disk_fixed
        return (w - p) / (1 - np.conj(p) * w)

    def sequence(self, z) -> np.ndarray:
        w = np.atleast_1d(self._to_disk(z))
        rows = []
        scale = 1.0 + 0j
        for n in range(self.max_n + 1):
            rows.append(self._g(w) * scale)
            if n >= 3 and np.all(np.abs(rows[-1] - rows[-2]) <= 1e-16 * np.maximum(1.0, np.abs(rows[-1]))):
                break
            w = evaluate(self.disk_map, w)
            scale /= self.lam
        return np.array(rows)

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        tab = self.sequence(z)
        vals = np.array([accel.limit(tab[:, j]).value for j in range(tab.shape[1])], dtype=complex)
        return complex(vals[0]) if scalar else vals

    def derivative_at_fixed(self) -> complex:
        """Derivative at 0 of the Koenigs map of the conjugated map ``g o phi o g^-1``,
        by the chain rule along the (constant) orbit of the fixed point."""
        w = self.disk_fixed
        d = 1.0 + 0j
        vals = []
        for n in range(60):
            vals.append(d)
            d = d * derivative(self.disk_map, w) / self.lam
        return complex(accel.limit(np.array(vals)).value)

    def residual(self, z) -> float:
        z = np.asarray(z, dtype=complex)
        return float(np.max(np.abs(self(evaluate(self.m, z)) - self.lam * self(z))))


def koenigs_map(m: MapDescriptor, fixed, lam, max_n: int = 400) -> KoenigsMap:
    lam = complex(lam)
    if abs(lam) < 1e-12:
        raise ValueError("superattracting fixed point: Koenigs linearization does not apply")
    if abs(lam) >= 1.0:
        raise ValueError("Koenigs linearization needs |lambda| < 1")
    dm = m if m.domain == "disk" else to_disk(m)
    dfix = complex(fixed) if m.domain == "disk" else geometry.cayley_to_disk(complex(fixed))
    return KoenigsMap(m, complex(fixed), lam, dm, dfix, max_n)
