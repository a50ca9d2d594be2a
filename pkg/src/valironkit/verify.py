"""Invariant suites run by ``valironkit verify-all``.

Each suite returns a list of :class:`Check` records: a measured quantity, the
tolerance it is held to and the verdict.  Suites never raise; an exception
inside a check becomes a failed check carrying the error text.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import ball, dynamics1d as d1, geometry, siegel, valiron
from .corpus import CorpusEntry, default_corpus
from .maps import MapDescriptor, evaluate, to_disk, unwrap_cayley, validate_self_map


@dataclass
class Check:
    suite: str
    map: str
    invariant: str
    value: float | None
    tol: float | None
    passed: bool
    detail: str = ""

    def to_dict(self):
        d = asdict(self)
        for k in ("value", "tol"):
            v = d[k]
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = repr(v)
        return d


class _Suite:
    """Collects checks for one map; failures inside ``run`` are recorded, not raised."""

    def __init__(self, suite: str, name: str):
        self.suite, self.name, self.checks = suite, name, []

    def le(self, invariant, value, tol, detail=""):
        value = float(value)
        self.checks.append(Check(self.suite, self.name, invariant, value, tol,
                                 bool(value <= tol), detail))

    def ge(self, invariant, value, tol, detail=""):
        value = float(value)
        self.checks.append(Check(self.suite, self.name, invariant, value, tol,
                                 bool(value >= tol), detail))

    def flag(self, invariant, ok, detail=""):
        self.checks.append(Check(self.suite, self.name, invariant, None, None, bool(ok), detail))

    def run(self, invariant, fn):
        try:
            return fn()
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            self.flag(invariant, False, f"{type(exc).__name__}: {exc}")
            return None


# --- one variable ----------------------------------------------------------------------

def _start(m):
    return 0j if m.domain == "disk" else 1j


def _grid(domain, n=10):
    r = 0.9 * (np.arange(n) + 0.5) / n
    t = 2 * np.pi * (np.arange(n) + 0.5) / n
    w = (r[:, None] * np.exp(1j * t[None, :])).ravel()
    return w if domain == "disk" else 1j * (1 + w) / (1 - w)


def one_variable_suite(entry: CorpusEntry, n_pairs: int = 10000, seed: int = 0) -> list[Check]:
    m = entry.m
    s = _Suite("dynamics1d", m.name)
    rep = validate_self_map(m, 1000, seed)
    s.le("self_map", max(rep.max_boundary_violation, rep.schwarz_violation), 1e-10)
    if not rep.passed:
        return s.checks
    pc = ball.pair_monotonicity(m, n_pairs, seed)
    s.le("q_monotonicity", pc.q_excess, 1e-12, f"{n_pairs} pairs, relative excess")
    s.le("d_contraction", pc.d_excess, 1e-12, f"{n_pairs} pairs, absolute excess")

    tr = s.run("step_monotonicity", lambda: d1.iterate_orbit(m, _start(m), max_n=200))
    if tr is not None and tr.steps.size > 1:
        inc = np.diff(tr.steps)
        detail = ""
        if m.domain == "disk" and unwrap_cayley(m) is None:
            # in disk coordinates a rounded orbit point perturbs d by ~eps/(1-|z|);
            # only steps where that stays below the slack are meaningful
            ok = (1.0 - np.abs(tr.points[2:])) >= 1e-3
            inc = inc[ok]
            detail = f"{int(ok.sum())} well-conditioned steps (1-|z| >= 1e-3)"
        s.le("step_monotonicity", float(np.max(inc, initial=-np.inf)), 1e-12, detail)

    cl = s.run("classification", lambda: d1.classify(m))
    if cl is None:
        return s.checks
    expected = entry.kind or cl.kind
    s.flag("classification", cl.kind == expected, f"got {cl.kind}, expected {expected}")

    if cl.kind == "elliptic":
        lam = complex(cl.multiplier)
        s.le("elliptic_multiplier", abs(lam), 1.0 + 1e-10)
        if 0 < abs(lam) < 1:
            k = valiron.koenigs_map(m, cl.fixed_point, lam)
            if m.domain == "disk" and abs(cl.fixed_point) < 1e-12:
                zs = 0.5 * _grid("disk", 6) / 0.9
                s.le("koenigs_residual", k.residual(zs), 1e-8, "|z| <= 0.5")
            s.le("koenigs_derivative", abs(k.derivative_at_fixed() - 1.0), 1e-8)
            # the residual alone is blind to sigma = 0; difference sigma across the fixed point
            p, h = complex(cl.fixed_point), 1e-4
            scale = 1.0 if m.domain == "disk" else max(1.0, p.imag)
            fd = (k(p + h * scale) - k(p - h * scale)) / (2 * h * scale)
            s.le("koenigs_normalized", abs(fd - 1.0), 1e-6, "central difference of sigma at the fixed point")
        return s.checks

    # non-elliptic
    g = _grid(m.domain)
    mind = math.inf
    w = g.copy()
    for _ in range(5):
        w = evaluate(m, w)
        mind = min(mind, min(d1._step(m.domain, a, b) for a, b in zip(g, w)))
    s.ge("no_periodic_orbit", mind, 1e-8, "min d(phi_N(z), z), N <= 5, 10x10 grid")

    dw = cl.dw.point
    if m.domain == "disk":
        s.le("julia_inequality", d1.julia_check(m, dw, cl.alpha), 1e-9)
    else:
        s.le("julia_inequality", d1.julia_check(m, math.inf, cl.alpha), 1e-9)
    if "alpha" in entry.known:
        s.le("alpha_oracle", abs(cl.alpha - entry.known["alpha"]), 1e-6)

    if m.domain == "halfplane":
        dm = to_disk(m)
        cd = s.run("cayley_consistency", lambda: d1.classify(dm))
        if cd is not None:
            s.flag("cayley_consistency_kind", cd.kind == cl.kind, f"{cd.kind} vs {cl.kind}")
            s.le("cayley_consistency_alpha", abs(cd.alpha - cl.alpha), 1e-6)
    if m.domain == "halfplane" and cl.kind == "hyperbolic":
        _halfplane_hyperbolic(s, entry, cl)
    return s.checks


def _halfplane_hyperbolic(s: _Suite, entry: CorpusEntry, cl):
    m = entry.m
    tr = d1.iterate_orbit(m, 1j, max_n=400)
    s.ge("confinement_delta", d1.confinement_check(tr).delta, 1e-12)
    jc = d1.julia_caratheodory_limit(m)
    s.flag("jc_rays_agree", jc.agree, f"A = {jc.A!r}")
    s.le("property1_ratio", abs(tr.ratios[-1] - jc.A), 1e-4, "last z_{n+1}/z_n vs A")
    model = s.run("valiron_model", lambda: valiron.build_model(m, 1j))
    if model is None:
        return
    s.le("y_ratio_law", abs(model.A - jc.A), 1e-4)
    rtol = 1e-6 if entry.known.get("closed_form") else 1e-4
    s.le("functional_residual", model.residual_stats["max"], rtol)
    s.le("cot_relation", model.limits.cot_defect, 1e-3)
    s.le("theta_crosscheck", abs(model.theta - model.limits.theta_direct), 1e-4)
    s.le("normalization", abs(model.sigma(model.z0) - 1j), 1e-8)
    for key in ("A", "b_inf", "theta"):
        if key in entry.known:
            s.le(f"{key}_oracle", abs(getattr(model, key) - entry.known[key]), 1e-8)
    q = valiron.q_sequence(model.base_orbit)
    s.le("im_q_to_A", abs(q[-1].imag - model.A), 1e-4)
    dev, _ = valiron.semiconformality_check(model)
    s.le("semiconformality", dev, 1e-3)

    pts = model.base_orbit.points[:21]
    sig = model.sigma(pts)
    Tn = np.array([1j])
    for _ in range(pts.size - 1):
        Tn = np.append(Tn, model.T(Tn[-1]))
    s.le("iterated_functional_equation", float(np.max(np.abs(sig - Tn) / np.abs(Tn))), 1e-6)

    grid = valiron.hyperbolic_grid(model.z0)
    devs = [float(np.max(np.abs(valiron.psi_n(model, n, grid) - grid)))
            for n in range(len(model.taus) - 1)]
    s.le("psi_n_to_identity", devs[-1], 1e-3)
    tab = valiron.sigma_table(model, grid)
    dist = np.array([[geometry.halfplane_pseudo_distance(1j, v) for v in row] for row in tab])
    s.le("distance_transport", float(np.max(np.diff(dist, axis=0))), 1e-12)
    sg = model.sigma(grid)
    excess = max(geometry.halfplane_pseudo_distance(1j, a) - geometry.halfplane_pseudo_distance(model.z0, z)
                 for a, z in zip(sg, grid))
    s.le("schwarz_through_normalization", excess, 1e-9)


# --- several variables -------------------------------------------------------------------------

def ball_suite(entry: CorpusEntry, n_pairs: int = 10000, seed: int = 0, n_seeds: int = 5,
               steps: int = 200) -> list[Check]:
    m = entry.m
    s = _Suite("ball", m.name)
    rep = validate_self_map(m, 1000, seed)
    s.le("self_map", max(rep.max_boundary_violation, rep.schwarz_violation), 1e-10)
    if not rep.passed:
        return s.checks
    pc = ball.pair_monotonicity(m, n_pairs, seed)
    s.le("q_monotonicity", pc.q_excess, 1e-12, f"{n_pairs} pairs, relative excess")
    s.le("d_contraction", pc.d_excess, 1e-12, f"{n_pairs} pairs, absolute excess")
    if ball.interior_attractor(m) is not None:
        s.flag("hyperbolic_type", entry.kind == "elliptic", "orbit settles inside the ball")
        return s.checks
    dil = s.run("ball_dilatation", lambda: ball.ball_dilatation(m))
    if dil is None:
        return s.checks
    s.flag("dilatation_estimators_agree", not dil.flagged, "; ".join(dil.notes))
    if "c" in entry.known:
        s.le("c_oracle", abs(dil.c - entry.known["c"]), 1e-3)
    if ball.siegel_form(m) is None or not dil.c < 1:
        return s.checks
    n_power = next(n for n in range(1, 64) if dil.c ** n < siegel.KORANYI_THRESHOLD)
    for k, z0 in enumerate(ball.seed_points(m.N, n_seeds, seed)):
        if n_power == 1:
            tr = s.run("koranyi_trace", lambda: ball.koranyi_trace(m, z0, steps, c=dil.c))
            if tr is None:
                continue
            s.flag(f"seed{k}_bounded", tr.bounded_verdict, f"sup L = {tr.sup_L!r} at n = {tr.argmax}")
            s.flag(f"seed{k}_stable", tr.stable)
            s.le(f"seed{k}_sn_bound", tr.max_julia_excess, 0.0, "S_n / (c L_n/L_{n+1}) - (1 + 1e-9)")
            s.le(f"seed{k}_ball_julia", ball.julia_along_orbit(tr), 1e-9)
        else:
            ce = s.run("claim_extension", lambda: ball.claim_extension_check(m, z0, n_power, steps, c=dil.c))
            if ce is None:
                continue
            s.flag(f"seed{k}_bounded_N{n_power}", ce.bounded, f"sup L = {ce.sup_L!r}")
            s.le(f"seed{k}_interleave", ce.interleave_excess, 1e-10)
    return s.checks


def siegel_algebra_suite(seed: int = 0, n: int = 1000) -> list[Check]:
    """Height laws, Psi normalisation and fixed point, Psi0 orbits, Cayley identities."""
    s = _Suite("siegel", "algebra")
    rng = np.random.default_rng(seed)
    N = 3
    pts = []
    for _ in range(n):
        wp = rng.normal(size=N - 1) + 1j * rng.normal(size=N - 1)
        h = rng.exponential()
        pts.append(np.concatenate([[rng.normal() + 1j * (siegel.norm2(wp) + h)], wp]))
    bp = rng.normal(size=N - 1) + 1j * rng.normal(size=N - 1)
    b = np.concatenate([[rng.normal() + 1j * siegel.norm2(bp)], bp])
    A = 4.0
    ap = np.array([1.0, 0.5j])
    a = np.concatenate([[0.3 + 1j * (A + siegel.norm2(ap))], ap])
    th = rng.uniform(0, 2 * np.pi, 2)
    U = np.diag(np.exp(1j * th))
    rel = lambda x, y: abs(x - y) / abs(y)  # noqa: E731
    s.le("translation_height", max(rel(siegel.height(siegel.siegel_translation(b, w)), siegel.height(w))
                                   for w in pts), 1e-10)
    s.le("dilation_height", max(rel(siegel.height(siegel.siegel_dilation(A, w)), A * siegel.height(w))
                                for w in pts), 1e-10)
    s.le("psi_height", max(rel(siegel.height(siegel.psi_automorphism(A, a, U, w)), A * siegel.height(w))
                           for w in pts), 1e-10)
    s.le("psi_iota", float(np.max(np.abs(siegel.psi_automorphism(A, a, U, siegel.iota(N)) - a))), 1e-12)
    c = siegel.psi_boundary_fixed_point(4.0, [5j, 1.0], np.eye(1))
    s.le("psi_fixed_point_oracle", float(np.max(np.abs(c - np.array([1j, -1.0])))), 1e-10)
    c3 = siegel.psi_boundary_fixed_point(A, a, U)
    s.le("psi_fixed_point", float(np.max(np.abs(siegel.psi_automorphism(A, a, U, c3) - c3))), 1e-10)
    s.le("psi_fixed_point_on_boundary", abs(siegel.height(c3)), 1e-10)
    w0 = pts[0]
    worst = 0.0
    w = w0
    for k in range(1, 21):
        w = siegel.psi0(2.0, U, w)
        cf = ball.closed_form_psi0_orbit(2.0, U, w0, k)
        worst = max(worst, float(np.max(np.abs(w - cf)) / np.max(np.abs(cf))))
    s.le("psi0_closed_form", worst, 1e-9)
    zs = [siegel.ball_cayley_inverse(w) for w in pts]
    s.le("cayley_round_trip", max(float(np.max(np.abs(siegel.ball_cayley(z) - w) / max(1.0, np.max(np.abs(w)))))
                                  for z, w in zip(zs, pts)), 1e-12)
    s.le("cayley_height_identity",
         max(abs(siegel.height(siegel.ball_cayley(z)) * siegel.koranyi_functional(z) * abs(1 - z[0]) - 1.0)
             for z in zs), 1e-9)
    return s.checks


# --- driver ---------------------------------------------------------------------------------------

def thread_cap(default: int = 1) -> int:
    try:
        v = int(os.environ.get("VALIRONKIT_THREADS", default))
    except ValueError:
        return default
    return max(1, v)


def _run_entry(args):
    entry, n_pairs, seed = args
    try:
        if entry.m.vector:
            return ball_suite(entry, n_pairs, seed)
        return one_variable_suite(entry, n_pairs, seed)
    except Exception as exc:  # noqa: BLE001
        return [Check("driver", entry.name, "suite", None, None, False, f"{type(exc).__name__}: {exc}")]


def run_all(entries: list[CorpusEntry] | None = None, extra: list[MapDescriptor] = (),
            n_pairs: int = 10000, seed: int = 0, threads: int | None = None) -> list[Check]:
    """Run every suite; results come back in corpus order whatever the thread count."""
    entries = list(default_corpus() if entries is None else entries)
    for i, m in enumerate(extra):
        if not m.name:
            m = MapDescriptor(m.domain, m.expr, m.N, name=f"extra{i}_{m.digest()}")
        entries.append(CorpusEntry(m, ""))
    jobs = [(e, n_pairs, seed) for e in entries]
    threads = thread_cap() if threads is None else threads
    with ThreadPoolExecutor(max_workers=threads) as ex:
        results = list(ex.map(_run_entry, jobs))
    checks = [c for r in results for c in r]
    checks += siegel_algebra_suite(seed)
    return checks


def summarize(checks: list[Check]) -> dict:
    failed = [c for c in checks if not c.passed]
    return {"n_checks": len(checks), "n_failed": len(failed), "passed": not failed}
