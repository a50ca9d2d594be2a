"""Acceptance criteria, one test per criterion.

Each criterion function returns ``(passed, detail)``; the pytest wrapper
asserts on it and records a one-line verdict that ``conftest.py`` prints in
the terminal summary.  Running this file directly prints the same lines.

Oracles are closed forms computed independently of the library:
    Phi = 2z + i, z0 = i:   z_n = (2^{n+1} - 1) i,  sigma(z) = (z + i)/2,
                            z_n / 2^n -> 2i,  T(t) = t i / (2 - t)
    phi = z/(2 - z):        Koenigs map z/(1 - z)
    Psi(A=4, U=I, a=(5i, 1)): boundary fixed point (i, -1)
"""
from __future__ import annotations

import math
import sys
from functools import lru_cache

import numpy as np
import pytest

from valironkit import accel, ball, dynamics1d as d1, siegel, valiron
from valironkit.corpus import by_name, default_corpus

RESULTS: list[str] = []


def _two_z_plus_i():
    return by_name("affine_2z_plus_i").m


def _two_z_plus_sqrt():
    return by_name("two_z_plus_sqrt").m


@lru_cache(maxsize=None)
def _model(name, z0=1j):
    return valiron.build_model(by_name(name).m, z0)


def _fmt(x):
    return f"{x:.3g}"


# --- criteria -----------------------------------------------------------------------------

def criterion_1():
    """Orbit ratios: 2z+i exact by n=50; 2z+sqrt z extrapolated."""
    tr = d1.iterate_orbit(_two_z_plus_i(), 1j, max_n=60)
    n = np.arange(len(tr))
    oracle = (2.0 ** (n + 1) - 1) * 1j
    orbit_err = float(np.max(np.abs(tr.points - oracle) / np.abs(oracle)))
    dev = np.abs(tr.ratios - 2.0)
    # first index from which every computed ratio stays within 1e-10 of 2
    bad = np.nonzero(dev > 1e-10)[0]
    n_hit = int(bad[-1]) + 1 if bad.size else 0
    ratio_err = float(dev[-1])
    tr2 = d1.iterate_orbit(_two_z_plus_sqrt(), 1j, max_n=400)
    ext = complex(accel.limit(tr2.ratios).value)
    ext_err = abs(ext - 2.0)
    ok = n_hit <= 50 and n_hit < dev.size and orbit_err <= 1e-12 and ext_err <= 1e-4
    return ok, (f"|z_(n+1)/z_n - 2| <= 1e-10 from n = {n_hit} on (need <= 50; last {_fmt(ratio_err)}), "
                f"orbit vs closed form {_fmt(orbit_err)}; "
                f"2z+sqrt z extrapolated ratio error {_fmt(ext_err)} (tol 1e-4)")


def criterion_2():
    """Limit data (A, b_inf, theta) and the cot relation; harmonicity of theta."""
    m = _model("affine_2z_plus_i")
    errs = (abs(m.A - 2.0), abs(m.b_inf - 0.0), abs(m.theta - math.pi / 2))
    s = _model("two_z_plus_sqrt")
    cot = abs(s.b_inf - (s.A - 1.0) / math.tan(s.theta))
    harm = max(valiron.harmonicity_defect(_two_z_plus_sqrt(), z0) for z0 in (1j, 0.5 + 1.5j))
    ok = max(errs) <= 1e-8 and cot <= 1e-3 and harm <= 1e-3
    return ok, (f"2z+i errors (A, b, theta) = ({_fmt(errs[0])}, {_fmt(errs[1])}, {_fmt(errs[2])}) "
                f"(tol 1e-8); 2z+sqrt z |b - (A-1)cot theta| = {_fmt(cot)} (tol 1e-3); "
                f"theta mean-value defect {_fmt(harm)} (tol 1e-3)")


def criterion_3():
    """Functional equation residual on the 5x5 hyperbolic grid, plus the closed-form sigma."""
    m = _model("affine_2z_plus_i")
    s = _model("two_z_plus_sqrt")
    grid = valiron.hyperbolic_grid(1j)
    oracle_err = float(np.max(np.abs(m.sigma(grid) - (grid + 1j) / 2)))
    r1, r2 = m.residual_stats["max"], s.residual_stats["max"]
    ok = r1 <= 1e-9 and oracle_err <= 1e-9 and r2 <= 1e-4 and grid.size == 25
    return ok, (f"2z+i residual {_fmt(r1)}, |sigma - (z+i)/2| {_fmt(oracle_err)} (tol 1e-9); "
                f"2z+sqrt z residual {_fmt(r2)} (tol 1e-4)")


def criterion_4():
    """Uniqueness up to a positive constant, bases i and 2i."""
    res = valiron.uniqueness_cross_check(_two_z_plus_i(), 1j, 2j)
    mu_oracle = (1.0 + 1.0) / (2.0 + 1.0)   # sigma_hat_{z0}(z) = (z + i) / (Im z0 + 1)
    mu_err = abs(res.mu - mu_oracle)
    ok = mu_err <= 1e-6 and res.deviation <= 1e-8
    return ok, f"mu = {res.mu.real:.12g} (oracle 2/3, err {_fmt(mu_err)}, tol 1e-6); deviation {_fmt(res.deviation)} (tol 1e-8)"


def criterion_5():
    """Semi-conformality along three rays for both test maps."""
    d1_, _ = valiron.semiconformality_check(_model("affine_2z_plus_i"))
    d2_, _ = valiron.semiconformality_check(_model("two_z_plus_sqrt"))
    ok = d1_ <= 1e-3 and d2_ <= 1e-3
    return ok, f"max |Arg sigma_hat(z)/z| limit: 2z+i {_fmt(d1_)}, 2z+sqrt z {_fmt(d2_)} (tol 1e-3)"


def criterion_6():
    """z_n/2^n -> 2i for 2z+i; the Bourdon-Shapiro hypothesis for 2z+sqrt z."""
    ad = valiron.angular_derivative(_model("affine_2z_plus_i"))
    L_err = abs(ad.L - 2j) if ad.L is not None else math.inf
    bs = valiron.bourdon_shapiro_check(_two_z_plus_sqrt(), 2.0, 1.0, 0.5, n_samples=10000)
    ok = L_err <= 1e-8 and bs.passed and bs.n_samples == 10000
    return ok, (f"|lim z_n/2^n - 2i| = {_fmt(L_err)} (tol 1e-8); Bourdon-Shapiro (M, eps) = (1, 1/2) on "
                f"{bs.n_samples} samples: {'pass' if bs.passed else 'fail'} (max excess {_fmt(bs.max_excess)})")


def criterion_7():
    """Heins curve for 2z+i against t i/(2 - t)."""
    samples = valiron.heins_curve(_model("affine_2z_plus_i"), [0.5, 1.0, 1.5, 2.5])
    errs = [abs(complex(s.value) - t * 1j / (2 - t)) if s.kind == "interior-fixed" else math.inf
            for s, t in zip(samples[:3], (0.5, 1.0, 1.5))]
    ok = max(errs) <= 1e-6 and samples[3].kind == "infinity-dw"
    return ok, (f"max |T(t) - ti/(2-t)| over t in (0.5, 1, 1.5) = {_fmt(max(errs))} (tol 1e-6); "
                f"T(2.5) kind = {samples[3].kind}")


def criterion_8():
    """Koenigs map of z/(2 - z) against z/(1 - z) on |z| <= 0.5."""
    m = by_name("z_over_2_minus_z").m
    cl = d1.classify(m)
    k = valiron.koenigs_map(m, cl.fixed_point, cl.multiplier)
    r = np.concatenate([[0.0], np.linspace(0.05, 0.5, 10)])
    t = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    z = (r[:, None] * np.exp(1j * t[None, :])).ravel()
    err = float(np.max(np.abs(k(z) - z / (1 - z))))
    return err <= 1e-8, f"max |sigma(z) - z/(1-z)| on {z.size} points of |z| <= 0.5: {_fmt(err)} (tol 1e-8)"


def criterion_9():
    """Q monotonicity and distance contraction on 10^4 sampled pairs per corpus map."""
    worst, worst_name = 0.0, ""
    for e in default_corpus():
        pc = ball.pair_monotonicity(e.m, n_pairs=10000, seed=0)
        v = max(pc.q_excess, pc.d_excess)
        if v >= worst:
            worst, worst_name = v, e.name
    return worst <= 1e-12, f"largest excess over {len(default_corpus())} maps x 1e4 pairs: {_fmt(worst)} ({worst_name}) (slack 1e-12)"


def criterion_10():
    """Koranyi claim for the A = 8 Siegel map from 5 seeds."""
    m = by_name("siegel_claim_A8").m
    dil = ball.ball_dilatation(m, check_iterates=(2,))
    c = dil.c
    law = dil.iterate_law[2]
    law_err = abs(law["c_n"] - c ** 2) / c ** 2
    verdicts = []
    for z0 in ball.seed_points(2, 5, 0):
        tr = ball.koranyi_trace(m, z0, 200, c=c)
        early = tr.bounded_verdict and tr.argmax < 150
        verdicts.append((early or tr.bounded_verdict, tr.stable, tr.julia_ok, tr.sup_L))
    ok = (abs(c - 0.125) <= 1e-3 and c < siegel.KORANYI_THRESHOLD and law_err <= 0.10
          and all(v[0] and v[1] and v[2] for v in verdicts))
    sups = ", ".join(f"{v[3]:.4g}" for v in verdicts)
    return ok, (f"c = {c:.9g} (|c - 0.125| {_fmt(abs(c - 0.125))}, tol 1e-3; threshold {siegel.KORANYI_THRESHOLD:.7f}); "
                f"sup L per seed [{sups}] attained before n=150, stable, S_n bound held: "
                f"{all(v[0] and v[1] and v[2] for v in verdicts)}; c(phi_2)/c^2 - 1 = {_fmt(law_err)} (tol 10%)")


def criterion_11():
    """Claim extension through the third iterate for the A = 2 Siegel map."""
    m = by_name("siegel_claim_A2").m
    res = [ball.claim_extension_check(m, z0, 3, 200) for z0 in ball.seed_points(2, 5, 0)]
    c = res[0].c
    worst = max(r.interleave_excess for r in res)
    ok = all(r.bounded for r in res) and worst <= 1e-10 and abs(c - 0.5) <= 1e-3
    return ok, (f"c = {c:.9g}, c^3 = {c ** 3:.4g}; full-orbit L bounded for all seeds: "
                f"{all(r.bounded for r in res)}; interleaving excess {_fmt(worst)} (slack 1e-10)")


def criterion_12():
    """Psi algebra: normalization, height laws, boundary fixed point."""
    rng = np.random.default_rng(0)
    A = 4.0
    a = np.array([0.3 + 1j * (A + 1.25), 1.0, 0.5j])
    U = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 2)))
    iota_err = float(np.max(np.abs(siegel.psi_automorphism(A, a, U, siegel.iota(3)) - a)))
    worst = 0.0
    for _ in range(500):
        wp = rng.normal(size=2) + 1j * rng.normal(size=2)
        w = np.concatenate([[rng.normal() + 1j * (siegel.norm2(wp) + rng.exponential())], wp])
        bp = rng.normal(size=2) + 1j * rng.normal(size=2)
        b = np.concatenate([[rng.normal() + 1j * siegel.norm2(bp)], bp])
        h = siegel.height(w)
        worst = max(worst,
                    abs(siegel.height(siegel.siegel_translation(b, w)) - h) / h,
                    abs(siegel.height(siegel.siegel_dilation(A, w)) - A * h) / (A * h),
                    abs(siegel.height(siegel.psi_automorphism(A, a, U, w)) - A * h) / (A * h))
    fp = siegel.psi_boundary_fixed_point(4.0, [5j, 1.0], np.eye(1))
    fp_err = float(np.max(np.abs(fp - np.array([1j, -1.0]))))
    ok = iota_err <= 1e-12 and worst <= 1e-10 and fp_err <= 1e-10
    return ok, (f"|Psi(iota) - a| = {_fmt(iota_err)} (tol 1e-12); height laws {_fmt(worst)} (tol 1e-10); "
                f"fixed point error {_fmt(fp_err)} (tol 1e-10)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def _line(k, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}"


@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1))
def test_criterion(k):
    ok, detail = CRITERIA[k - 1]()
    line = _line(k, ok, detail)
    RESULTS.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    n_fail = 0
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        n_fail += not ok
        print(_line(k, ok, detail), flush=True)
    sys.exit(1 if n_fail else 0)
