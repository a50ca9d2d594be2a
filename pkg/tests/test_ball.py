import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from valironkit import ball as b
from valironkit.corpus import by_name, several_variables, siegel_claim_map
from valironkit.maps import MapDescriptor, evaluate, stack, to_ball, var

A8 = siegel_claim_map(8.0)
A2 = siegel_claim_map(2.0)
BALL_A8 = to_ball(A8)
SHRINK = MapDescriptor("ball", stack(0.5 * var(0), 0.5 * var(1)), 2, name="shrink")


# --- dilatation coefficient ----------------------------------------------------------------

@pytest.mark.parametrize("entry", several_variables(), ids=lambda e: e.name)
def test_dilatation_of_corpus(entry):
    d = b.ball_dilatation(entry.m)
    assert d.c == pytest.approx(entry.known["c"], abs=1e-6)
    assert not d.flagged
    assert all(v["ok"] for v in d.iterate_law.values())


def test_iterate_law_values():
    d = b.ball_dilatation(A8)
    assert d.iterate_law[2]["c_n"] == pytest.approx(0.125 ** 2, rel=1e-6)
    assert d.iterate_law[3]["c_pow_n"] == pytest.approx(0.125 ** 3, rel=1e-6)
    assert d.radial.value == pytest.approx(d.orbital.value, abs=1e-6)


# --- Siegel coordinates --------------------------------------------------------------------

def test_siegel_form():
    assert b.siegel_form(A8) is A8
    assert b.siegel_form(BALL_A8).dumps() == A8.dumps()
    assert b.siegel_form(by_name("ball_mobius_a05").m) is None
    with pytest.raises(ValueError):
        b.siegel_form(MapDescriptor("disk", var()))


def test_to_siegel_point():
    assert np.allclose(b.to_siegel_point(A8, np.zeros(2)), [1j, 0])
    w = np.array([1 + 3j, 0.5])
    assert np.array_equal(b.to_siegel_point(A8, b.SiegelPoint.from_vector(w)), w)


def test_closed_form_psi0_orbit():
    U = np.diag([np.exp(0.4j)])
    w = np.array([0.5 + 2j, 0.3 + 0.1j])
    it = w.copy()
    for _ in range(5):
        it = b.psi0(4.0, U, it)
    assert np.allclose(b.closed_form_psi0_orbit(4.0, U, w, 5), it, rtol=1e-12)


# --- Koranyi trace ----------------------------------------------------------------------------

def test_koranyi_trace_bounded_for_small_c():
    tr = b.koranyi_trace(A8, np.zeros(2), n=200)
    assert tr.c == pytest.approx(0.125, abs=1e-9)
    assert tr.bounded_verdict and tr.stable and tr.julia_ok
    assert tr.L.size == 201 and tr.S.size == 200
    assert tr.sup_L == pytest.approx(np.max(tr.L))
    assert b.julia_along_orbit(tr) <= 1e-9


def test_koranyi_trace_ball_and_siegel_agree():
    a = b.koranyi_trace(A8, np.array([0.2, 0.1j]), n=60)
    c = b.koranyi_trace(BALL_A8, np.array([0.2, 0.1j]), n=60)
    assert np.allclose(a.L, c.L, rtol=1e-12)


def test_koranyi_trace_csv(tmp_path):
    tr = b.koranyi_trace(A8, np.zeros(2), n=10)
    p = tmp_path / "k.csv"
    tr.write_csv(p, ["tool=x"])
    lines = p.read_text().splitlines()
    assert lines[0] == "# tool=x"
    assert lines[1] == "n,L,S,height,re_z1,im_z1"
    assert len(lines) == 2 + 11
    assert lines[-1].split(",")[2] == ""


def test_koranyi_trace_needs_siegel_form():
    with pytest.raises(ValueError):
        b.koranyi_trace(by_name("ball_mobius_a05").m, np.zeros(1), n=10)


def test_bounded_verdict():
    assert b.bounded_verdict(np.array([1.0, 3.0, 2.0, 2.0]))[0]
    ok, amax = b.bounded_verdict(np.arange(1.0, 9.0))
    assert not ok and amax == 7
    # ties within rounding in the tail still count as attained early
    assert b.bounded_verdict(np.array([1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0 * (1 + 1e-12)]))[0]


# --- claim extension -------------------------------------------------------------------------

def test_claim_extension_through_iterates():
    res = b.claim_extension_check(A2, np.zeros(2), 3, n=100)
    assert res.c == pytest.approx(0.5, abs=1e-8)
    assert res.c_power == pytest.approx(0.125, abs=1e-8)
    assert res.c_power < b.KORANYI_THRESHOLD
    assert res.bounded and res.interleave_ok
    assert res.full_L.size == 301
    assert res.sup_L == pytest.approx(np.max(res.full_L))


def test_claim_extension_rejects_large_power():
    with pytest.raises(ValueError):
        b.claim_extension_check(A2, np.zeros(2), 2, n=10)


def test_seed_points_deterministic_and_inside():
    a = b.seed_points(3, 5, rng_seed=4)
    c = b.seed_points(3, 5, rng_seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a, c))
    assert all(np.linalg.norm(x) <= 0.9 for x in a)
    assert not np.array_equal(a[0], b.seed_points(3, 5, rng_seed=5)[0])


# --- interior attractor -----------------------------------------------------------------------

def test_interior_attractor():
    assert np.allclose(b.interior_attractor(SHRINK), 0, atol=1e-12)
    assert b.interior_attractor(A8) is None
    assert b.interior_attractor(by_name("ball_mobius_a05").m) is None


# --- sampled invariants -----------------------------------------------------------------------

@pytest.mark.parametrize("name", ["mobius_a05", "two_z_plus_sqrt", "siegel_claim_A8",
                                  "ball_claim_A8", "siegel_psi_A4", "ball_mobius_a05"])
def test_pair_monotonicity(name):
    res = b.pair_monotonicity(by_name(name).m, n_pairs=2000)
    assert res.passed, (res.q_excess, res.d_excess)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_pair_monotonicity_detects_non_self_map():
    bad = MapDescriptor("ball", stack(1.5 * var(0), var(1)), 2)
    assert not b.pair_monotonicity(bad, n_pairs=500).passed


def ball_point(rmax=0.9):
    return st.builds(
        lambda re, im, r: (lambda v: v / np.linalg.norm(v) * r)(np.array(re) + 1j * np.array(im) + 1e-9),
        st.lists(st.floats(-1, 1), min_size=2, max_size=2),
        st.lists(st.floats(-1, 1), min_size=2, max_size=2),
        st.floats(0, rmax))


@given(ball_point(), ball_point())
def test_q_does_not_increase(z, w):
    fz, fw = evaluate(BALL_A8, z), evaluate(BALL_A8, w)
    assert b.q_quantity(fz, fw) <= b.q_quantity(z, w) * (1 + 1e-9)


@given(ball_point(), ball_point())
def test_distance_contracts(z, w):
    fz, fw = evaluate(BALL_A8, z), evaluate(BALL_A8, w)
    assert b.ball_distance(fz, fw) <= b.ball_distance(z, w) + 1e-9


@given(st.floats(1.01, 50.0))
def test_koranyi_trace_of_dilations(A):
    # the origin goes to (A^n i, 0), so L_n = (1 + A^-n) / 2 and the maximum is L_0
    m = MapDescriptor("siegel", stack(A * var(0), math.sqrt(A) * var(1)), 2)
    tr = b.koranyi_trace(m, np.zeros(2), n=40, c=1.0 / A)
    n = np.arange(41)
    assert np.allclose(tr.L, (1 + float(A) ** -n) / 2, rtol=1e-12)
    assert tr.argmax == 0 and tr.bounded_verdict and tr.julia_ok
