import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from valironkit import siegel as s
from valironkit.errors import DomainError


def ball_point(N, rmax=0.95):
    return st.builds(
        lambda re, im, r: (lambda v: v / np.linalg.norm(v) * r)(np.array(re) + 1j * np.array(im) + 1e-9),
        st.lists(st.floats(-1, 1), min_size=N, max_size=N),
        st.lists(st.floats(-1, 1), min_size=N, max_size=N),
        st.floats(0, rmax))


def siegel_point(N):
    return st.builds(
        lambda x, wp_re, wp_im, h: np.concatenate(
            [[x + 1j * (float(np.sum(np.abs(np.array(wp_re) + 1j * np.array(wp_im)) ** 2)) + h)],
             np.array(wp_re) + 1j * np.array(wp_im)]),
        st.floats(-5, 5), st.lists(st.floats(-3, 3), min_size=N - 1, max_size=N - 1),
        st.lists(st.floats(-3, 3), min_size=N - 1, max_size=N - 1), st.floats(1e-2, 10))


def boundary_point(N):
    return st.builds(
        lambda x, re, im: np.concatenate(
            [[x + 1j * float(np.sum(np.abs(np.array(re) + 1j * np.array(im)) ** 2))],
             np.array(re) + 1j * np.array(im)]),
        st.floats(-5, 5), st.lists(st.floats(-2, 2), min_size=N - 1, max_size=N - 1),
        st.lists(st.floats(-2, 2), min_size=N - 1, max_size=N - 1))


# --- ball --------------------------------------------------------------------------------

def test_ball_automorphism_values():
    a = np.array([0.3, 0.2j])
    assert np.allclose(s.ball_automorphism(a, a), 0)
    assert s.ball_automorphism([0.5], [0.0]) == pytest.approx(-0.5)
    assert np.allclose(s.ball_automorphism(a, np.zeros(2)), -a)
    with pytest.raises(DomainError):
        s.ball_automorphism([1.0, 0.0], [0.0, 0.0])


def test_q_values():
    a = np.array([0.3, 0.4j])
    assert s.q_quantity(a, a) == pytest.approx(1.0)
    b = np.array([0.1, -0.5])
    assert s.q_quantity(np.zeros(2), b) == pytest.approx(1 / (1 - s.norm2(b)))
    assert s.q_quantity([0.5, 0], [0, 0.5]) == pytest.approx(16 / 9)


@given(ball_point(2), ball_point(2, 0.9))
def test_ball_automorphism_inverse(z, a):
    # gamma_a = -phi_a with phi_a the involution, so gamma_a^{-1}(w) = -gamma_a(-w)
    w = s.ball_automorphism(a, z)
    assert s.norm2(w) < 1
    assert np.allclose(-s.ball_automorphism(a, -w), z, atol=1e-9)


@given(ball_point(3), ball_point(3), ball_point(3, 0.9))
def test_ball_distance_invariant(z, w, a):
    d0 = s.ball_distance(z, w)
    d1 = s.ball_distance(s.ball_automorphism(a, z), s.ball_automorphism(a, w))
    assert d1 == pytest.approx(d0, abs=1e-8)


# --- Siegel domain ----------------------------------------------------------------------------

def test_translation_values():
    w = np.array([0.5 + 2j, 0.3 - 0.1j])
    out = s.siegel_translation([1.0, 0], w)
    assert np.allclose(out, w + np.array([1.0, 0]))
    h = s.siegel_translation([1j, 1.0], s.iota(2))
    assert np.allclose(h, [2j, 1.0])
    assert s.height(h) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        s.siegel_translation([1j, 2.0], w)


def test_dilation_values():
    w = np.array([2j, 1.0])
    assert np.allclose(s.siegel_dilation(1.0, w), w)
    assert np.allclose(s.siegel_dilation(4.0, s.iota(2)), [4j, 0])
    out = s.siegel_dilation(4.0, w)
    assert np.allclose(out, [8j, 2.0])
    assert s.height(out) == pytest.approx(4.0)


def test_psi_values():
    A = 4.0
    a = np.array([0.2 + 1j * (4.0 + 0.25 + 1.0), 0.5, 1j])
    U = np.diag(np.exp([0.3j, -1.1j]))
    assert np.allclose(s.psi_automorphism(A, a, U, s.iota(3)), a, atol=1e-12)
    w = np.array([1 + 3j, 0.5, 0.2j])
    assert np.allclose(s.psi_automorphism(A, [A * 1j, 0, 0], np.eye(2), w), s.siegel_dilation(A, w))


def test_psi_fixed_points():
    c = s.psi_boundary_fixed_point(4.0, [5j, 1.0], np.eye(1))
    assert np.allclose(c, [1j, -1.0], atol=1e-10)
    assert np.allclose(s.psi_automorphism(4.0, [5j, 1.0], np.eye(1), c), c, atol=1e-10)
    c0 = s.psi_boundary_fixed_point(3.0, [3j, 0.0], np.eye(1))
    assert np.allclose(c0, 0)


def test_psi_conjugates_to_normal_form():
    # translating the finite fixed point to 0 turns Psi into Psi_0 = (A w1, sqrt(A) U w')
    A, a, U = 4.0, np.array([5j, 1.0]), np.eye(1)
    c = s.psi_boundary_fixed_point(A, a, U)
    h = lambda w: s.siegel_translation(s.heisenberg_inverse(c), w)   # noqa: E731
    hinv = lambda w: s.siegel_translation(c, w)                      # noqa: E731
    rng = np.random.default_rng(1)
    for _ in range(50):
        wp = rng.normal() + 1j * rng.normal()
        w = np.array([rng.normal() + 1j * (abs(wp) ** 2 + rng.exponential()), wp])
        lhs = h(s.psi_automorphism(A, a, U, hinv(w)))
        assert np.allclose(lhs, s.psi0(A, U, w), atol=1e-10 * max(1, np.max(np.abs(lhs))))


def test_threshold_constant():
    assert s.KORANYI_THRESHOLD == pytest.approx(0.171572875253810, abs=1e-14)
    assert s.KORANYI_THRESHOLD == pytest.approx(3 - math.sqrt(8))


def test_cayley_anchor_and_one_variable_case():
    assert np.allclose(s.ball_cayley(np.zeros(3)), s.iota(3))
    rng = np.random.default_rng(2)
    for _ in range(100):
        z = 0.9 * rng.uniform() * np.exp(2j * np.pi * rng.uniform())
        # N = 1 agrees with the disk Cayley transform i(1+z)/(1-z)
        assert s.ball_cayley([z])[0] == pytest.approx(1j * (1 + z) / (1 - z))


@given(siegel_point(3), boundary_point(3))
def test_translation_preserves_height(w, b):
    assert s.height(s.siegel_translation(b, w)) == pytest.approx(s.height(w), rel=1e-9, abs=1e-9)


@given(siegel_point(3), boundary_point(3))
def test_heisenberg_group_inverse(w, b):
    back = s.siegel_translation(s.heisenberg_inverse(b), s.siegel_translation(b, w))
    assert np.allclose(back, w, atol=1e-9 * max(1.0, float(np.max(np.abs(w))), float(np.max(np.abs(b)))) ** 2)


@given(siegel_point(2), st.floats(0.1, 10))
def test_dilation_scales_height(w, A):
    assert s.height(s.siegel_dilation(A, w)) == pytest.approx(A * s.height(w), rel=1e-9)


@given(ball_point(3, 0.99))
def test_cayley_height_identity(z):
    w = s.ball_cayley(z)
    assert s.height(w) * s.koranyi_functional(z) * abs(1 - z[0]) == pytest.approx(1.0, rel=1e-8)
    assert np.allclose(s.ball_cayley_inverse(w), z, atol=1e-9)


@given(siegel_point(2), siegel_point(2))
def test_siegel_forms_match_ball_quantities(w, v):
    z, y = s.ball_cayley_inverse(w), s.ball_cayley_inverse(v)
    assert s.siegel_one_minus_norm2(w) == pytest.approx(1 - s.norm2(z), rel=1e-6, abs=1e-12)
    assert s.siegel_koranyi(w) == pytest.approx(s.koranyi_functional(z), rel=1e-6)
    assert s.siegel_q(w, v) == pytest.approx(s.q_quantity(z, y), rel=1e-6)
    assert s.siegel_distance(w, v) == pytest.approx(s.ball_distance(z, y), abs=1e-6)
