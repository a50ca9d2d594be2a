import numpy as np
import pytest
from hypothesis import given, strategies as st

from valironkit import accel


def test_aitken_is_exact_on_geometric_error():
    n = np.arange(12)
    s = 3.0 + 0.7 * 0.5 ** n
    out = accel.aitken(s)
    assert np.allclose(out, 3.0, atol=1e-14)


def test_limit_reports_certificate():
    n = np.arange(30)
    s = 1.0 + 1.0 / (n + 1.0) ** 2
    est = accel.limit(s)
    assert abs(est.value - 1.0) < 1e-3
    assert est.residual < 1e-2
    assert est.n_terms == 30


def test_limit_complex_and_constant():
    est = accel.limit(np.full(10, 2 - 1j))
    assert est.value == 2 - 1j
    assert est.residual == 0.0
    assert est.converged(1e-15)


def test_limit_short_and_empty():
    assert accel.limit([5.0]).residual == float("inf")
    est = accel.limit([1.0, 1.5])
    assert est.value == 1.5 and est.residual == 0.5
    with pytest.raises(ValueError):
        accel.limit([])


def test_limit_ignores_noisy_tail():
    # converged head followed by cancellation noise: the flattest spot wins
    rng = np.random.default_rng(0)
    s = np.concatenate([2.0 + 0.5 ** np.arange(40), 2.0 + 1e-6 * rng.normal(size=20)])
    est = accel.limit(s)
    assert abs(est.value - 2.0) < 1e-9


@given(st.floats(-10, 10), st.floats(0.05, 0.9), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_geometric_sequences_extrapolate(L, q, c):
    s = L + c * q ** np.arange(15)
    est = accel.limit(s)
    assert abs(est.value - L) <= 1e-8 * max(1.0, abs(L), abs(c))


@given(st.floats(0.1, 0.9), st.floats(0, 2 * np.pi))
def test_oscillating_sequences(q, t):
    s = 1j + (q * np.exp(1j * t)) ** np.arange(20)
    assert abs(accel.limit(s).value - 1j) < 1e-8
