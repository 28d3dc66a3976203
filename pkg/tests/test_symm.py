import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sigma2lab.symm import (
    ConvergenceError,
    cone_status,
    eigenvalues,
    newton_tensors,
    sigma_k,
    sigma_k_from_eigenvalues,
    sym4,
    upper_entries,
)


def brute_sigma(lam, k):
    # oracle: sum over k-subsets of the eigenvalues
    return sum(np.prod(c) for c in itertools.combinations(lam, k))


def random_sym(rng, n=4, scale=1.0):
    a = rng.normal(scale=scale, size=(n, n))
    return (a + a.T) / 2


sym_entries = arrays(np.float64, 10, elements=st.floats(-10, 10, allow_nan=False))


def test_sigma_identity_and_zero():
    assert sigma_k(np.eye(4), 2) == 6
    for k in range(1, 5):
        assert sigma_k(np.zeros((4, 4)), k) == 0


def test_sigma2_diag_1234():
    assert sigma_k(np.diag([1.0, 2, 3, 4]), 2) == pytest.approx(35.0, abs=1e-14)


def test_sigma_rejects_bad_k():
    with pytest.raises(ValueError):
        sigma_k(np.eye(4), 5)
    with pytest.raises(ValueError):
        sigma_k(np.eye(4), 0)


def test_sigma_matches_eigen_oracle(rng):
    for _ in range(200):
        m = random_sym(rng, scale=3.0)
        lam = np.linalg.eigvalsh(m)
        for k in range(1, 5):
            ref = brute_sigma(lam, k)
            assert sigma_k(m, k) == pytest.approx(ref, rel=1e-9, abs=1e-9 * max(1, abs(ref)))


def test_sigma_stacks(rng):
    ms = np.stack([random_sym(rng) for _ in range(7)])
    np.testing.assert_allclose(sigma_k(ms, 2), [sigma_k(m, 2) for m in ms], rtol=1e-14)


def test_sym4_roundtrip():
    e = np.arange(1.0, 11.0)
    m = sym4(e)
    assert np.array_equal(m, m.T)
    np.testing.assert_array_equal(upper_entries(m), e)


def test_eigenvalues_simple_cases():
    np.testing.assert_allclose(eigenvalues(np.diag([4.0, 3, 2, 1])), [1, 2, 3, 4])
    np.testing.assert_allclose(eigenvalues(np.eye(4)), [1, 1, 1, 1])


def test_eigen_reconstruction(rng):
    for _ in range(100):
        m = random_sym(rng, scale=5.0)
        lam, q = eigenvalues(m, return_vectors=True)
        assert np.all(np.diff(lam) >= 0)
        resid = np.linalg.norm(m - q @ np.diag(lam) @ q.T)
        assert resid <= 1e-12 * np.linalg.norm(m)
        for k in range(1, 5):
            assert sigma_k_from_eigenvalues(lam, k) == pytest.approx(
                sigma_k(m, k), rel=1e-10, abs=1e-10
            )


def test_eigen_budget_exhaustion_signals(monkeypatch, rng):
    import sigma2lab.symm as symm

    monkeypatch.setattr(symm, "MAX_SWEEPS", 0)
    with pytest.raises(ConvergenceError):
        symm.eigenvalues(random_sym(rng))


def test_cone_examples():
    s = cone_status(-np.eye(4))
    assert (s.sigma1, s.sigma2) == (-4, 6) and s.in_gamma2_minus and not s.in_gamma2_plus
    s = cone_status(np.diag([1.0, 1, 1, -1]))
    assert s.sigma1 == 2 and s.sigma2 == 0
    assert s.on_boundary and not s.in_gamma2_plus and not s.in_gamma2_minus
    assert cone_status(np.eye(4)).in_gamma2_plus


def test_newton_tensor_examples():
    t1, t2 = newton_tensors(np.eye(4))
    np.testing.assert_allclose(t1, -3 * np.eye(4))
    np.testing.assert_allclose(t2, 3 * np.eye(4))
    t1, t2 = newton_tensors(np.zeros((4, 4)))
    assert not t1.any() and not t2.any()


def test_newton_contractions(rng):
    for _ in range(50):
        d = random_sym(rng, scale=2.0)
        t1, t2 = newton_tensors(d)
        s2 = sigma_k(-d, 2)
        assert -np.sum(t1 * d) == pytest.approx(2 * s2, abs=1e-10 * max(1, abs(s2)))
        assert np.trace(t2) == pytest.approx(2 * s2, abs=1e-10 * max(1, abs(s2)))


@settings(max_examples=200, deadline=None)
@given(sym_entries)
def test_property_trace_formula(e):
    m = sym4(e)
    lam = np.linalg.eigvalsh(m)
    ref = brute_sigma(lam, 2)
    assert abs(sigma_k(m, 2) - ref) <= 1e-9 * max(1.0, np.linalg.norm(m) ** 2)


@settings(max_examples=200, deadline=None)
@given(sym_entries)
def test_property_newton_maclaurin(e):
    m = sym4(e)
    s1, s2 = sigma_k(m, 1), sigma_k(m, 2)
    assert s2 <= 3 / 8 * s1 * s1 + 1e-9 * max(1.0, np.linalg.norm(m) ** 2)
    b = m[:3, :3]
    if sigma_k(b, 1) >= 0:
        assert sigma_k(b, 2) <= sigma_k(b, 1) ** 2 / 3 + 1e-9 * max(1.0, np.linalg.norm(b) ** 2)


@settings(max_examples=100, deadline=None)
@given(sym_entries, st.floats(-3, 3, allow_nan=False))
def test_property_homogeneity(e, c):
    m = sym4(e)
    for k in range(1, 5):
        lhs, rhs = sigma_k(c * m, k), c**k * sigma_k(m, k)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * (1 + abs(c) * np.abs(m).max()) ** k)


@settings(max_examples=200, deadline=None)
@given(sym_entries)
def test_property_cone_flip(e):
    m = sym4(e)
    a, b = cone_status(m), cone_status(-m)
    assert not (a.in_gamma2_plus and a.in_gamma2_minus)
    assert a.in_gamma2_plus == b.in_gamma2_minus
    assert a.in_gamma2_minus == b.in_gamma2_plus
