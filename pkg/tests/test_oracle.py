"""Dense ground-truth tests.

Survival reference values are frozen from tests/oracles/gen_limits_values.py
(mpmath expm at 50 digits). Structural checks rebuild the generator here
from an independent tuple-based walk.
"""
import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.linalg import expm

from eastcoal.oracle import (build_generator, hitting_cdf_exact,
                             lambda_exact, reachable_sweep,
                             spectral_gap_exact, stationary_weights,
                             survival_probability_exact,
                             transition_distribution_exact)

SURVIVAL_ORACLE = {
    (1, 0.1, 2.0): 0.165298888221586538,
    (3, 0.2, 5.0): 0.930031648963582369,
    (4, 0.1, 10.0): 0.991794603324010718,
    (4, 0.3, 3.0): 0.988783291772762307,
    (2, 0.25, 1.5): 0.898991069265059061,
}


def ref_generator(L, q):
    """Tuple-based rebuild: configs as tuples, flips collected per site."""
    dim = 2 ** L
    K = np.zeros((dim, dim))
    for s in range(dim):
        sigma = tuple((s >> x) & 1 for x in range(L))
        for x in range(L):
            right = sigma[x + 1] if x + 1 < L else 0  # frozen zero at L
            if right == 1:
                continue
            rate = q if sigma[x] == 1 else 1.0 - q
            flipped = list(sigma)
            flipped[x] = 1 - flipped[x]
            t = sum(b << i for i, b in enumerate(flipped))
            K[s, t] += rate
        K[s, s] = -K[s].sum()
    return K


def rk4_survival(d, q, T, steps=4000):
    """Fine-step classical RK4 on v' = K_AA v, read off the start entry."""
    full = build_generator(d, q).matrix
    states = [s for s in range(2 ** d) if not s & 1]
    K = full[np.ix_(states, states)]
    v = np.ones(len(states))
    h = T / steps
    for _ in range(steps):
        k1 = K @ v
        k2 = K @ (v + 0.5 * h * k1)
        k3 = K @ (v + 0.5 * h * k2)
        k4 = K @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return float(v[states.index(2 ** d - 2)])


def test_generator_matches_reference():
    for L, q in ((1, 0.1), (3, 0.3), (4, 0.2), (5, 0.45)):
        K = build_generator(L, q).matrix
        np.testing.assert_allclose(K, ref_generator(L, q), atol=1e-14)


def test_generator_rows_sum_to_zero():
    K = build_generator(6, 0.15).matrix
    np.testing.assert_allclose(K.sum(axis=1), 0.0, atol=1e-12)
    off = K - np.diag(np.diag(K))
    assert off.min() >= 0.0


def test_generator_size_guard():
    with pytest.raises(ValueError, match="too large for dense oracle"):
        build_generator(15, 0.1)
    with pytest.raises(ValueError):
        build_generator(0, 0.1)


def test_detailed_balance():
    L, q = 4, 0.3
    K = build_generator(L, q).matrix
    pi = stationary_weights(L, q)
    np.testing.assert_allclose(pi[:, None] * K, (pi[:, None] * K).T,
                               atol=1e-14)
    np.testing.assert_allclose(pi @ K, 0.0, atol=1e-13)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)


def test_gap_single_site_is_one():
    for q in (0.1, 0.3, 0.5):
        assert spectral_gap_exact(1, q) == pytest.approx(1.0, abs=1e-12)


def test_gap_matches_nonsymmetric_eigvals():
    for L, q in ((2, 0.1), (3, 0.3), (4, 0.45), (5, 0.2)):
        K = build_generator(L, q).matrix
        raw = np.linalg.eigvals(-K)
        assert np.abs(raw.imag).max() < 1e-10
        evals = np.sort(raw.real)
        assert spectral_gap_exact(L, q) == pytest.approx(evals[1], abs=1e-9)


def test_gap_hierarchical_lower_bound():
    # gap >= (q/2)^n whenever L <= 2^n
    for L, n, q in ((2, 1, 0.1), (4, 2, 0.3), (7, 3, 0.2), (8, 3, 0.1)):
        assert spectral_gap_exact(L, q) >= (q / 2.0) ** n


def test_survival_frozen_values():
    for (d, q, T), want in SURVIVAL_ORACLE.items():
        assert survival_probability_exact(d, q, T) == pytest.approx(
            want, rel=1e-10)


def test_survival_single_site_closed_form():
    for q, T in ((0.1, 2.0), (0.3, 0.7), (0.45, 12.0)):
        assert survival_probability_exact(1, q, T) == pytest.approx(
            math.exp(-(1.0 - q) * T), rel=1e-12)


def test_survival_against_rk4():
    cases = [(2, 0.1, 1.0), (2, 0.3, 4.0), (3, 0.1, 4.0), (3, 0.3, 1.0),
             (3, 0.2, 8.0), (4, 0.2, 2.5), (4, 0.1, 1.0), (4, 0.3, 4.0),
             (5, 0.25, 1.5), (5, 0.1, 3.0)]
    for d, q, T in cases:
        assert survival_probability_exact(d, q, T) == pytest.approx(
            rk4_survival(d, q, T), abs=1e-9)


def test_survival_monotone_and_bounded():
    vals = [survival_probability_exact(3, 0.2, T)
            for T in (0.0, 0.5, 2.0, 10.0, 50.0)]
    assert vals[0] == 1.0
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.0


def test_lambda_single_site_exact():
    sched = SimpleNamespace(T=[0.34, 1.6])
    for q in (0.1, 0.25, 0.4):
        assert lambda_exact(0, 1, q, sched) == pytest.approx(
            1.0 - q, abs=1e-12)
    # off-class rate vanishes identically
    assert lambda_exact(0, 2, 0.1, sched) == 0.0
    assert lambda_exact(1, 1, 0.1, sched) == 0.0


def test_lambda_underflow_guard():
    sched = SimpleNamespace(T=[2000.0])
    with pytest.raises(ValueError, match="too large for exact rate"):
        lambda_exact(0, 1, 0.1, sched)


def test_hitting_cdf_single_site():
    ts = np.array([0.0, 0.5, 1.0, 3.0])
    q = 0.2
    cdf, gamma = hitting_cdf_exact(1, q, ts)
    np.testing.assert_allclose(cdf, 1.0 - np.exp(-(1 - q) * ts), atol=1e-10)
    assert gamma == pytest.approx(1.0 / (1.0 - q), abs=1e-9)


def test_hitting_cdf_consistent_with_survival():
    ts = np.array([0.3, 1.0, 2.5, 7.0])
    cdf, gamma = hitting_cdf_exact(3, 0.2, ts)
    for t, c in zip(ts, cdf):
        assert c == pytest.approx(
            1.0 - survival_probability_exact(3, 0.2, t), abs=1e-11)
    assert survival_probability_exact(3, 0.2, gamma) == pytest.approx(
        math.exp(-1.0), abs=1e-9)


def test_hitting_cdf_input_validation():
    with pytest.raises(ValueError, match="ascending"):
        hitting_cdf_exact(2, 0.2, [1.0, 0.5])
    with pytest.raises(ValueError):
        hitting_cdf_exact(2, 0.2, [-1.0, 0.5])


def test_transition_distribution_against_expm():
    L, q, t = 3, 0.2, 5.0
    K = build_generator(L, q).matrix
    start = 2 ** L - 1
    want = expm(t * K)[start]
    got = transition_distribution_exact(L, q, t, start)
    np.testing.assert_allclose(got, want, atol=1e-11)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


def test_transition_distribution_long_time_stationary():
    L, q = 4, 0.3
    got = transition_distribution_exact(L, q, 1500.0, 2 ** L - 1)
    np.testing.assert_allclose(got, stationary_weights(L, q), atol=1e-10)


def test_reachable_ell_doubles():
    for n in (1, 2, 3, 4):
        res = reachable_sweep(2 ** n, n)
        assert res.ell == 2 ** n - 1
    # extra room does not let the front go farther
    assert reachable_sweep(6, 2).ell == 3


def test_reachable_small_counts():
    res = reachable_sweep(1, 1)
    assert (res.reached, res.ell) == (2, 1)
    res = reachable_sweep(2, 1)
    # only the boundary site can empty; site 0 stays blocked behind it
    assert (res.reached, res.ell) == (2, 1)


def test_reachable_budget_guard():
    with pytest.raises(ValueError):
        reachable_sweep(25, 1)
    with pytest.raises(ValueError):
        reachable_sweep(8, 5)
