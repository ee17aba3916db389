"""Exact finite-state ground truth for small volumes.

Configurations on [0, L-1] are encoded as integers with bit x holding
the occupation of site x. The frozen zero sits at L, so site L-1 is
always free to flip. Everything here is dense linear algebra, intended
for L up to 14 and routinely used far below that.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .domain_classes import class_of

DENSE_LIMIT = 14
UNIFORMIZATION_TOL = 1e-12
_CHUNK_RATE = 64.0  # max Lambda*tau per uniformization chunk


@dataclass
class GeneratorMatrix:
    L: int
    q: float
    matrix: np.ndarray  # dense 2^L x 2^L, rows sum to zero


@dataclass
class ReachabilityResult:
    n: int
    L: int
    reached: int
    ell: int


def _check_L(L: int):
    if not 1 <= L <= DENSE_LIMIT:
        raise ValueError("state space too large for dense oracle")


def build_generator(L: int, q: float) -> GeneratorMatrix:
    """Dense East generator on [0, L-1] with frozen zero at L.

    Site x rings iff sigma(x+1) = 0 (or x = L-1); a ring refreshes the
    site to 1 w.p. 1-q and to 0 w.p. q, so the flip rate is q out of an
    occupied site and 1-q out of an empty one.
    """
    _check_L(L)
    dim = 2 ** L
    K = np.zeros((dim, dim))
    for s in range(dim):
        for x in range(L):
            if x < L - 1 and (s >> (x + 1)) & 1:
                continue  # right neighbor occupied: constrained
            occupied = (s >> x) & 1
            rate = q if occupied else 1.0 - q
            t = s ^ (1 << x)
            K[s, t] += rate
            K[s, s] -= rate
    return GeneratorMatrix(L=L, q=q, matrix=K)


def stationary_weights(L: int, q: float) -> np.ndarray:
    """Product Bernoulli(1-q) weights over the bit encoding."""
    pi = np.ones(2 ** L)
    for s in range(2 ** L):
        ones = bin(s).count("1")
        pi[s] = (1.0 - q) ** ones * q ** (L - ones)
    return pi


def spectral_gap_exact(L: int, q: float) -> float:
    """Smallest nonzero eigenvalue of -generator, via the symmetrized
    matrix D^(1/2) (-K) D^(-1/2), D = diag(pi)."""
    _check_L(L)
    K = build_generator(L, q).matrix
    pi = stationary_weights(L, q)
    root = np.sqrt(pi)
    S = (root[:, None] * K) / root[None, :]
    S = 0.5 * (S + S.T)
    try:
        evals = np.linalg.eigvalsh(-S)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
    resid = abs(float(evals[0]))
    if resid > 1e-10:
        raise RuntimeError(
            f"spectral residual {resid:.3e} exceeds 1e-10 tolerance")
    return float(evals[1])


def _uniformized_action(K: np.ndarray, T: float, v: np.ndarray,
                        tol: float = UNIFORMIZATION_TOL) -> np.ndarray:
    """exp(T K) @ v for a (sub-)generator K, by Poisson-weighted powers
    of P = I + K/Lambda. Truncation error <= tol in sup norm, split
    across chunks so Lambda*tau stays in a float-friendly range."""
    lam = float(np.max(-np.diag(K)))
    if lam <= 0.0 or T == 0.0:
        return v.copy()
    n_chunks = max(1, int(math.ceil(lam * T / _CHUNK_RATE)))
    tau = T / n_chunks
    P = np.eye(K.shape[0]) + K / lam
    a = lam * tau
    chunk_tol = tol / n_chunks
    for _ in range(n_chunks):
        w = math.exp(-a)
        cum = w
        term = v.copy()
        acc = w * term
        k = 0
        while cum < 1.0 - chunk_tol:
            k += 1
            w *= a / k
            term = P @ term
            acc += w * term
            cum += w
            if k > 100000:
                raise RuntimeError("uniformization failed to converge")
        v = acc
    return v


def _survival_states(d: int):
    """States of the [0, d-1] volume with the origin empty."""
    states = [s for s in range(2 ** d) if not s & 1]
    index = {s: i for i, s in enumerate(states)}
    return states, index

def _sub_generator(d: int, q: float) -> tuple[np.ndarray, int]:
    """Killed generator on {sigma(0)=0}; returns it with the row index
    of the start state (0, 1, ..., 1). Diagonal keeps the exit rates,
    so exp(T K) row sums give survival probabilities."""
    full = build_generator(d, q).matrix
    states, index = _survival_states(d)
    sel = np.array(states)
    # principal submatrix: diagonal keeps rates that leave A, so row
    # sums are negative and exp(T K) 1 decays like the survival should
    K = full[np.ix_(sel, sel)].copy()
    start = index[2 ** d - 2]
    return K, start


def survival_probability_exact(d: int, q: float, T: float) -> float:
    """P over the volume [0, d-1], started from (0,1,...,1), that the
    origin stays empty up to time T. Uniformization, error <= 1e-12."""
    if not 1 <= d <= DENSE_LIMIT:
        raise ValueError("state space too large for dense oracle")
    if T < 0:
        raise ValueError("T must be >= 0")
    K, start = _sub_generator(d, q)
    v = _uniformized_action(K, T, np.ones(K.shape[0]))
    return float(v[start])


def lambda_exact(n: int, d: int, q: float, schedule) -> float:
    """Epoch-n kill rate: -log survival(d, q, T_n) / T_n for d in C_n,
    zero otherwise."""
    if class_of(d) != n:
        return 0.0
    T_n = schedule.T[n]
    p = survival_probability_exact(d, q, T_n)
    if p <= 0.0:
        raise ValueError("T_n too large for exact rate")
    return -math.log(p) / T_n


def hitting_cdf_exact(d: int, q: float, ts) -> tuple[np.ndarray, float]:
    """CDF of the first time the origin fills, plus gamma with
    P(tau > gamma) = exp(-1), located by bisection."""
    ts = np.asarray(ts, dtype=np.float64)
    if ts.ndim != 1 or (np.diff(ts) < 0).any():
        raise ValueError("ts must be ascending")
    if (ts < 0).any():
        raise ValueError("ts must be nonnegative")
    K, start = _sub_generator(d, q)
    cdf = np.empty(len(ts))
    v = np.ones(K.shape[0])
    prev_t = 0.0
    for i, t in enumerate(ts):
        v = _uniformized_action(K, t - prev_t, v)
        cdf[i] = 1.0 - v[start]
        prev_t = t

    target = math.exp(-1.0)
    # bracket then bisect, propagating the survival vector from the
    # left endpoint so each probe only integrates the increment
    lo, v_lo = 0.0, np.ones(K.shape[0])
    hi = 1.0
    while True:
        v_hi = _uniformized_action(K, hi - lo, v_lo)
        if v_hi[start] <= target:
            break
        lo, v_lo = hi, v_hi
        hi *= 2.0
        if hi > 1e18:
            raise RuntimeError("gamma bracket search overflow")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v_mid = _uniformized_action(K, mid - lo, v_lo)
        if v_mid[start] > target:
            lo, v_lo = mid, v_mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(hi, 1.0):
            break
    return cdf, 0.5 * (lo + hi)


def transition_distribution_exact(L: int, q: float, t: float,
                                  start: int) -> np.ndarray:
    """Row of exp(t K) from bit-encoded state `start`: the exact law of
    sigma_t over all 2^L configurations. Uniformization, error <= 1e-12."""
    _check_L(L)
    K = build_generator(L, q).matrix
    row = np.zeros(2 ** L)
    row[start] = 1.0
    # propagate the distribution: row(t) = row(0) exp(t K)
    return _uniformized_action(K.T, t, row)


def reachable_sweep(L: int, n: int) -> ReachabilityResult:
    """BFS from the fully occupied state over legal flips, never
    allowing more than n zeros; ell is the farthest the leftmost zero
    gets from the frozen boundary, max over visited states of L - x0."""
    if L > 24 or n > 4:
        raise ValueError(f"reachability budget exceeded: L={L}, n={n}")
    full = 2 ** L - 1
    budget = sum(math.comb(L, k) for k in range(n + 1))
    seen = {full}
    queue = deque([full])
    ell = 0
    while queue:
        s = queue.popleft()
        zeros = L - bin(s).count("1")
        if zeros:
            x0 = min(x for x in range(L) if not (s >> x) & 1)
            ell = max(ell, L - x0)
        for x in range(L):
            if x < L - 1 and (s >> (x + 1)) & 1:
                continue
            t = s ^ (1 << x)
            if L - bin(t).count("1") > n or t in seen:
                continue
            seen.add(t)
            queue.append(t)
        if len(seen) > budget:
            raise RuntimeError(
                f"reachability search exceeded budget, visited {len(seen)}")
    return ReachabilityResult(n=n, L=L, reached=len(seen), ell=ell)
