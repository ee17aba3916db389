"""East-process simulation on the volume [0, L-1] with a frozen zero
at L.

Site x may refresh only when sigma(x+1) = 0 (x = L-1 always may, thanks
to the frozen boundary); a refresh fills with probability 1-q and
empties with probability q, so flips happen at rate q out of occupied
and 1-q out of empty active sites. The heavy lifting is done by the
compiled kernel in _kernel; this module owns the domain types, the
renewal initial laws, and the ensemble drivers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from . import _kernel
from .rng import batch_seeds

MASS_TOL = 1e-12


@dataclass
class Configuration:
    """Occupation on [0, L-1], bit per site, plus the sorted zero set.

    The domain of a zero u is the interval to the next zero (the frozen
    boundary for the rightmost one), so its length is next(u) - u, and
    L - u for the last zero.
    """

    L: int
    occupation: np.ndarray
    zeros: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("volume must contain at least one site")
        self.occupation = np.ascontiguousarray(self.occupation,
                                               dtype=np.uint8)
        if self.occupation.shape != (self.L,):
            raise ValueError("occupation length must equal L")
        derived = np.flatnonzero(self.occupation == 0).astype(np.int64)
        if self.zeros is None:
            self.zeros = derived
        else:
            self.zeros = np.asarray(self.zeros, dtype=np.int64)
            if not np.array_equal(self.zeros, derived):
                raise ValueError("zeros list disagrees with occupation")

    @classmethod
    def single_zero(cls, L: int) -> "Configuration":
        occ = np.ones(L, dtype=np.uint8)
        occ[0] = 0
        return cls(L=L, occupation=occ)

    @classmethod
    def fully_occupied(cls, L: int) -> "Configuration":
        return cls(L=L, occupation=np.ones(L, dtype=np.uint8))

    @classmethod
    def from_zeros(cls, L: int, zeros) -> "Configuration":
        occ = np.ones(L, dtype=np.uint8)
        occ[np.asarray(zeros, dtype=np.int64)] = 0
        return cls(L=L, occupation=occ)

    def domain_lengths(self) -> np.ndarray:
        """Length per zero, left to right; empty when there are none."""
        if len(self.zeros) == 0:
            return np.empty(0, dtype=np.int64)
        return np.diff(np.append(self.zeros, self.L))

    def copy(self) -> "Configuration":
        return Configuration(L=self.L, occupation=self.occupation.copy())


@dataclass
class RenewalLaw:
    """First zero ~ nu on {0..x_max}, then i.i.d. gaps ~ mu on
    {1..x_max}. Stored vectors are normalized; mass cut off by the
    truncation is kept in nu_tail / mu_tail for reporting."""

    nu: np.ndarray
    mu: np.ndarray
    nu_tail: float = 0.0
    mu_tail: float = 0.0

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=np.float64)
        self.mu = np.asarray(self.mu, dtype=np.float64)
        if self.nu.ndim != 1 or self.mu.ndim != 1:
            raise ValueError("nu and mu must be vectors")
        n = max(len(self.nu), len(self.mu))
        self.nu = np.pad(self.nu, (0, n - len(self.nu)))
        self.mu = np.pad(self.mu, (0, n - len(self.mu)))
        if self.nu.min() < 0 or self.mu.min() < 0:
            raise ValueError("renewal weights must be nonnegative")
        if self.mu[0] != 0.0:
            raise ValueError("gap law must put no mass at 0")
        for name, w in (("nu", self.nu), ("mu", self.mu)):
            if abs(w.sum() - 1.0) > MASS_TOL:
                raise ValueError(
                    f"{name} must sum to 1 within {MASS_TOL}; "
                    "use RenewalLaw.truncated for unnormalized input")

    @property
    def x_max(self) -> int:
        return len(self.nu) - 1

    @classmethod
    def truncated(cls, nu_weights, mu_weights) -> "RenewalLaw":
        """Build from (possibly) deficient vectors, renormalizing and
        recording the removed tail mass."""
        nu = np.asarray(nu_weights, dtype=np.float64)
        mu = np.asarray(mu_weights, dtype=np.float64)
        nu_tail = 1.0 - float(nu.sum())
        mu_tail = 1.0 - float(mu.sum())
        if nu.sum() <= 0 or mu.sum() <= 0:
            raise ValueError("renewal law has no mass to normalize")
        return cls(nu=nu / nu.sum(), mu=mu / mu.sum(),
                   nu_tail=nu_tail, mu_tail=mu_tail)

    @classmethod
    def from_measures(cls, nu_measure, mu_measure) -> "RenewalLaw":
        """Bridge from recursion-output measures, renormalizing away
        any truncation defect (recorded in the tail fields)."""
        return cls.truncated(nu_measure.weights, mu_measure.weights)

    @classmethod
    def pinned(cls, mu_weights) -> "RenewalLaw":
        """First zero pinned at the origin (nu = delta_0)."""
        mu = np.asarray(mu_weights, dtype=np.float64)
        nu = np.zeros(len(mu))
        nu[0] = 1.0
        return cls.truncated(nu, mu)

    def nu_cdf(self) -> np.ndarray:
        return np.cumsum(self.nu)

    def mu_cdf(self) -> np.ndarray:
        return np.cumsum(self.mu)

    def to_json(self) -> str:
        return json.dumps({"nu": self.nu.tolist(), "mu": self.mu.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "RenewalLaw":
        obj = json.loads(text)
        return cls.truncated(obj["nu"], obj["mu"])


@dataclass
class SimParams:
    q: float
    seed: int
    horizon: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.q <= 0.5:
            raise ValueError(f"q must lie in (0, 1/2], got {self.q}")
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")


@dataclass
class ObservableSeries:
    """Per-probe record of one trajectory; to_csv writes the layout
    t,p0,persist,x0,...,x{k-1},nzeros with sentinel x_j = L once the
    zero set is exhausted."""

    probes: np.ndarray
    p0: np.ndarray
    persist: np.ndarray
    zeros_k: np.ndarray
    nzeros: np.ndarray
    domain_hist: list
    first_flip: float
    L: int
    k: int

    def __post_init__(self):
        if (np.diff(self.probes) < 0).any():
            raise ValueError("probe times must be ascending")
        if (np.diff(self.persist.astype(np.int8)) > 0).any():
            raise ValueError("persistence must be nonincreasing")
        if (self.persist > self.p0).any():
            raise ValueError("a persisting origin must still be empty")
        for t, pers in zip(self.probes, self.persist):
            if pers and not self.first_flip > t:
                raise ValueError("first-flip time contradicts persistence")

    def to_csv(self, path) -> None:
        cols = ["t", "p0", "persist"]
        cols += [f"x{i}" for i in range(self.k)]
        cols.append("nzeros")
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for j, t in enumerate(self.probes):
                row = [f"{t:.12g}", str(int(self.p0[j])),
                       str(int(self.persist[j]))]
                row += [str(int(v)) for v in self.zeros_k[j]]
                row.append(str(int(self.nzeros[j])))
                fh.write(",".join(row) + "\n")


def _stream_seed(params: SimParams, rng) -> np.uint64:
    if rng is None:
        rng = np.random.default_rng(params.seed)
    return np.uint64(rng.integers(0, 2 ** 64, dtype=np.uint64))


def sample_initial_config(law: RenewalLaw, L: int,
                          rng: np.random.Generator) -> Configuration:
    """Renewal configuration on [0, L-1]: first zero ~ nu conditioned
    below L, then i.i.d. mu gaps; zeros landing at or past L are
    discarded."""
    if L < 1:
        raise ValueError("volume must contain at least one site")
    head = law.nu[: min(L, len(law.nu))]
    if float(head.sum()) <= 0.0:
        raise ValueError("initial law incompatible with volume")
    nu_cdf = law.nu_cdf()
    mu_cdf = law.mu_cdf()
    while True:
        x0 = int(np.searchsorted(nu_cdf, rng.random(), side="right"))
        if x0 < L:
            break
    zeros = [x0]
    pos = x0
    while True:
        pos += int(np.searchsorted(mu_cdf, rng.random(), side="right"))
        if pos >= L:
            break
        zeros.append(pos)
    return Configuration.from_zeros(L, zeros)


def advance(config: Configuration, params: SimParams, duration: float,
            rng: np.random.Generator | None = None,
            observer=None) -> Configuration:
    """Run the chain for `duration`; observer, if given, is called as
    observer(time, site, new_value) at every state change."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    occ = config.occupation.copy()
    st = np.array([_stream_seed(params, rng)], dtype=np.uint64)
    L = config.L
    arr0 = np.empty(L, np.int64)
    pos0 = np.empty(L, np.int64)
    arr1 = np.empty(L, np.int64)
    pos1 = np.empty(L, np.int64)
    cnt = np.zeros(4, np.int64)
    if observer is None:
        ev_t = np.empty(0, np.float64)
        ev_s = np.empty(0, np.int64)
        ev_v = np.empty(0, np.uint8)
    else:
        ev_t = np.empty(_kernel.EVENT_CHUNK, np.float64)
        ev_s = np.empty(_kernel.EVENT_CHUNK, np.int64)
        ev_v = np.empty(_kernel.EVENT_CHUNK, np.uint8)
    t = 0.0
    init = True
    while True:
        t, status, _, nev = _kernel._run(
            occ, params.q, st, t, duration, 0, 0, ev_t, ev_s, ev_v,
            np.inf, arr0, pos0, arr1, pos1, cnt, init)
        init = False
        if observer is not None:
            for j in range(nev):
                observer(ev_t[j], int(ev_s[j]), int(ev_v[j]))
        if status != 2:
            break
    return Configuration(L=L, occupation=occ)


def hitting_times(config: Configuration, params: SimParams, which,
                  rng: np.random.Generator | None = None
                  ) -> tuple[float, bool]:
    """First time of an event, with a censored flag if params.horizon
    arrives first. `which` is "origin_filled", "all_filled", or
    ("n_extra_zeros", n) for the first time exactly n zeros sit away
    from the origin."""
    mode, target = _parse_which(which)
    if mode == 1 and config.occupation[0] != 0:
        raise ValueError("origin_filled requires an empty origin initially")
    occ = config.occupation.copy()
    st = np.array([_stream_seed(params, rng)], dtype=np.uint64)
    L = config.L
    arr0 = np.empty(L, np.int64)
    pos0 = np.empty(L, np.int64)
    arr1 = np.empty(L, np.int64)
    pos1 = np.empty(L, np.int64)
    cnt = np.zeros(4, np.int64)
    empty_f = np.empty(0, np.float64)
    empty_i = np.empty(0, np.int64)
    empty_b = np.empty(0, np.uint8)
    t, status, _, _ = _kernel._run(
        occ, params.q, st, 0.0, params.horizon, mode, target,
        empty_f, empty_i, empty_b, np.inf, arr0, pos0, arr1, pos1, cnt,
        True)
    return float(t), status == 0


def _parse_which(which) -> tuple[int, int]:
    if which == "origin_filled":
        return 1, 0
    if which == "all_filled":
        return 2, 0
    if (isinstance(which, tuple) and len(which) == 2
            and which[0] == "n_extra_zeros"):
        n = int(which[1])
        if n < 0:
            raise ValueError("zero count target must be >= 0")
        return 3, n
    raise ValueError(f"unknown hitting-time kind: {which!r}")


def run_with_observables(config: Configuration, params: SimParams,
                         probes, k: int,
                         rng: np.random.Generator | None = None
                         ) -> ObservableSeries:
    """Single trajectory sampled at the given ascending probe times."""
    probes = np.asarray(probes, dtype=np.float64)
    if (np.diff(probes) < 0).any():
        raise ValueError("probe times must be ascending")
    if k < 0:
        raise ValueError("k must be >= 0")
    occ = config.occupation.copy()
    st = np.array([_stream_seed(params, rng)], dtype=np.uint64)
    L = config.L
    arr0 = np.empty(L, np.int64)
    pos0 = np.empty(L, np.int64)
    arr1 = np.empty(L, np.int64)
    pos1 = np.empty(L, np.int64)
    cnt = np.zeros(4, np.int64)
    empty_f = np.empty(0, np.float64)
    empty_i = np.empty(0, np.int64)
    empty_b = np.empty(0, np.uint8)
    origin0 = occ[0] == 0
    P = len(probes)
    p0 = np.zeros(P, np.uint8)
    persist = np.zeros(P, np.uint8)
    zeros_k = np.full((P, k), L, np.int64)
    nzeros = np.zeros(P, np.int64)
    hists = []
    t = 0.0
    ff = np.inf
    init = True
    for j, tp in enumerate(probes):
        t, status, ff, _ = _kernel._run(
            occ, params.q, st, t, tp, 0, 0, empty_f, empty_i, empty_b,
            ff, arr0, pos0, arr1, pos1, cnt, init)
        init = False
        zs = np.flatnonzero(occ == 0)
        p0[j] = 1 if occ[0] == 0 else 0
        persist[j] = 1 if (origin0 and ff > tp) else 0
        nzeros[j] = len(zs)
        zeros_k[j, : min(k, len(zs))] = zs[:k]
        if len(zs):
            lengths, counts = np.unique(np.diff(np.append(zs, L)),
                                        return_counts=True)
            hists.append(dict(zip(lengths.tolist(), counts.tolist())))
        else:
            hists.append({})
    return ObservableSeries(probes=probes, p0=p0, persist=persist,
                            zeros_k=zeros_k, nzeros=nzeros,
                            domain_hist=hists, first_flip=float(ff),
                            L=L, k=k)


def choose_cutoff(law: RenewalLaw, N: int, k: int, delta: float) -> int:
    """Volume large enough that, with probability >= 1-delta, the
    renewal law puts at least k+1 zeros whose forward gap has class
    >= N+1 inside [0, L - 2^(N+1)].

    Worst-case bound: among the first m gaps the qualifying count is
    Binomial(m, p) with p the class->=N+1 gap mass, and every position
    is within nu_max + m * mu_max.
    """
    if delta <= 0 or delta >= 1:
        raise ValueError("delta must lie in (0, 1)")
    lo = 2 ** N + 1  # first length of class N+1
    p = float(law.mu[lo:].sum()) if lo <= law.x_max else 0.0
    if p <= 0.0:
        raise ValueError("tail too light for cutoff guarantee")
    nu_max = int(np.flatnonzero(law.nu)[-1])
    mu_max = int(np.flatnonzero(law.mu)[-1])
    m = k + 1
    while binom.cdf(k, m, p) > delta:
        m += max(1, m // 8)
    # walk back to the smallest m that still meets delta
    while m > k + 1 and binom.cdf(k, m - 1, p) <= delta:
        m -= 1
    return nu_max + m * mu_max + 2 ** (N + 1)


def ensemble_states(law: RenewalLaw, L: int, params: SimParams,
                    t: float, n_samples: int, k: int,
                    seed_offset: int = 0):
    """Final states of n_samples independent trajectories at time t,
    renewal initial law. Returns (encoded_state, first_k_zeros,
    nzeros); the bit encoding is filled only for L <= 62."""
    head = law.nu[: min(L, len(law.nu))]
    if float(head.sum()) <= 0.0:
        raise ValueError("initial law incompatible with volume")
    seeds = batch_seeds(params.seed, n_samples, seed_offset)
    return _kernel.ensemble_at_time(seeds, law.nu_cdf(), law.mu_cdf(),
                                    L, params.q, t, k)


def ensemble_hitting_times(config: Configuration, params: SimParams,
                           n_samples: int, which,
                           seed_offset: int = 0):
    """Independent hitting-time samples from a fixed start; returns
    (times, censored)."""
    mode, target = _parse_which(which)
    if mode == 1 and config.occupation[0] != 0:
        raise ValueError("origin_filled requires an empty origin initially")
    seeds = batch_seeds(params.seed, n_samples, seed_offset)
    return _kernel.ensemble_hitting(seeds, config.occupation, params.q,
                                    mode, target, params.horizon)


def ensemble_probe_series(initial, L: int, params: SimParams, probes,
                          k: int, n_samples: int, seed_offset: int = 0):
    """Observable arrays over an ensemble; `initial` is a RenewalLaw
    (fresh sample per trajectory) or a Configuration (fixed start).
    Returns (p0, persist, nzeros, xk) with trajectory-major shape."""
    probes = np.asarray(probes, dtype=np.float64)
    if (np.diff(probes) < 0).any():
        raise ValueError("probe times must be ascending")
    seeds = batch_seeds(params.seed, n_samples, seed_offset)
    dummy_occ = np.empty(0, np.uint8)
    if isinstance(initial, RenewalLaw):
        head = initial.nu[: min(L, len(initial.nu))]
        if float(head.sum()) <= 0.0:
            raise ValueError("initial law incompatible with volume")
        return _kernel.ensemble_probes(
            seeds, True, initial.nu_cdf(), initial.mu_cdf(), dummy_occ,
            L, params.q, probes, k)
    if isinstance(initial, Configuration):
        if initial.L != L:
            raise ValueError("configuration volume disagrees with L")
        dummy_cdf = np.ones(1, np.float64)
        return _kernel.ensemble_probes(
            seeds, False, dummy_cdf, dummy_cdf, initial.occupation,
            L, params.q, probes, k)
    raise TypeError("initial must be a RenewalLaw or a Configuration")
