"""Hierarchical coalescence: epoch schedule, kill-rate tables, and the
epoch-by-epoch domain race.

Epoch n removes every domain whose length lies in C_n. Each such domain
carries an exponential clock with rate lambda_n(d); firings are applied
in time order, the killed zero merges its domain into the nearest live
zero on the left (into the leading gap when there is none), and that
merge pushes the absorber out of C_n, cancelling its pending clock.
Since a merge of two class->=n lengths never lands back in C_n, one
sorted pass settles the whole epoch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .domain_classes import class_of, class_range
from .east import Configuration, SimParams, ensemble_hitting_times
from .oracle import hitting_cdf_exact, lambda_exact
from .rng import child_seed


@dataclass
class EpochSchedule:
    """Wall-time landmarks t_n = q^-n with buffers t_n^(1 -+ eps), and
    per-epoch internal horizons T_n used to calibrate kill rates.

    Arrays are indexed 0..N+1. The buffers must interleave,
    t_n^+ < t_{n+1}^-, otherwise construction fails naming the pair.
    """

    q: float
    N: int
    epsilon: float = None  # type: ignore[assignment]
    t: np.ndarray = field(init=False, repr=False)
    t_minus: np.ndarray = field(init=False, repr=False)
    t_plus: np.ndarray = field(init=False, repr=False)
    T: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.q <= 0.5:
            raise ValueError(f"q must lie in (0, 1/2], got {self.q}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.epsilon is None:
            self.epsilon = 1.0 / (8.0 * self.N)
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 1/2)")
        q, eps = self.q, self.epsilon
        ns = np.arange(self.N + 2, dtype=np.float64)
        self.t = q ** -ns
        self.t_minus = q ** (-ns * (1.0 - eps))
        self.t_minus[0] = 0.0
        self.t_plus = q ** (-ns * (1.0 + eps))
        self.t_plus[0] = q ** -eps
        self.T = q ** (-(ns - 1.0) * (1.0 + 3.0 * eps))
        self.T[0] = q ** ((1.0 - eps) / 2.0)
        self.T[1] = q ** (-3.0 * eps)
        for n in range(self.N + 1):
            if not self.t_plus[n] < self.t_minus[n + 1]:
                raise ValueError(
                    f"schedule interleaving violated: t_{n}^+ = "
                    f"{self.t_plus[n]:.6g} >= t_{n + 1}^- = "
                    f"{self.t_minus[n + 1]:.6g}")

    def stage_of(self, t: float) -> tuple[int, float]:
        """Epoch index n with t in [t_n^-, t_{n+1}^-) and the elapsed
        wall time inside it; the very last instant t_{N+1}^- counts as
        the end of epoch N."""
        if not 0.0 <= t <= self.t_minus[self.N + 1]:
            raise ValueError(
                f"wall time {t:.6g} outside [0, {self.t_minus[self.N + 1]:.6g}]")
        n = int(np.searchsorted(self.t_minus[1:], t, side="right"))
        n = min(n, self.N)
        return n, t - self.t_minus[n]

    def to_dict(self) -> dict:
        return {"q": self.q, "N": self.N, "epsilon": self.epsilon}


@dataclass
class RateRow:
    n: int
    d: int
    lam: float
    provenance: str
    stderr: float = 0.0


class RateTable:
    """Kill rates lambda_n(d) for d in C_n, n = 0..N."""

    def __init__(self, rows):
        self.rows = list(rows)
        self._map = {(r.n, r.d): r for r in self.rows}

    def rate(self, n: int, d: int) -> float:
        if class_of(d) != n:
            return 0.0
        row = self._map.get((n, d))
        if row is None:
            raise ValueError(f"no rate entry for class {n} length {d}")
        return row.lam

    def to_json(self) -> str:
        return json.dumps([{"n": r.n, "d": r.d, "lambda": r.lam,
                            "provenance": r.provenance,
                            "stderr": r.stderr} for r in self.rows])

    @classmethod
    def from_json(cls, text: str) -> "RateTable":
        return cls(RateRow(n=o["n"], d=o["d"], lam=o["lambda"],
                           provenance=o["provenance"],
                           stderr=o.get("stderr", 0.0))
                   for o in json.loads(text))


def build_rate_table(schedule: EpochSchedule, provenance: str = "exact",
                     samples: int = 0, seed: int = 0) -> RateTable:
    """Rates for every class up to N.

    exact: uniformized survival probabilities. monte-carlo: the epoch
    horizon's survival frequency from `samples` trajectories, with a
    delta-method standard error. asymptotic: 1/gamma_d, the reciprocal
    of the time where the exact hitting law reaches 1 - 1/e.
    """
    rows = []
    for n in range(schedule.N + 1):
        lo, hi = class_range(n)
        for d in range(lo, hi + 1):
            if provenance == "exact":
                lam = lambda_exact(n, d, schedule.q, schedule)
                rows.append(RateRow(n=n, d=d, lam=lam, provenance="exact"))
            elif provenance == "asymptotic":
                _, gamma = hitting_cdf_exact(d, schedule.q,
                                             np.array([1.0]))
                rows.append(RateRow(n=n, d=d, lam=1.0 / gamma,
                                    provenance="asymptotic"))
            elif provenance == "monte-carlo":
                if samples < 2:
                    raise ValueError("monte-carlo rates need samples >= 2")
                T_n = float(schedule.T[n])
                params = SimParams(q=schedule.q,
                                   seed=child_seed(seed, n * 64 + d),
                                   horizon=T_n)
                _, censored = ensemble_hitting_times(
                    Configuration.single_zero(d), params, samples,
                    "origin_filled")
                p_hat = float(censored.mean())
                if p_hat <= 0.0 or p_hat >= 1.0:
                    raise ValueError("increase samples or reduce T_n")
                lam = -math.log(p_hat) / T_n
                se = math.sqrt((1.0 - p_hat) / (samples * p_hat)) / T_n
                rows.append(RateRow(n=n, d=d, lam=lam,
                                    provenance="monte-carlo", stderr=se))
            else:
                raise ValueError(f"unknown rate provenance: {provenance!r}")
    return RateTable(rows)


@dataclass
class EpochTrace:
    n: int
    start_zeros: np.ndarray
    end_zeros: np.ndarray
    kills: list  # (internal_time, killed_position), time-ordered
    absorbed: np.ndarray  # per start zero, kills merged directly into it


@dataclass
class HcpTrace:
    L: int
    initial_zeros: np.ndarray
    epochs: list
    final_zeros: np.ndarray

    def events_csv(self) -> str:
        lines = ["epoch,internal_time,killed_position"]
        for ep in self.epochs:
            for t, pos in ep.kills:
                lines.append(f"{ep.n},{t:.12g},{pos}")
        return "\n".join(lines) + "\n"


def run_epoch(zeros, L: int, n: int, table: RateTable,
              rng: np.random.Generator) -> EpochTrace:
    """One coalescence epoch on the zero set of a volume [0, L-1]."""
    zeros = np.asarray(zeros, dtype=np.int64)
    m = len(zeros)
    start = zeros.copy()
    if m == 0:
        return EpochTrace(n=n, start_zeros=start, end_zeros=start.copy(),
                          kills=[], absorbed=np.zeros(0, np.int64))
    lengths = np.diff(np.append(zeros, L))
    clocks = np.full(m, np.inf)
    draws = rng.exponential(size=m)
    for i in range(m):
        c = class_of(int(lengths[i]))
        if c < n:
            raise ValueError(
                f"epoch precondition violated: length {int(lengths[i])} "
                f"of class {c} present at epoch {n}")
        if c == n:
            clocks[i] = draws[i] / table.rate(n, int(lengths[i]))
    order = np.argsort(clocks, kind="stable")
    alive = np.ones(m, dtype=bool)
    cancelled = np.zeros(m, dtype=bool)
    absorbed = np.zeros(m, dtype=np.int64)
    prev = np.arange(-1, m - 1)
    nxt = np.arange(1, m + 1)
    kills = []
    for i in order:
        if not np.isfinite(clocks[i]):
            break
        if cancelled[i] or not alive[i]:
            continue
        alive[i] = False
        kills.append((float(clocks[i]), int(zeros[i])))
        j, k = prev[i], nxt[i]
        if j >= 0:
            lengths[j] += lengths[i]
            cancelled[j] = True
            absorbed[j] += 1
            nxt[j] = k
        if k < m:
            prev[k] = j
    return EpochTrace(n=n, start_zeros=start, end_zeros=zeros[alive],
                      kills=kills, absorbed=absorbed)


def run_hcp(config: Configuration, table: RateTable,
            schedule: EpochSchedule,
            rng: np.random.Generator) -> HcpTrace:
    """All epochs 0..N in sequence; the trace keeps every epoch's kill
    list so intermediate states can be replayed."""
    zeros = config.zeros.copy()
    epochs = []
    for n in range(schedule.N + 1):
        ep = run_epoch(zeros, config.L, n, table, rng)
        epochs.append(ep)
        zeros = ep.end_zeros
    return HcpTrace(L=config.L, initial_zeros=config.zeros.copy(),
                    epochs=epochs, final_zeros=zeros)


def state_at_wall_time(trace: HcpTrace, schedule: EpochSchedule,
                       t: float) -> np.ndarray:
    """Zero set at wall time t: epochs before the current one applied
    in full, the current one truncated at internal time t - t_n^-."""
    n, tau = schedule.stage_of(t)
    ep = trace.epochs[n]
    killed = np.array([pos for tm, pos in ep.kills if tm <= tau],
                      dtype=np.int64)
    if killed.size == 0:
        return ep.start_zeros.copy()
    return ep.start_zeros[~np.isin(ep.start_zeros, killed)]
