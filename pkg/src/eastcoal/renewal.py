"""Epoch recursion for the renewal laws (mu^(n), nu^(n)).

Works entirely in the sequence domain: the Laplace-transform identities

    1 - G^(n+1)(s) = (1 - G^(n)(s)) * exp(H^(n)(s))
    L^(n+1)(s)     = L^(n)(s) * exp(H^(n)(s) - H^(n)(0))

become exact integer-support convolutions once exp(H) is expanded as
the convolution exponential E = sum_k h^{*k} / k!. Everything below is
plain dense convolution; truncation at x_max only ever loses tail mass
(outputs at x depend on inputs at <= x alone), which is tracked as a
signed mass defect.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain_classes import class_range

CLIP_FLOOR = -1e-12
FAIL_FLOOR = -1e-9
DEFECT_TOL = 1e-6
X_MAX_LIMIT = 2 ** 21


@dataclass
class Measure:
    """Nonnegative vector on {0, ..., x_max} with tracked mass defect."""

    weights: np.ndarray
    mass_defect: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1 or len(self.weights) == 0:
            raise ValueError("weights must be a nonempty 1-d vector")
        lo = self.weights.min()
        if lo < FAIL_FLOOR:
            raise ValueError("recursion numerically inconsistent")
        if lo < 0.0:
            self.weights = np.where(self.weights < 0.0, 0.0, self.weights)
        if self.mass_defect is None:
            self.mass_defect = 1.0 - float(self.weights.sum())

    @property
    def x_max(self) -> int:
        return len(self.weights) - 1

    def total(self) -> float:
        return float(self.weights.sum())

    def support_min(self) -> int:
        nz = np.flatnonzero(self.weights)
        return int(nz[0]) if len(nz) else -1

    def padded(self, x_max: int) -> "Measure":
        if x_max < self.x_max:
            raise ValueError("cannot shrink a measure; rebuild it instead")
        w = np.zeros(x_max + 1)
        w[: len(self.weights)] = self.weights
        return Measure(w, mass_defect=self.mass_defect)

    def to_sparse(self, tol: float = 0.0) -> dict[str, float]:
        """JSON-friendly {"x": weight} map of entries > tol."""
        nz = np.flatnonzero(self.weights > tol)
        return {str(int(x)): float(self.weights[x]) for x in nz}


def make_initial(kind: str, param: float, x_max: int) -> Measure:
    """Gap laws used throughout: geometric(p), heavy_tail(alpha),
    deterministic(d).

    geometric:  mu(x) = (1-p)^(x-1) p        (finite mean, c0 = 1)
    heavy_tail: mu(x) = x^-a - (x+1)^-a      (tail mu([x,inf)) = x^-a, c0 = a)
    deterministic: point mass at d
    """
    w = np.zeros(x_max + 1)
    x = np.arange(1, x_max + 1, dtype=np.float64)
    if kind == "geometric":
        p = float(param)
        if not 0.0 < p < 1.0:
            raise ValueError(f"geometric parameter must be in (0,1), got {p}")
        w[1:] = np.exp((x - 1) * np.log1p(-p)) * p
    elif kind == "heavy_tail":
        a = float(param)
        if not 0.0 < a < 1.0:
            raise ValueError(f"heavy_tail exponent must be in (0,1), got {a}")
        w[1:] = x ** -a - (x + 1.0) ** -a
    elif kind == "deterministic":
        d = int(param)
        if d < 1 or d > x_max:
            raise ValueError(f"deterministic gap must be in [1, x_max], got {d}")
        w[d] = 1.0
    else:
        raise ValueError(f"unknown initial law kind: {kind!r}")
    return Measure(w)


def delta(x: int, x_max: int) -> Measure:
    w = np.zeros(x_max + 1)
    w[x] = 1.0
    return Measure(w)


def restrict_class(mu: Measure, n: int) -> Measure:
    """Zero everything outside C_n."""
    lo, hi = class_range(n)
    w = np.zeros_like(mu.weights)
    hi = min(hi, mu.x_max)
    if lo <= hi:
        w[lo : hi + 1] = mu.weights[lo : hi + 1]
    return Measure(w, mass_defect=1.0 - float(w.sum()))


def _conv(a: np.ndarray, b: np.ndarray, x_max: int) -> np.ndarray:
    out = np.convolve(a, b)[: x_max + 1]
    if len(out) < x_max + 1:
        out = np.pad(out, (0, x_max + 1 - len(out)))
    return out


def conv_exp(h: Measure, x_max: int | None = None) -> Measure:
    """E = sum_{k>=0} h^{*k} / k!, truncated to [0, x_max].

    Entries below x_max are exact: terms stop contributing either when
    k * min(supp h) exceeds x_max or when the 1/k! mass drops below
    double precision.
    """
    if h.weights[0] != 0.0:
        raise ValueError("conv_exp requires h(0) = 0")
    if x_max is None:
        x_max = h.x_max
    hw = h.weights
    hi = np.flatnonzero(hw)
    E = np.zeros(x_max + 1)
    E[0] = 1.0
    if len(hi) == 0:
        return Measure(E, mass_defect=1.0 - float(E.sum()))
    hw = hw[: hi[-1] + 1]
    term = np.zeros(x_max + 1)
    term[0] = 1.0
    k = 0
    while True:
        k += 1
        term = _conv(term, hw, x_max) / k
        s = term.sum()
        if s <= 0.0:
            break
        E += term
        if s < 1e-18:
            break
    return Measure(E, mass_defect=1.0 - float(E.sum()))


def epoch_update(mu: Measure, nu: Measure, n: int,
                 x_max: int | None = None) -> tuple[Measure, Measure]:
    """One epoch of the recursion.

    mu'(x) = (mu * E)(x) - E(x) for x >= 1, mu'(0) = 0, and
    nu' = exp(-H(0)) (nu * E), where H = mu restricted to C_n and
    E = conv_exp(H).
    """
    if x_max is None:
        x_max = mu.x_max
    lo, _ = class_range(n)
    sup = mu.support_min()
    if 0 <= sup < lo:
        raise ValueError(
            f"epoch {n} requires support >= {lo}, found mass at {sup}")
    h = restrict_class(mu, n)
    E = conv_exp(h, x_max)
    mu2 = _conv(mu.weights, E.weights, x_max) - E.weights
    mu2[0] = 0.0
    h0 = float(h.weights.sum())
    nu2 = np.exp(-h0) * _conv(nu.weights, E.weights, x_max)
    return Measure(mu2), Measure(nu2)


@dataclass
class RecursionResult:
    mus: list[Measure]       # mu^(0) .. mu^(n_max)
    nus: list[Measure]       # nu^(0) .. nu^(n_max)
    x_max: int
    defects: list[float]     # per epoch output, mu side
    support_mins: list[int]
    nu_at_zero: list[float]  # nu^(n)(0) for n = 0..n_max

    def mu(self, n: int) -> Measure:
        return self.mus[n]

    def nu(self, n: int) -> Measure:
        return self.nus[n]


def iterate_epochs(mu0: Measure, nu0: Measure, n_max: int,
                   x_max: int | None = None, adapt: bool = True,
                   defect_tol: float = DEFECT_TOL,
                   x_max_limit: int = X_MAX_LIMIT) -> RecursionResult:
    """Run epochs 0..n_max-1; optionally double x_max until the mass
    defect added by truncation stays below defect_tol at every epoch.

    Adaptation restarts from epoch 0 with the initial vectors zero-padded,
    which is exact whenever the initial law itself was representable below
    the original x_max (light tails). Heavy-tailed initial laws carry an
    intrinsic defect; run them with adapt=False and read the diagnostics.
    """
    if x_max is None:
        x_max = max(mu0.x_max, 2 ** max(n_max, 2))
    base_defect = abs(mu0.mass_defect)
    while True:
        if x_max > x_max_limit:
            raise MemoryError(
                f"x_max {x_max} exceeds limit {x_max_limit} under adaptation")
        mu = mu0.padded(x_max)
        nu = nu0.padded(x_max)
        mus, nus = [mu], [nu]
        defects = [mu.mass_defect]
        sup_mins = [mu.support_min()]
        nu0s = [float(nu.weights[0])]
        blew = False
        for n in range(n_max):
            mu, nu = epoch_update(mu, nu, n, x_max)
            if adapt and abs(mu.mass_defect) > base_defect + defect_tol:
                blew = True
                break
            mus.append(mu)
            nus.append(nu)
            defects.append(mu.mass_defect)
            sup_mins.append(mu.support_min())
            nu0s.append(float(nu.weights[0]))
        if not blew:
            return RecursionResult(mus, nus, x_max, defects, sup_mins, nu0s)
        x_max *= 2


def laplace_of(m: Measure, s) -> float | np.ndarray:
    """sum_x exp(-s x) m(x); s scalar or array, s >= 0."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
    if (s_arr < 0).any():
        raise ValueError("laplace_of requires s >= 0")
    x = np.arange(len(m.weights))
    with np.errstate(under="ignore"):
        vals = np.exp(-np.outer(s_arr, x)) @ m.weights
    return float(vals[0]) if np.isscalar(s) or np.ndim(s) == 0 else vals
