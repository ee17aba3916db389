"""Universal scaling-limit laws.

The rescaled domain length converges to the law with Laplace transform
1 - exp(-c0 * E1(s)), E1(s) = int_1^inf exp(-s x)/x dx, and the rescaled
front position to exp(-c0 * int_0^1 (1 - exp(-s y))/y dy). The density
of the former is the alternating series over k-fold convolutions of 1/x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209

LAST_TERM_WARN = 1e-8


def _e1_series(s: float) -> float:
    # E1(s) = -gamma - ln s + sum_{k>=1} (-1)^(k+1) s^k / (k k!)
    acc = -EULER_GAMMA - math.log(s)
    term = 1.0
    for k in range(1, 60):
        term *= -s / k
        change = -term / k
        acc += change
        if abs(change) < 1e-17 * max(abs(acc), 1e-3):
            break
    return acc


def _e1_contfrac(s: float) -> float:
    # modified Lentz on E1(s) = exp(-s) / (s + 1 - 1/(s + 3 - 4/(...)))
    tiny = 1e-300
    b = s + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for k in range(1, 200):
        a = -k * k
        b += 2.0
        d = b + a * d
        if abs(d) < tiny:
            d = tiny
        c = b + a / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-14:
            break
    return math.exp(-s) * f


def e1(s):
    """Exponential integral int_1^inf exp(-s x)/x dx, relative error 1e-10.

    Series below s=1, continued fraction above.
    """
    if np.ndim(s) > 0:
        return np.array([e1(float(v)) for v in np.asarray(s).ravel()])
    s = float(s)
    if s <= 0.0:
        raise ValueError("e1 requires s > 0 (integral diverges at 0)")
    return _e1_series(s) if s < 1.0 else _e1_contfrac(s)


def _y_integral(s: float) -> float:
    # int_0^1 (1 - exp(-s y))/y dy = sum_{k>=1} (-1)^(k+1) s^k / (k k!)
    acc = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -s / k
        acc -= term / k
        if abs(term) < 1e-16 * max(1.0, abs(acc)):
            break
    return acc


def lt_x_inf(s, c0: float = 1.0):
    """Laplace transform of the limiting rescaled domain length."""
    return 1.0 - np.exp(-c0 * np.asarray(e1(s)))


def lt_y_inf(s, c0: float = 1.0):
    """Laplace transform of the limiting rescaled position of the first
    zero (well-defined integral form; supported on [0, 1])."""
    if np.ndim(s) > 0:
        return np.array([lt_y_inf(float(v), c0) for v in np.asarray(s).ravel()])
    s = float(s)
    if s < 0.0:
        raise ValueError("lt_y_inf requires s >= 0")
    return math.exp(-c0 * _y_integral(s))


@dataclass
class LimitLawParams:
    c0: float = 1.0
    k_max: int = 12
    dx: float = 1e-3
    x_hi: float = 50.0

    def __post_init__(self):
        if not 0.0 < self.c0 <= 1.0:
            raise ValueError("c0 must be in (0, 1]")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.dx > 1e-2:
            raise ValueError("grid step must be <= 1e-2")
        if self.x_hi < self.k_max:
            raise ValueError("x_hi must be >= k_max")


@dataclass
class DensityResult:
    xs: np.ndarray
    p: np.ndarray
    rho_k: list[np.ndarray]    # rho_1 .. rho_k_max on the same grid
    last_term_max: float
    truncation_warning: bool


def _trapezoid_conv(f: np.ndarray, lo_f: int, g: np.ndarray, lo_g: int,
                    dx: float, m: int) -> np.ndarray:
    """Grid convolution int f(u) g(x-u) du with trapezoid end weights.

    f, g are sampled on the master grid x_i = i*dx with support starting
    at index lo_f / lo_g. Halving the boundary samples before a plain
    convolution reproduces the trapezoid rule on every integration range.
    """
    fh = f.copy()
    gh = g.copy()
    fh[lo_f] *= 0.5
    gh[lo_g] *= 0.5
    out = np.convolve(fh, gh)[: m + 1] * dx
    return out


def density_p(params: LimitLawParams) -> DensityResult:
    """Density of the limiting rescaled domain length on [1, x_hi]:
    p(x) = sum_k (-1)^(k+1) c0^k / k! rho_k(x) 1_{x>=k}, rho_1 = 1/x,
    rho_{k+1} = rho_k conv rho_1 on [1, inf)."""
    dx = params.dx
    m = int(round(params.x_hi / dx))
    xs = np.arange(m + 1) * dx
    i1 = int(round(1.0 / dx))
    rho = np.zeros(m + 1)
    rho[i1:] = 1.0 / xs[i1:]
    rho1 = rho.copy()
    rhos = [rho1]
    for k in range(2, params.k_max + 1):
        prev = rhos[-1]
        lo_prev = int(round((k - 1) / dx)) if k > 2 else i1
        nxt = _trapezoid_conv(prev, lo_prev, rho1, i1, dx, m)
        lo = int(round(k / dx))
        nxt[:lo] = 0.0
        rhos.append(nxt)
    p = np.zeros(m + 1)
    last = np.zeros(m + 1)
    for k, r in enumerate(rhos, start=1):
        last = (params.c0 ** k / math.factorial(k)) * r
        p += ((-1.0) ** (k + 1)) * last
    last_max = float(np.max(np.abs(last)))
    return DensityResult(
        xs=xs, p=p, rho_k=rhos, last_term_max=last_max,
        truncation_warning=bool(last_max > LAST_TERM_WARN))
