"""Independent high-precision oracle for the epoch recursion.

Recomputes mu', nu' with mpmath and explicit O(n^2) loops (no numpy,
no shared code with the package). Run once; paste printed values into
tests/test_renewal.py as frozen constants.
"""
import mpmath as mp

mp.mp.dps = 60

XMAX = 400


def conv(a, b):
    out = [mp.mpf(0)] * (XMAX + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if i + j > XMAX:
                break
            out[i + j] += ai * bj
    return out


def class_range(n):
    if n == 0:
        return (1, 1)
    return (2 ** (n - 1) + 1, 2 ** n)


def epoch_update(mu, nu, n):
    lo, hi = class_range(n)
    h = [mp.mpf(0)] * (XMAX + 1)
    for x in range(lo, min(hi, XMAX) + 1):
        h[x] = mu[x]
    # E = sum_k h^{*k} / k!
    E = [mp.mpf(0)] * (XMAX + 1)
    E[0] = mp.mpf(1)
    term = [mp.mpf(0)] * (XMAX + 1)
    term[0] = mp.mpf(1)
    k = 0
    while any(t != 0 for t in term):
        k += 1
        term = [t / k for t in conv(term, h)]
        if sum(term) < mp.mpf(10) ** -55:
            break
        for x in range(XMAX + 1):
            E[x] += term[x]
    mu2 = conv(mu, E)
    for x in range(XMAX + 1):
        mu2[x] -= E[x]
    mu2[0] = mp.mpf(0)
    h0 = sum(h)
    nu2 = conv(nu, E)
    nu2 = [v * mp.exp(-h0) for v in nu2]
    return mu2, nu2


def show(tag, vec, idxs):
    for i in idxs:
        print(f"{tag}[{i}] = {mp.nstr(vec[i], 22)}")


# --- deterministic(1) initial law, Ren(mu|0) ---
mu = [mp.mpf(0)] * (XMAX + 1)
mu[1] = mp.mpf(1)
nu = [mp.mpf(0)] * (XMAX + 1)
nu[0] = mp.mpf(1)
mu1, nu1 = epoch_update(mu, nu, 0)
print("# delta_1 after epoch 0 (exact: 1/(x-1)! - 1/x!; nu1(j)=e^-1/j!)")
show("mu1", mu1, [1, 2, 3, 4, 5])
show("nu1", nu1, [0, 1, 2])
print("sum mu1 =", mp.nstr(sum(mu1), 22))

mu2, nu2 = epoch_update(mu1, nu1, 1)
print("# delta_1 after epoch 1")
show("mu2", mu2, [2, 3, 4, 5, 6])
show("nu2", nu2, [0, 1])
print("sum mu2 =", mp.nstr(sum(mu2), 22))

# --- geometric(1/2) ---
mu = [mp.mpf(0)] * (XMAX + 1)
for x in range(1, XMAX + 1):
    mu[x] = mp.mpf(2) ** -x
nu = [mp.mpf(0)] * (XMAX + 1)
nu[0] = mp.mpf(1)
print("# geometric(1/2), Ren(mu|0)")
mu1, nu1 = epoch_update(mu, nu, 0)
show("gmu1", mu1, [1, 2, 3, 4, 7])
show("gnu1", nu1, [0, 1, 2])
print("sum gmu1 =", mp.nstr(sum(mu1), 22))
mu2, nu2 = epoch_update(mu1, nu1, 1)
show("gmu2", mu2, [2, 3, 4, 5, 8])
show("gnu2", nu2, [0, 1])
mu3, nu3 = epoch_update(mu2, nu2, 2)
show("gmu3", mu3, [5, 6, 7])
show("gnu3", nu3, [0])
print("sum gmu3 =", mp.nstr(sum(mu3), 22))

# laplace checks of Eq-style identity at s=0.7 after epoch 2
s = mp.mpf(7) / 10


def lap(v):
    return sum(v[x] * mp.exp(-s * x) for x in range(XMAX + 1))


lo, hi = class_range(2)
h = [mp.mpf(0)] * (XMAX + 1)
for x in range(lo, hi + 1):
    h[x] = mu2[x]
lhs = 1 - lap(mu3)
rhs = (1 - lap(mu2)) * mp.exp(lap(h))
print("laplace identity residual epoch2:", mp.nstr(abs(lhs - rhs), 5))
print("gmu3 laplace s=0.7:", mp.nstr(lap(mu3), 22))
