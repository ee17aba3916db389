"""Event-driven simulation kernel, numba-compiled.

State is kept in flat arrays so trajectories share nothing: occupation
bytes, two index sets over the active sites (empty ones flip at rate
1-q, occupied ones at rate q), and a 64-bit counter RNG, so every
trajectory is a pure function of its seed no matter how the ensemble is
scheduled. The active set is exactly {x : sigma(x+1)=0} plus the
boundary site L-1, maintained incrementally: a flip at x only ever
changes the activity of x-1.
"""
import math

import numpy as np
from numba import njit

_PHI = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53

EVENT_CHUNK = 4096


@njit(cache=True, inline="always")
def _next64(st):
    st[0] += _PHI
    z = st[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _u01(st):
    """Uniform on [0, 1)."""
    return float(_next64(st) >> _S11) * _INV53


@njit(cache=True, inline="always")
def _exp1(st):
    """Standard exponential; the log argument stays in (0, 1]."""
    return -math.log((float(_next64(st) >> _S11) + 1.0) * _INV53)


@njit(cache=True)
def _sample_init(occ, nu_cdf, mu_cdf, st):
    """Fill occ with a renewal configuration: first zero from nu
    conditioned below L (rejection), then i.i.d. gaps from mu until the
    volume is exhausted. Returns the zero count."""
    L = occ.shape[0]
    for x in range(L):
        occ[x] = 1
    tries = 0
    while True:
        x0 = np.searchsorted(nu_cdf, _u01(st), side="right")
        if x0 < L:
            break
        tries += 1
        if tries > 10000000:
            raise RuntimeError("rejection sampling of the first zero stalled")
    pos = x0
    nz = 0
    while pos < L:
        occ[pos] = 0
        nz += 1
        pos += np.searchsorted(mu_cdf, _u01(st), side="right")
    return nz


@njit(cache=True)
def _run(occ, q, st, t0, t_end, mode, target,
         ev_t, ev_site, ev_val, first_fill,
         arr0, pos0, arr1, pos1, cnt, init_sets):
    """Advance one trajectory until t_end or a stop condition.

    mode 0: plain advance; 1: stop when site 0 fills; 2: stop when no
    zeros remain; 3: stop when the zero count away from the origin
    equals target. cnt holds (n0, n1, nzeros, nzeros_off_origin) and
    persists across calls together with the set arrays when init_sets
    is False. Events are logged while ev_t has room (pass length-0
    arrays to disable). Returns (t, status, first_fill, n_events) with
    status 0 = reached t_end, 1 = stop condition met, 2 = buffer full.
    """
    L = occ.shape[0]
    if init_sets:
        cnt[0] = 0
        cnt[1] = 0
        cnt[2] = 0
        cnt[3] = 0
        for x in range(L):
            pos0[x] = -1
            pos1[x] = -1
        for x in range(L):
            if occ[x] == 0:
                cnt[2] += 1
                if x > 0:
                    cnt[3] += 1
            if x == L - 1 or occ[x + 1] == 0:
                if occ[x] == 0:
                    arr0[cnt[0]] = x
                    pos0[x] = cnt[0]
                    cnt[0] += 1
                else:
                    arr1[cnt[1]] = x
                    pos1[x] = cnt[1]
                    cnt[1] += 1
    n0 = cnt[0]
    n1 = cnt[1]
    nz = cnt[2]
    nz_off = cnt[3]
    t = t0
    ff = first_fill
    nev = 0
    cap = ev_t.shape[0]
    done = -1
    if mode == 1 and occ[0] == 1:
        done = 1
    elif mode == 2 and nz == 0:
        done = 1
    elif mode == 3 and nz_off == target:
        done = 1
    one_q = 1.0 - q
    while done < 0:
        r0 = n0 * one_q
        rate = r0 + n1 * q
        t += _exp1(st) / rate
        if t >= t_end:
            t = t_end
            done = 0
            break
        u = _u01(st) * rate
        if u < r0:
            i = int(u / one_q)
            if i >= n0:
                i = n0 - 1
            x = arr0[i]
            newval = np.uint8(1)
        else:
            i = int((u - r0) / q)
            if i >= n1:
                i = n1 - 1
            x = arr1[i]
            newval = np.uint8(0)
        if newval == 1:
            # x moves set0 -> set1; site x-1 (if any) loses its license
            i = pos0[x]
            n0 -= 1
            moved = arr0[n0]
            arr0[i] = moved
            pos0[moved] = i
            pos0[x] = -1
            arr1[n1] = x
            pos1[x] = n1
            n1 += 1
            occ[x] = 1
            nz -= 1
            if x > 0:
                nz_off -= 1
                y = x - 1
                if occ[y] == 0:
                    j = pos0[y]
                    n0 -= 1
                    moved = arr0[n0]
                    arr0[j] = moved
                    pos0[moved] = j
                    pos0[y] = -1
                else:
                    j = pos1[y]
                    n1 -= 1
                    moved = arr1[n1]
                    arr1[j] = moved
                    pos1[moved] = j
                    pos1[y] = -1
            elif ff == np.inf:
                ff = t
        else:
            i = pos1[x]
            n1 -= 1
            moved = arr1[n1]
            arr1[i] = moved
            pos1[moved] = i
            pos1[x] = -1
            arr0[n0] = x
            pos0[x] = n0
            n0 += 1
            occ[x] = 0
            nz += 1
            if x > 0:
                nz_off += 1
                y = x - 1
                if occ[y] == 0:
                    arr0[n0] = y
                    pos0[y] = n0
                    n0 += 1
                else:
                    arr1[n1] = y
                    pos1[y] = n1
                    n1 += 1
        if cap > 0:
            ev_t[nev] = t
            ev_site[nev] = x
            ev_val[nev] = newval
            nev += 1
        if mode == 1 and x == 0 and newval == 1:
            done = 1
        elif mode == 2 and nz == 0:
            done = 1
        elif mode == 3 and nz_off == target:
            done = 1
        elif cap > 0 and nev == cap:
            done = 2
    cnt[0] = n0
    cnt[1] = n1
    cnt[2] = nz
    cnt[3] = nz_off
    return t, done, ff, nev


@njit(cache=True)
def ensemble_at_time(seeds, nu_cdf, mu_cdf, L, q, t_end, k):
    """Final state per trajectory at time t_end from renewal initials.

    Returns (enc, xk, nzeros): bit-encoded configuration (only when
    L <= 62, else zeros), positions of the first k zeros (sentinel L
    when exhausted), and the zero count.
    """
    n = seeds.shape[0]
    enc = np.zeros(n, np.int64)
    xk = np.full((n, k), L, np.int64)
    nz_arr = np.zeros(n, np.int64)
    st = np.empty(1, np.uint64)
    occ = np.empty(L, np.uint8)
    arr0 = np.empty(L, np.int64)
    pos0 = np.empty(L, np.int64)
    arr1 = np.empty(L, np.int64)
    pos1 = np.empty(L, np.int64)
    cnt = np.zeros(4, np.int64)
    evt = np.empty(0, np.float64)
    evs = np.empty(0, np.int64)
    evv = np.empty(0, np.uint8)
    encode = L <= 62
    for i in range(n):
        st[0] = seeds[i]
        _sample_init(occ, nu_cdf, mu_cdf, st)
        _run(occ, q, st, 0.0, t_end, 0, 0, evt, evs, evv, np.inf,
             arr0, pos0, arr1, pos1, cnt, True)
        found = 0
        for x in range(L):
            if occ[x] == 0:
                if found < k:
                    xk[i, found] = x
                found += 1
                if found >= k and not encode:
                    break
        nz_arr[i] = cnt[2]
        if encode:
            e = np.int64(0)
            for x in range(L):
                if occ[x] == 1:
                    e |= np.int64(1) << x
            enc[i] = e
    return enc, xk, nz_arr


@njit(cache=True)
def ensemble_hitting(seeds, occ0, q, mode, target, horizon):
    """Hitting times from a fixed start; censored flags where the
    horizon was reached first."""
    n = seeds.shape[0]
    L = occ0.shape[0]
    times = np.empty(n, np.float64)
    censored = np.zeros(n, np.uint8)
    st = np.empty(1, np.uint64)
    occ = np.empty(L, np.uint8)
    arr0 = np.empty(L, np.int64)
    pos0 = np.empty(L, np.int64)
    arr1 = np.empty(L, np.int64)
    pos1 = np.empty(L, np.int64)
    cnt = np.zeros(4, np.int64)
    evt = np.empty(0, np.float64)
    evs = np.empty(0, np.int64)
    evv = np.empty(0, np.uint8)
    for i in range(n):
        st[0] = seeds[i]
        occ[:] = occ0
        t, status, ff, nev = _run(occ, q, st, 0.0, horizon, mode, target,
                                  evt, evs, evv, np.inf,
                                  arr0, pos0, arr1, pos1, cnt, True)
        times[i] = t
        censored[i] = status == 0
    return times, censored


@njit(cache=True)
def ensemble_probes(seeds, use_renewal, nu_cdf, mu_cdf, occ0, L, q,
                    probes, k):
    """Per-trajectory observables on an ascending probe grid.

    Returns (p0, persist, nzeros, xk): origin-empty indicator,
    persistence indicator (origin empty throughout), zero count, and
    first-k zero positions (sentinel L), each per (trajectory, probe).
    """
    n = seeds.shape[0]
    P = probes.shape[0]
    p0 = np.zeros((n, P), np.uint8)
    persist = np.zeros((n, P), np.uint8)
    nzp = np.zeros((n, P), np.int64)
    xk = np.full((n, P, k), L, np.int64)
    st = np.empty(1, np.uint64)
    occ = np.empty(L, np.uint8)
    arr0 = np.empty(L, np.int64)
    pos0 = np.empty(L, np.int64)
    arr1 = np.empty(L, np.int64)
    pos1 = np.empty(L, np.int64)
    cnt = np.zeros(4, np.int64)
    evt = np.empty(0, np.float64)
    evs = np.empty(0, np.int64)
    evv = np.empty(0, np.uint8)
    for i in range(n):
        st[0] = seeds[i]
        if use_renewal:
            _sample_init(occ, nu_cdf, mu_cdf, st)
        else:
            occ[:] = occ0
        origin0 = occ[0] == 0
        ff = np.inf
        t = 0.0
        init = True
        for j in range(P):
            t, status, ff, nev = _run(occ, q, st, t, probes[j], 0, 0,
                                      evt, evs, evv, ff,
                                      arr0, pos0, arr1, pos1, cnt, init)
            init = False
            p0[i, j] = 1 if occ[0] == 0 else 0
            persist[i, j] = 1 if (origin0 and ff > probes[j]) else 0
            nzp[i, j] = cnt[2]
            if k > 0:
                found = 0
                for x in range(L):
                    if occ[x] == 0:
                        xk[i, j, found] = x
                        found += 1
                        if found == k:
                            break
    return p0, persist, nzp, xk
