"""Hot numeric kernels.

Every kernel exists twice: a loop form written in the numba-compatible
subset of Python (compiled with ``@jit`` when numba is enabled) and a
vectorised numpy form. The public names at the bottom of the module pick
one according to :mod:`twistlab._accel`. The baby-step giant-step point
counter has no vectorised form; without numba it runs as plain Python.

All integer arithmetic assumes moduli below 2**31 so that products of two
residues fit in int64.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, jit

# ---------------------------------------------------------------------------
# point counting, O(p) table method
# ---------------------------------------------------------------------------


@jit
def _count_points_loop(c2, c1, c0, p):
    # #{(x, y)} + 1 for (2y + a1 x + a3)^2 = 4x^3 + c2 x^2 + c1 x + c0 over F_p
    sq = np.zeros(p, np.int8)
    for x in range(1, (p - 1) // 2 + 1):
        sq[x * x % p] = 1
    total = 0
    for x in range(p):
        g = (4 * x + c2) % p
        g = (g * x + c1) % p
        g = (g * x + c0) % p
        if g != 0:
            total += 1 if sq[g] else -1
    return p + 1 + total


def _count_points_numpy(c2, c1, c0, p):
    x = np.arange(p, dtype=np.int64)
    leg = -np.ones(p, dtype=np.int8)
    leg[(x * x) % p] = 1
    leg[0] = 0
    g = (4 * x + c2) % p
    g = (g * x + c1) % p
    g = (g * x + c0) % p
    return p + 1 + int(leg[g].sum(dtype=np.int64))


# ---------------------------------------------------------------------------
# point counting, baby-step giant-step on y^2 = x^3 + A x + B
# ---------------------------------------------------------------------------


@jit
def _isqrt(n):
    r = int(math.sqrt(n))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@jit
def _powmod(a, e, p):
    r = 1
    a = a % p
    while e > 0:
        if e & 1:
            r = r * a % p
        a = a * a % p
        e >>= 1
    return r


@jit
def _invmod(a, p):
    t0, t1 = 0, 1
    r0, r1 = p, a % p
    while r1 != 0:
        q = r0 // r1
        t0, t1 = t1, t0 - q * t1
        r0, r1 = r1, r0 - q * r1
    return t0 % p


@jit
def _ec_add(x1, y1, f1, x2, y2, f2, a, p):
    # affine points, f == 0 marks the point at infinity
    if f1 == 0:
        return x2, y2, f2
    if f2 == 0:
        return x1, y1, f1
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return 0, 0, 0
        lam = (3 * (x1 * x1 % p) + a) % p * _invmod(2 * y1 % p, p) % p
    else:
        lam = (y2 - y1) % p * _invmod((x2 - x1) % p, p) % p
    x3 = (lam * lam - x1 - x2) % p
    y3 = (lam * ((x1 - x3) % p) - y1) % p
    return x3, y3, 1


@jit
def _ec_mul(k, x, y, f, a, p):
    rx, ry, rf = 0, 0, 0
    while k > 0:
        if k & 1:
            rx, ry, rf = _ec_add(rx, ry, rf, x, y, f, a, p)
        x, y, f = _ec_add(x, y, f, x, y, f, a, p)
        k >>= 1
    return rx, ry, rf


@jit
def _hasse_hits(x0, y0, a, p, W, out):
    """Mark ``out[t + W]`` for every |t| <= W with (p + 1 - t) P = O.

    Returns False when P has order <= 2m (baby steps collide); the caller
    then moves on to another point.
    """
    m = _isqrt(W) + 1
    bx = np.empty(m, np.int64)
    by = np.empty(m, np.int64)
    cx, cy, cf = x0, y0, 1
    for j in range(m):
        if cf == 0:
            return False
        bx[j] = cx
        by[j] = cy
        cx, cy, cf = _ec_add(cx, cy, cf, x0, y0, 1, a, p)
    order = np.argsort(bx)
    sx = bx[order]
    for j in range(m - 1):
        if sx[j] == sx[j + 1]:
            return False
    step = 2 * m + 1
    gx, gy, gf = _ec_mul(step, x0, y0, 1, a, p)
    ngy = (p - gy) % p
    i_lo = -((W + m) // step) - 1
    i_hi = (W + m) // step + 1
    rx, ry, rf = _ec_mul(p + 1 - i_lo * step, x0, y0, 1, a, p)
    for i in range(i_lo, i_hi + 1):
        base = i * step
        if rf == 0:
            t = base
            if -W <= t <= W:
                out[t + W] = True
        else:
            k = np.searchsorted(sx, rx)
            if k < m and sx[k] == rx:
                j = order[k] + 1
                t = base + j if by[order[k]] == ry else base - j
                if -W <= t <= W:
                    out[t + W] = True
        rx, ry, rf = _ec_add(rx, ry, rf, gx, ngy, gf, a, p)
    return True


@jit
def _ap_bsgs_loop(A, B, p, max_points):
    # Points (r x, r^2) with r = x^3 + A x + B lie on y^2 = X^3 + A r^2 X + B r^3,
    # which is E when r is a square and its quadratic twist otherwise, so both
    # group orders p + 1 -+ a_p get used without square roots.
    W = _isqrt(4 * p)
    cand = np.ones(2 * W + 1, np.bool_)
    hits = np.zeros(2 * W + 1, np.bool_)
    e = (p - 1) // 2
    tried = 0
    x = 0
    while tried < max_points and x < p:
        r = ((x * x % p) * x % p + A * x % p + B) % p
        x0 = x
        x += 1
        if r == 0:
            continue
        s = 1 if _powmod(r, e, p) == 1 else -1
        r2 = r * r % p
        hits[:] = False
        if not _hasse_hits(r * x0 % p, r2, A * r2 % p, p, W, hits):
            continue
        tried += 1
        count = 0
        last = 0
        for ap in range(-W, W + 1):
            if cand[ap + W] and not hits[s * ap + W]:
                cand[ap + W] = False
            if cand[ap + W]:
                count += 1
                last = ap
        if count == 1:
            return last, True
        if count == 0:
            return 0, False
    return 0, False


# ---------------------------------------------------------------------------
# Hecke coefficients a(n) from a(p)
# ---------------------------------------------------------------------------


@jit
def _hecke_fill_loop(n_max, lam_dense, bad_dense):
    spf = np.zeros(n_max + 1, np.int64)
    for i in range(2, n_max + 1):
        if spf[i] == 0:
            for j in range(i, n_max + 1, i):
                if spf[j] == 0:
                    spf[j] = i
    an = np.zeros(n_max + 1)
    an[1] = 1.0
    for n in range(2, n_max + 1):
        p = spf[n]
        m = n
        q = 1
        while m % p == 0:
            m //= p
            q *= p
        if m == 1:
            if n == p:
                an[n] = lam_dense[p]
            elif bad_dense[p]:
                an[n] = lam_dense[p] * an[n // p]
            else:
                an[n] = lam_dense[p] * an[n // p] - an[n // p // p]
        else:
            an[n] = an[m] * an[q]
    return an


def _hecke_fill_numpy(n_max, lam_dense, bad_dense):
    an = np.ones(n_max + 1)
    an[0] = 0.0
    primes = np.flatnonzero(_prime_flags(n_max))
    for p in primes:
        p = int(p)
        lam = lam_dense[p]
        powers = [1.0, lam]
        q = p * p
        while q <= n_max:
            if bad_dense[p]:
                powers.append(lam * powers[-1])
            else:
                powers.append(lam * powers[-1] - powers[-2])
            q *= p
        idx = np.arange(p, n_max + 1, p)
        expo = np.ones(idx.size, dtype=np.int64)
        step = p
        while step * p <= n_max:
            # positions of multiples of p * step inside idx
            expo[step - 1 :: step] += 1
            step *= p
        an[idx] *= np.asarray(powers)[expo]
    return an


def _prime_flags(n):
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


# ---------------------------------------------------------------------------
# Jacobi symbol (r / m) for every residue r, m odd
# ---------------------------------------------------------------------------


@jit
def _residue_table_loop(m, factors):
    table = np.ones(m, np.int8)
    for q in factors:
        leg = -np.ones(q, np.int8)
        leg[0] = 0
        for x in range(1, (q - 1) // 2 + 1):
            leg[x * x % q] = 1
        r = 0
        for n in range(m):
            table[n] *= leg[r]
            r += 1
            if r == q:
                r = 0
    return table


def _residue_table_numpy(m, factors):
    table = np.ones(m, dtype=np.int8)
    n = np.arange(m, dtype=np.int64)
    for q in factors:
        q = int(q)
        x = np.arange(1, (q - 1) // 2 + 1, dtype=np.int64)
        leg = -np.ones(q, dtype=np.int8)
        leg[(x * x) % q] = 1
        leg[0] = 0
        table *= leg[n % q]
    return table


# ---------------------------------------------------------------------------
# smoothed central-value sum  sum_n b(n) chi(n) exp(-n / Q)
# ---------------------------------------------------------------------------


@jit
def _central_sum_loop(b, table, Q, n_cut):
    m = table.shape[0]
    s = 0.0
    c = 0.0
    r = 0
    for n in range(1, n_cut + 1):
        r += 1
        if r == m:
            r = 0
        ch = table[r]
        if ch != 0:
            y = ch * b[n] * math.exp(-n / Q) - c
            t = s + y
            c = (t - s) - y
            s = t
    return s


def _central_sum_numpy(b, table, Q, n_cut):
    n = np.arange(1, n_cut + 1, dtype=np.int64)
    terms = table[n % table.shape[0]] * b[1 : n_cut + 1] * np.exp(-n / Q)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# sum_p  A[w, p] chi_d(p) + B[w, p] chi_d(p)^2   for many d at once
# ---------------------------------------------------------------------------


@jit
def _prime_char_sums_loop(ds, primes, A, B):
    nw = A.shape[0]
    nd = ds.shape[0]
    out = np.zeros((nw, nd))
    for j in range(primes.shape[0]):
        p = primes[j]
        if p == 2:
            leg = np.zeros(8, np.int8)
            leg[1] = 1
            leg[7] = 1
            leg[3] = -1
            leg[5] = -1
            q = 8
        else:
            leg = -np.ones(p, np.int8)
            leg[0] = 0
            for x in range(1, (p - 1) // 2 + 1):
                leg[x * x % p] = 1
            q = p
        for i in range(nd):
            ch = leg[ds[i] % q]
            if ch != 0:
                for w in range(nw):
                    out[w, i] += A[w, j] * ch + B[w, j]
    return out


def _prime_char_sums_numpy(ds, primes, A, B):
    out = np.zeros((A.shape[0], ds.shape[0]))
    for j, p in enumerate(primes):
        p = int(p)
        if p == 2:
            leg = np.array([0, 1, 0, -1, 0, -1, 0, 1], dtype=np.int8)
            q = 8
        else:
            x = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
            leg = -np.ones(p, dtype=np.int8)
            leg[(x * x) % p] = 1
            leg[0] = 0
            q = p
        ch = leg[ds % q].astype(np.float64)
        out += A[:, j : j + 1] * ch + B[:, j : j + 1] * (ch * ch)
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    count_points_table = _count_points_loop
    hecke_fill = _hecke_fill_loop
    residue_table = _residue_table_loop
    central_sum = _central_sum_loop
    prime_char_sums = _prime_char_sums_loop
else:
    count_points_table = _count_points_numpy
    hecke_fill = _hecke_fill_numpy
    residue_table = _residue_table_numpy
    central_sum = _central_sum_numpy
    prime_char_sums = _prime_char_sums_numpy

ap_bsgs = _ap_bsgs_loop
