"""Quadratic characters, root numbers and the twist family E(kappa, a)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .arith import factorize, primes_up_to
from .curve import CurveSpec

_TAB2 = (0, 1, 0, -1, 0, -1, 0, 1)


def is_fundamental(d: int) -> bool:
    """True iff d is the discriminant of a quadratic field."""
    d = int(d)
    if d == 0:
        raise ValueError("d must be nonzero")
    if d == 1:
        return False
    if d % 4 == 1:
        return _squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorize(n).values())


def kronecker(a: int, b: int) -> int:
    """Kronecker symbol (a / b)."""
    a, b = int(a), int(b)
    if b == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and b % 2 == 0:
        return 0
    v = 0
    while b % 2 == 0:
        v += 1
        b //= 2
    k = 1 if v % 2 == 0 else _TAB2[a & 7]
    if b < 0:
        b = -b
        if a < 0:
            k = -k
    while a != 0:
        v = 0
        while a % 2 == 0:
            v += 1
            a //= 2
        if v % 2:
            k *= _TAB2[b & 7]
        if a & b & 2:
            k = -k
        r = abs(a)
        a = b % r
        b = r
    return k if b == 1 else 0


def root_number(curve: CurveSpec, d: int) -> int:
    """eps_E(d) = eps_E * chi_d(-N) for a fundamental d coprime to 2N."""
    if not is_fundamental(d) or math.gcd(d, 2 * curve.N) != 1:
        raise ValueError(f"d={d} must be a fundamental discriminant coprime to 2N={2 * curve.N}")
    return curve.eps_E * kronecker(d, -curve.N)


def chi_table(d: int) -> np.ndarray:
    """chi_d(r) for r = 0 .. |d|-1, for odd fundamental d (d = 1 mod 4).

    For such d the Kronecker character is the Jacobi symbol (. / |d|), so
    chi_d(n) = table[n % |d|] for every n >= 1.
    """
    if d % 4 != 1:
        raise ValueError("chi_table needs d = 1 mod 4")
    m = abs(d)
    factors = np.array(sorted(factorize(m)) if m > 1 else [], dtype=np.int64)
    return np.asarray(_kernels.residue_table(m, factors), dtype=np.int8)


# ---------------------------------------------------------------------------
# family enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscriminantRecord:
    d: int
    kappa: int
    residue_a: int
    eps_d: int


@dataclass(frozen=True)
class FamilyClass:
    kappa: int
    a_mod_N0: int
    admissible: bool


def family_classes(curve: CurveSpec) -> list[FamilyClass]:
    """Every (kappa, a mod N0) with a = 1, 5 mod 8 and gcd(a, N) = 1.

    chi_d(-N) depends only on the sign of d and on d mod N0, so the class
    root number is read off the first term of the progression.
    """
    N0 = curve.N0
    out = []
    for kappa in (1, -1):
        for a in range(1, N0, 4):
            if math.gcd(a, curve.N) != 1:
                continue
            first = a if kappa == 1 else a - N0
            out.append(FamilyClass(kappa, a, curve.eps_E * kronecker(first, -curve.N) == 1))
    return out


def admissible_classes(curve: CurveSpec) -> list[FamilyClass]:
    return [c for c in family_classes(curve) if c.admissible]


def squarefree_flags(lo: int, hi: int) -> np.ndarray:
    """flags[i] is True iff lo + i is squarefree, for lo >= 1."""
    flags = np.ones(hi - lo + 1, dtype=bool)
    for p in primes_up_to(math.isqrt(hi)).tolist():
        q = p * p
        start = (-lo) % q
        flags[start::q] = False
    return flags


def enumerate_window(
    curve: CurveSpec,
    lo: float,
    hi: float,
    *,
    kappa: int | None = None,
    a_mod_N0: int | None = None,
    admissible_only: bool = True,
    lower_open: bool = False,
) -> list[DiscriminantRecord]:
    """Odd fundamental d coprime to N with lo <= |d| <= hi, sorted by (|d|, d).

    ``lower_open`` makes the window lo < |d| <= hi. |d| = 1 is never returned.
    """
    m_lo = int(math.floor(lo)) + 1 if lower_open else int(math.ceil(lo))
    m_lo = max(m_lo, 2)
    m_hi = int(math.floor(hi))
    if m_hi < m_lo:
        return []
    N, N0 = curve.N, curve.N0
    sf = squarefree_flags(m_lo, m_hi)
    ms = np.arange(m_lo, m_hi + 1, dtype=np.int64)
    keep = sf & (ms % 2 == 1) & (np.gcd(ms, N) == 1)
    ms = ms[keep]
    cls_sign = {(c.kappa, c.a_mod_N0): c.admissible for c in family_classes(curve)}
    out = []
    for m in ms.tolist():
        for sgn in (1, -1):
            if kappa is not None and sgn != kappa:
                continue
            d = sgn * m
            if d % 4 != 1:
                continue
            a = d % N0
            if a_mod_N0 is not None and a != a_mod_N0 % N0:
                continue
            eps = curve.eps_E * kronecker(d, -N)
            if (eps == 1) != cls_sign[(sgn, a)]:
                raise RuntimeError(f"root number of d={d} contradicts its class ({sgn}, {a} mod {N0})")
            if admissible_only and eps != 1:
                continue
            out.append(DiscriminantRecord(d, sgn, a, eps))
    return out


def enumerate_family(curve: CurveSpec, kappa: int, a_mod_N0: int, X: float) -> list[DiscriminantRecord]:
    """Members of E(kappa, a) with |d| in the window support [X/2, 5X/2].

    An inadmissible class is still enumerated (its records carry eps_d = -1)
    so callers can flag it; see :func:`family_classes`.
    """
    if X < 20:
        raise ValueError("X must be >= 20")
    if a_mod_N0 % 8 not in (1, 5):
        raise ValueError("a must be 1 or 5 mod 8")
    return enumerate_window(
        curve, X / 2, 5 * X / 2, kappa=kappa, a_mod_N0=a_mod_N0, admissible_only=False
    )
