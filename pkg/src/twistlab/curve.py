"""Hecke data of a fixed elliptic curve E/Q.

Coefficients use the analytic normalisation ``lam(p) = a_p / sqrt(p)`` so
that ``|a(n)| <= d(n)``. Conductor and root number are inputs; nothing here
runs Tate's algorithm.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .arith import is_prime, lcm, prime_power_base, primes_up_to

log = logging.getLogger(__name__)

#: Refuse to allocate coefficient tables larger than this many entries.
N_MAX_CAP = 50_000_000

#: Below this the brute-force double loop over (x, y) is used.
ENUMERATE_BELOW = 100
#: ``auto`` point counting switches from the O(p) table to baby-step giant-step here.
BSGS_FROM = 20_000


class TableRangeError(ValueError):
    """A coefficient was requested beyond the range a table was built for."""


@dataclass(frozen=True)
class CurveSpec:
    """Long Weierstrass model ``[a1, a2, a3, a4, a6]`` plus conductor and root number.

    The model must be minimal at every prime; ``build_coefficients`` rejects a
    model whose discriminant has a prime factor not dividing ``N``.
    """

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    N: int
    eps_E: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("conductor must be positive")
        if self.eps_E not in (-1, 1):
            raise ValueError("root number must be +1 or -1")
        if self.discriminant == 0:
            raise ValueError("singular Weierstrass model (discriminant 0)")

    @classmethod
    def from_coefficients(cls, coeffs, N: int, eps_E: int) -> "CurveSpec":
        a1, a2, a3, a4, a6 = (int(c) for c in coeffs)
        return cls(a1, a2, a3, a4, a6, int(N), int(eps_E))

    @property
    def coefficients(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def N0(self) -> int:
        return lcm(8, self.N)

    @property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.coefficients
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c_invariants(self) -> tuple[int, int]:
        b2, b4, b6, _ = self.b_invariants
        return b2 * b2 - 24 * b4, -(b2**3) + 36 * b2 * b4 - 216 * b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def key(self) -> bytes:
        """32-byte identity hash of (a1..a6, N), used to key coefficient caches."""
        text = ",".join(str(v) for v in (*self.coefficients, self.N))
        return hashlib.sha256(text.encode()).digest()

    def is_bad(self, p: int) -> bool:
        return self.N % p == 0


#: Cremona 11a1, the default curve of every experiment.
CURVE_11A1 = CurveSpec(0, -1, 1, -10, -20, N=11, eps_E=1)


@dataclass(frozen=True)
class SatakeParameter:
    p: int
    alpha: complex


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Immutable coefficient data for one curve.

    ``primes``/``ap_int``/``lam`` are parallel arrays over all primes up to
    ``p_max``; ``an[n]`` holds the normalised a(n) for ``1 <= n <= n_max``
    (``an[0]`` is unused).
    """

    p_max: int
    n_max: int
    primes: np.ndarray
    ap_int: np.ndarray
    lam: np.ndarray
    an: np.ndarray
    built_for: bytes
    bad_mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.primes, self.ap_int, self.lam, self.an, self.bad_mask):
            arr.setflags(write=False)

    def index_of(self, p: int) -> int:
        if p > self.p_max:
            raise TableRangeError(f"prime {p} exceeds table p_max={self.p_max}")
        i = int(np.searchsorted(self.primes, p))
        if i >= self.primes.size or self.primes[i] != p:
            raise ValueError(f"{p} is not prime")
        return i

    def ap(self, p: int) -> int:
        return int(self.ap_int[self.index_of(p)])

    def lam_of(self, p: int) -> float:
        return float(self.lam[self.index_of(p)])

    def primes_upto(self, x: float) -> slice:
        """Slice of the prime arrays covering primes <= x."""
        if x > self.p_max:
            raise TableRangeError(f"need primes up to {x:g}, table has p_max={self.p_max}")
        return slice(0, int(np.searchsorted(self.primes, math.floor(x), side="right")))


# ---------------------------------------------------------------------------
# point counting
# ---------------------------------------------------------------------------


def _count_by_enumeration(curve: CurveSpec, p: int) -> int:
    a1, a2, a3, a4, a6 = (c % p for c in curve.coefficients)
    bad = curve.is_bad(p)
    count = 1
    for x in range(p):
        rhs = (x * x * x + a2 * x * x + a4 * x + a6) % p
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - rhs) % p:
                continue
            if bad:
                fx = (a1 * y - 3 * x * x - 2 * a2 * x - a4) % p
                fy = (2 * y + a1 * x + a3) % p
                if fx == 0 and fy == 0:
                    continue  # the singular point
            count += 1
    return count


def count_points_mod_p(curve: CurveSpec, p: int, method: str = "auto") -> int:
    """Number of points of E mod p, point at infinity included.

    At a bad prime the singular point is left out, so that ``a_p = p - count``
    there (and ``a_p = p + 1 - count`` at good primes).

    ``method`` is ``"auto"``, ``"enumerate"``, ``"table"`` or ``"bsgs"``.
    """
    p = int(p)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    bad = curve.is_bad(p)
    if method == "auto":
        if p < ENUMERATE_BELOW:
            method = "enumerate"
        elif p >= BSGS_FROM and not bad:
            method = "bsgs"
        else:
            method = "table"
    if method == "enumerate" or p == 2:
        return _count_by_enumeration(curve, p)
    if method == "table":
        b2, b4, b6, _ = curve.b_invariants
        total = int(_kernels.count_points_table(b2 % p, (2 * b4) % p, b6 % p, p))
        return total - 1 if bad else total
    if method == "bsgs":
        if bad or p < 5:
            raise ValueError("baby-step giant-step needs a good prime p >= 5")
        return p + 1 - _ap_bsgs(curve, p)
    raise ValueError(f"unknown point counting method {method!r}")


def _ap_bsgs(curve: CurveSpec, p: int) -> int:
    c4, c6 = curve.c_invariants
    # y^2 = x^3 - 27 c4 x - 54 c6 is isomorphic to E over F_p for p >= 5
    A, B = (-27 * c4) % p, (-54 * c6) % p
    ap, ok = _kernels.ap_bsgs(A, B, p, 64)
    if not ok:
        log.debug("BSGS ambiguous at p=%d, falling back to table count", p)
        b2, b4, b6, _ = curve.b_invariants
        return p + 1 - int(_kernels.count_points_table(b2 % p, (2 * b4) % p, b6 % p, p))
    return int(ap)


def ap_from_count(curve: CurveSpec, p: int, count: int) -> int:
    return p - count if curve.is_bad(p) else p + 1 - count


# ---------------------------------------------------------------------------
# normalised coefficients, Satake parameters, von Mangoldt values
# ---------------------------------------------------------------------------


def normalized_ap(curve: CurveSpec, table: CoefficientTable, p: int) -> float:
    if table.built_for != curve.key:
        raise ValueError("coefficient table was built for a different curve")
    return table.lam_of(p)


def satake(lam_p: float) -> SatakeParameter:
    """Satake parameter with ``alpha + conj(alpha) = lam_p`` and Im alpha >= 0.

    The ``p`` field is left as 0; :func:`satake_at` fills it in.
    """
    if abs(lam_p) > 2 + 1e-9:
        raise ValueError(f"|lambda(p)| = {abs(lam_p)} > 2 violates the Hasse bound")
    re = max(-1.0, min(1.0, lam_p / 2))
    return SatakeParameter(0, complex(re, math.sqrt(max(0.0, 1.0 - re * re))))


def satake_at(table: CoefficientTable, p: int) -> SatakeParameter:
    return SatakeParameter(p, satake(table.lam_of(p)).alpha)


def lambda_E(table: CoefficientTable, n: int, *, bad_primes: frozenset[int] | None = None) -> float:
    """Coefficient of n^{-s} in -L'/L(s, E).

    ``bad_primes`` are primes whose local factor has degree one; when not
    given they are read off the table.
    """
    pk = prime_power_base(n)
    if pk is None:
        return 0.0
    p, k = pk
    i = table.index_of(p)
    lam = float(table.lam[i])
    bad = bool(table.bad_mask[i]) if bad_primes is None else p in bad_primes
    if bad:
        return lam**k * math.log(p)
    re = max(-1.0, min(1.0, lam / 2))
    return 2.0 * math.cos(k * math.acos(re)) * math.log(p)


def lambda_E_powers(lam: np.ndarray, bad: np.ndarray, k: int) -> np.ndarray:
    """Vectorised ``Lambda_E(p^k) / log p`` over arrays of primes."""
    theta = np.arccos(np.clip(lam / 2, -1.0, 1.0))
    return np.where(bad, lam**k, 2.0 * np.cos(k * theta))


# ---------------------------------------------------------------------------
# table construction
# ---------------------------------------------------------------------------


def compute_ap(curve: CurveSpec, primes: np.ndarray, method: str = "auto") -> np.ndarray:
    """Integer a_p for every prime in ``primes``."""
    disc = curve.discriminant
    out = np.empty(primes.size, dtype=np.int64)
    for i, p in enumerate(primes.tolist()):
        if disc % p == 0 and not curve.is_bad(p):
            raise ValueError(f"model is not minimal at p={p} (p | discriminant but p does not divide N)")
        out[i] = ap_from_count(curve, p, count_points_mod_p(curve, p, method))
    return out


def build_coefficients(
    curve: CurveSpec,
    n_max: int,
    p_max: int | None = None,
    *,
    method: str = "auto",
    n_max_cap: int = N_MAX_CAP,
) -> CoefficientTable:
    """Sieve a_p up to ``p_max`` (default ``n_max``) and fill a(n) for n <= n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if max(n_max, p_max or 0) > n_max_cap:
        raise MemoryError(f"table size {max(n_max, p_max or 0)} exceeds the configured cap {n_max_cap}")
    p_max = max(int(p_max or n_max), n_max, 2)
    primes = np.array(primes_up_to(p_max), dtype=np.int64)
    ap = compute_ap(curve, primes, method)
    bad = np.array([curve.is_bad(p) for p in primes.tolist()], dtype=bool)
    return table_from_ap(curve, primes, ap, bad, n_max, p_max)


def table_from_ap(curve, primes, ap, bad, n_max, p_max) -> CoefficientTable:
    lam = ap / np.sqrt(primes.astype(np.float64))
    lam_dense = np.zeros(n_max + 1)
    bad_dense = np.zeros(n_max + 1, dtype=np.bool_)
    cut = int(np.searchsorted(primes, n_max, side="right"))
    lam_dense[primes[:cut]] = lam[:cut]
    bad_dense[primes[:cut]] = bad[:cut]
    an = np.asarray(_kernels.hecke_fill(n_max, lam_dense, bad_dense), dtype=np.float64)
    return CoefficientTable(
        p_max=p_max,
        n_max=n_max,
        primes=primes,
        ap_int=np.asarray(ap, dtype=np.int64),
        lam=lam,
        an=an,
        built_for=curve.key,
        bad_mask=np.asarray(bad, dtype=bool),
    )


# ---------------------------------------------------------------------------
# Rankin-Selberg drift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankinSelbergReport:
    ys: tuple[float, ...]
    sums: tuple[float, ...]
    drift: tuple[float, ...]  # S(y) + log y
    max_abs_drift: float
    slope: float  # least-squares slope of S(y) against -log y


def rankin_selberg(curve: CurveSpec, table: CoefficientTable, ys) -> RankinSelbergReport:
    """Partial sums S(y) = sum_{p <= y, p !| N0} (lam(p)^2 - 2) log p / p."""
    N0 = curve.N0
    keep = (N0 % table.primes) != 0
    p = table.primes.astype(np.float64)
    terms = np.where(keep, (table.lam**2 - 2.0) * np.log(p) / p, 0.0)
    csum = np.cumsum(terms)
    sums = []
    for y in ys:
        sl = table.primes_upto(y)
        sums.append(float(csum[sl.stop - 1]) if sl.stop else 0.0)
    logy = np.log(np.asarray(ys, dtype=np.float64))
    s = np.asarray(sums)
    drift = s + logy
    slope = float(np.polyfit(-logy, s, 1)[0])
    return RankinSelbergReport(
        ys=tuple(float(y) for y in ys),
        sums=tuple(sums),
        drift=tuple(float(v) for v in drift),
        max_abs_drift=float(np.max(np.abs(drift))),
        slope=slope,
    )
