"""Prime sums P(d; x) = sum_{p <= x, p not dividing N0} lambda(p) chi_d(p) / sqrt(p) and their moments."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .characters import kronecker
from .curve import CoefficientTable, CurveSpec


@dataclass(frozen=True)
class PrimeSumValue:
    d: int
    x: float
    value: float
    normalized: float


@dataclass(frozen=True)
class MomentReport:
    k_max: int
    X: float
    x: float
    empirical: tuple[float, ...]
    gaussian: tuple[float, ...]
    sample_size: int
    label: str = ""


@dataclass(frozen=True)
class ResidualSummary:
    count: int
    mean: float
    median: float
    quantiles: dict[float, float] = field(default_factory=dict)
    correlation: float = math.nan


def gaussian_moment(k: int) -> float:
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k % 2:
        return 0.0
    return float(math.factorial(k) // (2 ** (k // 2) * math.factorial(k // 2)))


def loglog(X: float) -> float:
    return math.log(math.log(X))


def prime_weights(table: CoefficientTable, N0: int, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Primes p <= x with p not dividing N0, and lambda(p)/sqrt(p)."""
    if x < 3:
        raise ValueError("x must be >= 3")
    sl = table.primes_upto(x)
    p = table.primes[sl]
    keep = (N0 % p) != 0
    p = p[keep]
    return p, table.lam[sl][keep] / np.sqrt(p)


def _x_checked(table: CoefficientTable, x: float) -> None:
    if x < 3:
        raise ValueError("x must be >= 3")
    table.primes_upto(x)  # raises TableRangeError past p_max


def prime_sum_P(
    curve: CurveSpec, table: CoefficientTable, d: int, x: float, *, X: float | None = None
) -> PrimeSumValue:
    """P(d; x), summed over primes in increasing order.

    ``normalized`` divides by sqrt(log log X), with X = |d| when not given.
    """
    _x_checked(table, x)
    primes, w = prime_weights(table, curve.N0, x)
    s = 0.0
    for p, wp in zip(primes.tolist(), w.tolist()):
        c = kronecker(d, p)
        if c:
            s += wp * c
    scale = X if X is not None else abs(d)
    norm = s / math.sqrt(loglog(scale)) if scale > math.e else math.nan
    return PrimeSumValue(d, float(x), s, norm)


def prime_sums_batch(curve: CurveSpec, table: CoefficientTable, ds: Sequence[int], x: float) -> np.ndarray:
    """P(d; x) for many d. Same summation order as :func:`prime_sum_P`."""
    _x_checked(table, x)
    primes, w = prime_weights(table, curve.N0, x)
    ds_arr = np.asarray(ds, dtype=np.int64)
    if ds_arr.size == 0:
        return np.zeros(0)
    A = np.ascontiguousarray(w[None, :])
    B = np.zeros_like(A)
    return _kernels.prime_char_sums(ds_arr, primes.astype(np.int64), A, B)[0]


def prime_sum_grid(curve: CurveSpec, table: CoefficientTable, d: int, xs: Sequence[float]) -> list[PrimeSumValue]:
    """P(d; x) along an increasing grid of x, reusing the running sum."""
    xs = [float(v) for v in xs]
    if any(b < a for a, b in zip(xs, xs[1:])):
        raise ValueError("x grid must be nondecreasing")
    if not xs:
        return []
    _x_checked(table, xs[0])
    primes, w = prime_weights(table, curve.N0, xs[-1])
    out = []
    s = 0.0
    i = 0
    plist, wlist = primes.tolist(), w.tolist()
    for x in xs:
        while i < len(plist) and plist[i] <= x:
            c = kronecker(d, plist[i])
            if c:
                s += wlist[i] * c
            i += 1
        out.append(PrimeSumValue(d, x, s, s / math.sqrt(loglog(abs(d))) if abs(d) > math.e else math.nan))
    return out


def prop1_rhs(curve: CurveSpec, table: CoefficientTable, d: int, x: float) -> float:
    """P(d; x) - (1/2) log log x."""
    if x > abs(d):
        warnings.warn(f"x={x:g} exceeds |d|={abs(d)}", stacklevel=2)
    return prime_sum_P(curve, table, d, x).value - 0.5 * loglog(x)


def moments_from_values(
    P: np.ndarray, weights: np.ndarray, X: float, x: float, k_max: int, label: str = ""
) -> MomentReport:
    """[sum w P^k] / [sum w * (log log X)^{k/2}] for k = 0..k_max."""
    P = np.asarray(P, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if P.size == 0:
        raise ValueError("empty sample")
    W = math.fsum(weights)
    if W <= 0:
        raise ValueError("sample has zero total weight")
    ll = loglog(X)
    emp = []
    pk = np.ones_like(P)
    for k in range(k_max + 1):
        emp.append(math.fsum(weights * pk) / (W * ll ** (k / 2)))
        pk = pk * P
    return MomentReport(
        k_max, float(X), float(x), tuple(emp), tuple(gaussian_moment(k) for k in range(k_max + 1)), int(P.size), label
    )


def empirical_moments(
    curve: CurveSpec,
    table: CoefficientTable,
    ds: Sequence[int],
    X: float,
    x: float,
    k_max: int,
    *,
    window: str = "smooth",
    label: str = "",
) -> MomentReport:
    """Window-weighted moments of P(d; x) over the sample ``ds``.

    ``window`` is ``"smooth"`` (the default bump) or ``"indicator"`` (1 on [1, 2]).
    """
    from .explicit import window_weights

    if len(ds) == 0:
        raise ValueError("empty sample")
    P = prime_sums_batch(curve, table, ds, x)
    w = window_weights(ds, X, window)
    return moments_from_values(P, w, X, x, k_max, label)


def repulsion_residual_summary(log_L: Sequence[float], P: Sequence[float], x: float) -> ResidualSummary:
    """Summary of r(d) = log L - (P(d;x) - 1/2 log log x) over non-vanished entries."""
    log_L = np.asarray(log_L, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    ok = np.isfinite(log_L)
    if not ok.any():
        raise ValueError("no non-vanished values to summarise")
    r = log_L[ok] - (P[ok] - 0.5 * loglog(x))
    qs = (0.1, 0.25, 0.75, 0.9)
    corr = float(np.corrcoef(log_L[ok], P[ok])[0, 1]) if ok.sum() > 2 else math.nan
    return ResidualSummary(
        int(r.size),
        math.fsum(r) / r.size,
        float(np.median(r)),
        {q: float(np.quantile(r, q)) for q in qs},
        corr,
    )
