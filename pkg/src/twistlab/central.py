"""Central values L(1/2, E_d) and the normalised log-central-value statistic.

With gamma factor Gamma(s + 1/2) the approximate functional equation has the
weight W(x) = (1/2 pi i) int Gamma(1 + u) x^{-u} du/u = e^{-x}, so

    L(1/2, E_d) = (1 + eps_E(d)) sum_n a(n) chi_d(n) n^{-1/2} exp(-n/Q),
    Q = sqrt(N) |d| / (2 pi).
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .characters import chi_table, root_number
from .curve import CoefficientTable, CurveSpec

VANISH_THRESHOLD = 1e-6
NEG_INFINITY = float("-inf")


class InsufficientCoefficientsError(ValueError):
    def __init__(self, n_cut: int, n_max: int):
        super().__init__(f"insufficient coefficients: need a(n) up to n_cut={n_cut}, table has n_max={n_max}")
        self.n_cut = n_cut
        self.n_max = n_max


@dataclass(frozen=True)
class TwistCentralValue:
    d: int
    L_half: float
    vanished: bool
    statistic: float
    terms_used: int
    eps_d: int = 1


def afe_kernel(x: float) -> float:
    if x <= 0:
        raise ValueError("afe_kernel needs x > 0")
    return math.exp(-x)


def conductor_scale(curve: CurveSpec, d: int) -> float:
    return math.sqrt(curve.N) * abs(d) / (2 * math.pi)


def required_terms(curve: CurveSpec, d: int, tail_eps: float) -> int:
    Q = conductor_scale(curve, d)
    return math.ceil(Q * math.log(1.0 / tail_eps) + 5.0 * Q)


_SCALED: "weakref.WeakKeyDictionary[CoefficientTable, np.ndarray]" = weakref.WeakKeyDictionary()


def _scaled_an(table: CoefficientTable) -> np.ndarray:
    b = _SCALED.get(table)
    if b is None:
        n = np.arange(table.an.size, dtype=np.float64)
        n[0] = 1.0
        b = table.an / np.sqrt(n)
        b[0] = 0.0
        _SCALED[table] = b
    return b


def ks_statistic(
    d: int,
    L_half: float,
    *,
    X: float | None = None,
    vanish_threshold: float = VANISH_THRESHOLD,
) -> float:
    """(log L + 1/2 log log |d|) / sqrt(log log |d|), or -inf for a vanishing value.

    Passing ``X`` normalises with log log X instead of log log |d|.
    """
    if abs(d) < 20:
        raise ValueError("statistic needs |d| >= 20 so that log log |d| > 0")
    if L_half < vanish_threshold:
        return NEG_INFINITY
    ll = math.log(math.log(X if X is not None else abs(d)))
    return (math.log(L_half) + 0.5 * ll) / math.sqrt(ll)


def central_value(
    curve: CurveSpec,
    table: CoefficientTable,
    d: int,
    tail_eps: float = 1e-12,
    *,
    vanish_threshold: float = VANISH_THRESHOLD,
    n_cut: int | None = None,
    X: float | None = None,
) -> TwistCentralValue:
    """L(1/2, E_d) by the smoothed approximate functional equation.

    ``d = 1`` gives L(1/2, E) itself. ``n_cut`` overrides the truncation
    derived from ``tail_eps``.
    """
    eps = curve.eps_E if d == 1 else root_number(curve, d)
    if n_cut is None:
        n_cut = required_terms(curve, d, tail_eps)
    if eps == -1:
        stat = NEG_INFINITY if abs(d) >= 20 else math.nan
        return TwistCentralValue(d, 0.0, True, stat, 0, eps)
    if n_cut > table.n_max:
        raise InsufficientCoefficientsError(n_cut, table.n_max)
    Q = conductor_scale(curve, d)
    s = float(_kernels.central_sum(_scaled_an(table), chi_table(d), Q, n_cut))
    L_half = 2.0 * s
    vanished = abs(L_half) < vanish_threshold
    if abs(d) >= 20:
        stat = ks_statistic(d, L_half, X=X, vanish_threshold=vanish_threshold)
    else:
        stat = math.nan
    return TwistCentralValue(d, L_half, vanished, stat, n_cut, eps)
