"""Zero weights sum_gamma h(gamma_d L / 2pi) from the explicit formula.

For an even test function h with compactly supported transform,

    sum_gamma h(gamma_d L/2pi) =
        (1/L) [ hhat(0) log(N d^2 / 4pi^2) + int h(u) 2 Re psi(1 + 2pi i u/L) du ]
      - (1/L) sum_n Lambda_E(n) chi_d(n) n^{-1/2} (hhat(log n/L) + hhat(-log n/L)),

where Lambda_E(p^k) = (alpha_p^k + conj(alpha_p)^k) log p at good primes and
lambda(p)^k log p at primes dividing N.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import _kernels
from .arith import factorize, primes_up_to
from .characters import kronecker
from .curve import CoefficientTable, CurveSpec, TableRangeError
from .primesums import MomentReport, moments_from_values, prime_sums_batch

BAD_PRIME_MODES = ("euler", "exclude")


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# test functions and windows
# ---------------------------------------------------------------------------


def fejer(x):
    """(sin(pi x) / (pi x))^2, equal to 1 at x = 0."""
    return np.sinc(x) ** 2 if np.ndim(x) else float(np.sinc(x) ** 2)


def fejer_hat(t):
    """max(1 - |t|, 0)."""
    v = np.maximum(1.0 - np.abs(t), 0.0)
    return v if np.ndim(t) else float(v)


@dataclass(frozen=True)
class TestFunction:
    """Even test function h with transform supported in [-hat_support, hat_support].

    ``decay_constant`` is a C with |h(x)| <= C / (1 + x^2).
    """

    __test__ = False  # not a pytest class

    name: str
    eval_h: Callable
    eval_h_hat: Callable
    hat_support: float
    decay_constant: float

    @property
    def h0(self) -> float:
        return float(self.eval_h(0.0))

    @property
    def hat0(self) -> float:
        return float(self.eval_h_hat(0.0))


FEJER = TestFunction("fejer", fejer, fejer_hat, 1.0, 2.0)


def smoothstep(t):
    """0 for t <= 0, 1 for t >= 1, e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) between."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    # ratio form avoids underflow of both exponentials near the ends
    out[mid] = 1.0 / (1.0 + np.exp(np.minimum(1.0 / tm - 1.0 / (1.0 - tm), 700.0)))
    return out


def bump_window(x):
    """Smooth window: 0 outside [1/2, 5/2], 1 on [1, 2]."""
    x = np.asarray(x, dtype=np.float64)
    v = smoothstep(2.0 * (x - 0.5)) * smoothstep(2.0 * (2.5 - x))
    return v if v.ndim else float(v)


@dataclass(frozen=True)
class SmoothWindow:
    name: str
    eval_Phi: Callable
    mass: float
    support: tuple[float, float]

    def mellin(self, s: float) -> float:
        """int_0^inf Phi(x) x^s dx."""
        a, b = self.support
        val, _ = integrate.quad(lambda x: float(self.eval_Phi(x)) * x**s, a, b, points=[1.0, 2.0], epsabs=1e-13, epsrel=1e-13, limit=200)
        return val


PHI = SmoothWindow("bump", bump_window, 1.5, (0.5, 2.5))


def indicator_window(x):
    x = np.asarray(x, dtype=np.float64)
    v = ((x >= 1.0) & (x <= 2.0)).astype(np.float64)
    return v if v.ndim else float(v)


INDICATOR = SmoothWindow("indicator", indicator_window, 1.0, (1.0, 2.0))


def window_weights(ds: Sequence[int], X: float, window: str | SmoothWindow = "smooth") -> np.ndarray:
    """Phi(|d| / X) for each d."""
    if isinstance(window, str):
        window = {"smooth": PHI, "bump": PHI, "indicator": INDICATOR}[window]
    return np.asarray(window.eval_Phi(np.abs(np.asarray(ds, dtype=np.float64)) / X), dtype=np.float64).reshape(-1)


# ---------------------------------------------------------------------------
# digamma on the line Re = 1
# ---------------------------------------------------------------------------

# B_{2k} / (2k) for k = 1..7
_STIRLING = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132, -691 / 32760, 1 / 12)
_SHIFT = 10


def digamma_re(t):
    """Re psi(1 + i t), accurate to ~1e-15 for all real t."""
    t = np.asarray(t, dtype=np.float64)
    z = 1.0 + 1j * t
    acc = np.zeros_like(z)
    for j in range(_SHIFT):
        acc += 1.0 / (z + j)
    w = z + _SHIFT
    w2 = 1.0 / (w * w)
    series = np.zeros_like(z)
    for c in reversed(_STIRLING):
        series = series * w2 + c
    psi = np.log(w) - 0.5 / w - series * w2 - acc
    out = psi.real
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# archimedean term
# ---------------------------------------------------------------------------

_GL16 = np.polynomial.legendre.leggauss(16)
TAIL_T = 64.0


def _panel_integral(f: Callable, a: float, b: float, panels: int) -> float:
    x0, w0 = _GL16
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    nodes = (mid + half * x0[None, :]).ravel()
    weights = (half * w0[None, :]).ravel()
    return math.fsum(weights * f(nodes))


def _quad(f, a, b, **kw):
    val, err = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=500, full_output=1, **kw)[:2]
    if err > 1e-10:
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: estimate {val!r}, error {err:.3g}")
    return val


@functools.lru_cache(maxsize=256)
def digamma_integral(L: float, h: TestFunction = FEJER, refine: int = 1) -> float:
    """int_R h(u) 2 Re psi(1 + 2 pi i u / L) du.

    [0, T] uses 16-point Gauss-Legendre on panels of width min(1, L/4)/refine. For the
    Fejer kernel the tail is split as (1 - cos 2 pi u) / (2 pi^2 u^2) and
    integrated with a Fourier-weighted rule. Other kernels get fixed panels
    up to 16T and adaptive quadrature beyond.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    c = 2.0 * math.pi / L

    def g(u):
        return 2.0 * digamma_re(c * u)

    # psi(1 + i c u) varies on the scale 1/c, so small L needs finer panels
    per_unit = refine * max(1, math.ceil(4.0 / L))
    head = _panel_integral(lambda u: h.eval_h(u) * g(u), 0.0, TAIL_T, int(TAIL_T) * per_unit)
    if h.name == "fejer":
        k = 1.0 / (2.0 * math.pi**2)
        # int_T^inf g(u) / u^2 du with u = T/s
        smooth = _quad(lambda s: g(TAIL_T / s) / TAIL_T if s > 0 else 0.0, 0.0, 1.0)
        osc = _quad(lambda u: g(u) / (u * u), TAIL_T, np.inf, weight="cos", wvar=2.0 * math.pi)
        tail = k * (smooth - osc)
    else:
        far = 16.0 * TAIL_T
        tail = _panel_integral(lambda u: h.eval_h(u) * g(u), TAIL_T, far, int(far - TAIL_T) * refine)
        tail += _quad(lambda u: h.eval_h(u) * g(u), far, np.inf)
    return 2.0 * (head + tail)


def archimedean_term(
    curve: CurveSpec,
    d: int,
    L: float,
    h: TestFunction = FEJER,
    *,
    include_digamma: bool = True,
    refine: int = 1,
) -> float:
    """(1/L) [hhat(0) log(N d^2 / 4 pi^2) + int h(u) 2 Re psi(1 + 2 pi i u / L) du]."""
    if L < 1:
        raise ValueError("L must be >= 1")
    val = h.hat0 * math.log(curve.N * d * d / (4.0 * math.pi**2))
    if include_digamma:
        val += digamma_integral(float(L), h, refine)
    return val / L


# ---------------------------------------------------------------------------
# prime side
# ---------------------------------------------------------------------------


def required_prime_bound(L: float, h: TestFunction = FEJER) -> float:
    return math.exp(L * h.hat_support)


def _check_coverage(table: CoefficientTable, bound: float) -> None:
    if bound > table.p_max:
        raise TableRangeError(f"insufficient table: prime side needs p_max >= {math.floor(bound)}, table has {table.p_max}")


def prime_power_weights(
    curve: CurveSpec,
    table: CoefficientTable,
    Ls: Sequence[float],
    h: TestFunction = FEJER,
    bad_prime_mode: str = "euler",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Primes and coefficient rows (A, B) so the prime side at Ls[w] is

        sum_p A[w, p] chi_d(p) + B[w, p] chi_d(p)^2,

    A collecting odd prime powers and B even ones.
    """
    if bad_prime_mode not in BAD_PRIME_MODES:
        raise ValueError(f"bad_prime_mode must be one of {BAD_PRIME_MODES}")
    Ls = [float(L) for L in Ls]
    bound = max(required_prime_bound(L, h) for L in Ls)
    _check_coverage(table, bound)
    sl = table.primes_upto(min(bound, table.p_max))
    primes = table.primes[sl].astype(np.int64)
    lam = table.lam[sl]
    bad = table.bad_mask[sl]
    keep = np.ones(primes.size, dtype=bool)
    if bad_prime_mode == "exclude":
        keep = (curve.N0 % primes) != 0
    logp = np.log(primes.astype(np.float64))
    theta = np.arccos(np.clip(lam / 2.0, -1.0, 1.0))
    A = np.zeros((len(Ls), primes.size))
    B = np.zeros((len(Ls), primes.size))
    kmax = int(max(L * h.hat_support for L in Ls) / math.log(2)) + 1
    for k in range(1, kmax + 1):
        coef_k = np.where(bad, lam**k, 2.0 * np.cos(k * theta)) * logp * np.exp(-0.5 * k * logp)
        for w, L in enumerate(Ls):
            t = k * logp / L
            active = keep & (t <= h.hat_support)
            if not active.any():
                continue
            hh = np.asarray(h.eval_h_hat(t)) + np.asarray(h.eval_h_hat(-t))
            row = np.where(active, coef_k * hh / L, 0.0)
            if k % 2:
                A[w] += row
            else:
                B[w] += row
    return primes, A, B


def prime_side(
    curve: CurveSpec,
    table: CoefficientTable,
    d: int,
    L: float,
    h: TestFunction = FEJER,
    *,
    bad_prime_mode: str = "euler",
    reverse: bool = False,
) -> float:
    """(1/L) sum_n Lambda_E(n) chi_d(n) n^{-1/2} (hhat(log n/L) + hhat(-log n/L)), n <= e^{L * support}.

    ``reverse`` sums primes in decreasing order, for order-independence checks.
    """
    primes, A, B = prime_power_weights(curve, table, [L], h, bad_prime_mode)
    order = range(primes.size - 1, -1, -1) if reverse else range(primes.size)
    s = 0.0
    for j in order:
        c = kronecker(d, int(primes[j]))
        if c:
            s += A[0, j] * c + B[0, j]
    return float(s)


@dataclass(frozen=True)
class ZeroWeight:
    d: int
    L_param: float
    weight: float
    archimedean: float
    prime_side: float


def zero_weight(
    curve: CurveSpec,
    table: CoefficientTable,
    d: int,
    L: float,
    h: TestFunction = FEJER,
    *,
    bad_prime_mode: str = "euler",
    refine: int = 1,
) -> ZeroWeight:
    arch = archimedean_term(curve, d, L, h, refine=refine)
    ps = prime_side(curve, table, d, L, h, bad_prime_mode=bad_prime_mode)
    return ZeroWeight(d, float(L), float(arch - ps), float(arch), float(ps))


def zero_weights_batch(
    curve: CurveSpec,
    table: CoefficientTable,
    ds: Sequence[int],
    Ls: Sequence[float],
    h: TestFunction = FEJER,
    *,
    bad_prime_mode: str = "euler",
    refine: int = 1,
) -> np.ndarray:
    """Zero weights as an array of shape (len(Ls), len(ds))."""
    ds_arr = np.asarray(ds, dtype=np.int64)
    Ls = [float(L) for L in Ls]
    if ds_arr.size == 0:
        return np.zeros((len(Ls), 0))
    primes, A, B = prime_power_weights(curve, table, Ls, h, bad_prime_mode)
    ps = _kernels.prime_char_sums(ds_arr, primes, np.ascontiguousarray(A), np.ascontiguousarray(B))
    logc = np.log(curve.N * ds_arr.astype(np.float64) ** 2 / (4.0 * math.pi**2))
    arch = np.array([(h.hat0 * logc + digamma_integral(L, h, refine)) / L for L in Ls])
    return arch - ps


_GL_REPULSION = np.polynomial.legendre.leggauss(16)


def repulsion_nodes(x: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes in [log x, 2 log x] and weights for (1/log x) int f(L) dL."""
    if x <= 1:
        raise ValueError("x must exceed 1")
    lx = math.log(x)
    t, w = _GL_REPULSION
    return lx * (1.5 + 0.5 * t), 0.5 * w


def repulsion_integral(
    curve: CurveSpec,
    table: CoefficientTable,
    ds: int | Sequence[int],
    x: float,
    h: TestFunction = FEJER,
    *,
    bad_prime_mode: str = "euler",
):
    """(1/log x) int_{log x}^{2 log x} zero_weight(d, L) dL by 16-point Gauss-Legendre."""
    scalar = np.ndim(ds) == 0
    nodes, w = repulsion_nodes(x)
    W = zero_weights_batch(curve, table, [ds] if scalar else ds, nodes, h, bad_prime_mode=bad_prime_mode)
    out = w @ W
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# one-level density averages
# ---------------------------------------------------------------------------


def _check_ell(curve: CurveSpec, ell: int) -> None:
    if ell < 1 or math.gcd(ell, curve.N0) != 1:
        raise ValueError(f"ell must be a positive integer coprime to N0={curve.N0}")


def character_values(ds: Sequence[int], ell: int) -> np.ndarray:
    return np.array([kronecker(int(d), ell) for d in ds], dtype=np.float64)


def density_average(
    curve: CurveSpec,
    table: CoefficientTable,
    ds: Sequence[int],
    X: float,
    ell: int,
    L: float,
    h: TestFunction = FEJER,
    Phi: SmoothWindow = PHI,
    *,
    weights: np.ndarray | None = None,
    bad_prime_mode: str = "euler",
) -> float:
    """sum_d weight(d) chi_d(ell) Phi(|d| / X).

    Precomputed zero weights for ``ds`` may be passed as ``weights``.
    """
    _check_ell(curve, ell)
    if len(ds) == 0:
        raise ValueError("empty class sample")
    if weights is None:
        weights = zero_weights_batch(curve, table, ds, [L], h, bad_prime_mode=bad_prime_mode)[0]
    terms = np.asarray(weights) * character_values(ds, ell) * window_weights(ds, X, Phi)
    return math.fsum(terms)


@functools.lru_cache(maxsize=8)
def euler_product_coprime(N0: int, bound: int = 1_000_000) -> float:
    """prod_{p <= bound, p not dividing N0} (1 - p^-2)."""
    p = primes_up_to(bound).astype(np.float64)
    p = p[np.mod(N0, p) != 0]
    return float(np.exp(np.sum(np.log1p(-1.0 / (p * p)))))


def predicted_density_main_term(
    curve: CurveSpec,
    X: float,
    L: float,
    h: TestFunction = FEJER,
    Phi: SmoothWindow = PHI,
    ell_square: int = 1,
) -> float:
    """(X/N0) prod_{p | ell}(1+1/p)^-1 prod_{p not | N0}(1-p^-2) Phihat(0) (2 log X/L hhat(0) + h(0)/2)."""
    r = math.isqrt(ell_square)
    if r * r != ell_square or ell_square < 1:
        raise ValueError("ell_square must be a positive perfect square")
    local = 1.0
    for p in (factorize(ell_square) if ell_square > 1 else {}):
        local /= 1.0 + 1.0 / p
    return (
        X / curve.N0
        * local
        * euler_product_coprime(curve.N0)
        * Phi.mass
        * (2.0 * math.log(X) / L * h.hat0 + h.h0 / 2.0)
    )


def weighted_moments(
    curve: CurveSpec,
    table: CoefficientTable,
    ds: Sequence[int],
    X: float,
    x: float,
    k_max: int,
    L: float,
    h: TestFunction = FEJER,
    Phi: SmoothWindow = PHI,
    *,
    weights: np.ndarray | None = None,
    bad_prime_mode: str = "euler",
    label: str = "",
) -> MomentReport:
    """[sum_d P^k w_d Phi] / [sum_d w_d Phi (log log X)^{k/2}], w_d the zero weight at L."""
    if len(ds) == 0:
        raise ValueError("empty sample")
    if weights is None:
        weights = zero_weights_batch(curve, table, ds, [L], h, bad_prime_mode=bad_prime_mode)[0]
    P = prime_sums_batch(curve, table, ds, x)
    wt = np.asarray(weights) * window_weights(ds, X, Phi)
    return moments_from_values(P, wt, X, x, k_max, label)
