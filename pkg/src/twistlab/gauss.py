"""Quadratic Gauss sums tau_v(m) and their normalised companions G_v(m).

    tau_v(m) = sum_{b mod m} (b / m) e(v b / m)           (m odd, Jacobi symbol)
    G_v(m)   = ((1 - i)/2 + (-1/m)(1 + i)/2) tau_v(m)

G_v is multiplicative in m and has a closed form on prime powers, which is
what :func:`gauss_sum_G` evaluates; direct summation is kept as the
reference route.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .arith import euler_phi, factorize
from .characters import kronecker


def _check_modulus(m: int) -> None:
    if m < 1 or m % 2 == 0:
        raise ValueError(f"Gauss sums are only supported for odd m >= 1, got {m}")


def jacobi_table(m: int) -> np.ndarray:
    """(b / m) for b = 0 .. m-1, m odd."""
    _check_modulus(m)
    factors = [p for p, e in factorize(m).items() for _ in range(e)] if m > 1 else []
    return np.asarray(_kernels.residue_table(m, np.array(factors, dtype=np.int64)), dtype=np.int8)


def _prefactor(m: int) -> complex:
    # (1+i)/2 + (-1/m)(1-i)/2 : tau = prefactor * G
    return 1.0 if kronecker(-1, m) == 1 else 1j


def tau_zero(m: int) -> int:
    """tau_0(m) in exact integer arithmetic."""
    return int(jacobi_table(m).sum(dtype=np.int64))


def gauss_sum_tau(v: int, m: int, method: str = "direct") -> complex:
    _check_modulus(m)
    if method == "direct":
        chi = jacobi_table(m).astype(np.float64)
        b = np.arange(m, dtype=np.int64)
        phase = 2.0 * np.pi * ((v * b) % m) / m
        return complex(np.sum(chi * np.cos(phase)), np.sum(chi * np.sin(phase)))
    if method == "closed":
        return _prefactor(m) * gauss_sum_G(v, m)
    raise ValueError(f"unknown method {method!r}")


def _G_prime_power(v: int, p: int, alpha: int) -> complex:
    if v == 0:
        beta = math.inf
    else:
        beta = 0
        w = v
        while w % p == 0:
            w //= p
            beta += 1
    if alpha <= beta:
        return float(euler_phi(p**alpha)) if alpha % 2 == 0 else 0.0
    if alpha == beta + 1:
        if alpha % 2 == 0:
            return -float(p**beta)
        return kronecker(v // p**beta, p) * float(p**beta) * math.sqrt(p)
    return 0.0


def gauss_sum_G(v: int, m: int, method: str = "closed") -> complex:
    _check_modulus(m)
    if method == "direct":
        pref = (1 - 1j) / 2 + kronecker(-1, m) * (1 + 1j) / 2
        return pref * gauss_sum_tau(v, m, "direct")
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    out: complex = 1.0
    for p, alpha in (factorize(m).items() if m > 1 else ()):
        out *= _G_prime_power(v, p, alpha)
        if out == 0:
            break
    return complex(out)


def relation_residual(v: int, m: int) -> float:
    """|tau_v(m) - ((1+i)/2 + (-1/m)(1-i)/2) G_v(m)|, tau summed directly, G in closed form."""
    tau = gauss_sum_tau(v, m, "direct")
    G = gauss_sum_G(v, m, "closed")
    eps = kronecker(-1, m)
    return abs(tau - ((1 + 1j) / 2 + eps * (1 - 1j) / 2) * G)
