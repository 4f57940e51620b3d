"""Small elementary number theory helpers shared by the other modules."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def prime_sieve(n: int) -> np.ndarray:
    """All primes ``<= n`` as an int64 array."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


@lru_cache(maxsize=8)
def _cached_primes(n: int) -> np.ndarray:
    out = prime_sieve(n)
    out.setflags(write=False)
    return out


def primes_up_to(n: int) -> np.ndarray:
    """Read-only cached variant of :func:`prime_sieve`."""
    return _cached_primes(int(n))


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    if n % 3 == 0:
        return n == 3
    # deterministic Miller-Rabin for 64-bit inputs, trial division below that
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if a % n == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation of ``|n|`` by trial division (n is small here)."""
    n = abs(int(n))
    if n == 0:
        raise ValueError("cannot factorise 0")
    out: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 5
    while f * f <= n:
        for q in (f, f + 2):
            while n % q == 0:
                out[q] = out.get(q, 0) + 1
                n //= q
        f += 6
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in factorize(n).values())


def euler_phi(n: int) -> int:
    out = n
    for p in factorize(n):
        out = out // p * (p - 1)
    return out


def num_divisors(n: int) -> int:
    return math.prod(e + 1 for e in factorize(n).values())


def divisor_count_table(n: int) -> np.ndarray:
    """d(k) for k = 0..n (entry 0 unused)."""
    out = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        out[k::k] += 1
    return out


def prime_power_base(n: int) -> tuple[int, int] | None:
    """Return ``(p, k)`` with ``n = p**k`` (k >= 1), or ``None``."""
    if n < 2:
        return None
    f = factorize(n)
    if len(f) != 1:
        return None
    (p, k), = f.items()
    return p, k


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b
