"""Time each hot kernel in its compiled-loop form and its numpy form.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

With numba disabled (TWISTLAB_NO_NUMBA=1) the loop forms run as plain
Python, so only use small scales in that mode.
"""

from __future__ import annotations

import argparse
import timeit
from dataclasses import dataclass
from typing import Callable

import numpy as np

from twistlab import _kernels
from twistlab._accel import BACKEND, USE_NUMBA
from twistlab.arith import primes_up_to
from twistlab.curve import CURVE_11A1, build_coefficients


@dataclass
class Case:
    name: str
    loop: Callable[[], object]
    vectorised: Callable[[], object]


def make_cases(scale: float) -> list[Case]:
    n = int(200_000 * scale)
    table = build_coefficients(CURVE_11A1, n)
    lam = np.zeros(n + 1)
    bad = np.zeros(n + 1, dtype=np.bool_)
    lam[table.primes] = table.lam
    bad[table.primes] = table.bad_mask

    b = table.an / np.sqrt(np.maximum(np.arange(n + 1), 1))
    chi = _kernels._residue_table_numpy(10007, np.array([10007]))

    rng = np.random.default_rng(0)
    ds = rng.integers(-20_000, 20_000, size=int(2000 * scale)) * 2 + 1
    primes = primes_up_to(int(20_000 * scale)).astype(np.int64)
    A = rng.normal(size=(1, primes.size))
    B = np.zeros_like(A)

    b2, b4, b6, _ = CURVE_11A1.b_invariants
    p = 1_000_003
    pts = (b2 % p, 2 * b4 % p, b6 % p, p)

    factors = np.array([3, 5, 7, 11, 13, 17], dtype=np.int64)
    m = int(np.prod(factors))

    return [
        Case(f"hecke_fill n={n}", lambda: _kernels._hecke_fill_loop(n, lam, bad), lambda: _kernels._hecke_fill_numpy(n, lam, bad)),
        Case(
            f"central_sum n={n}",
            lambda: _kernels._central_sum_loop(b, chi, n / 10.0, n),
            lambda: _kernels._central_sum_numpy(b, chi, n / 10.0, n),
        ),
        Case(
            f"prime_char_sums {ds.size}x{primes.size}",
            lambda: _kernels._prime_char_sums_loop(ds, primes, A, B),
            lambda: _kernels._prime_char_sums_numpy(ds, primes, A, B),
        ),
        Case(f"count_points p={p}", lambda: _kernels._count_points_loop(*pts), lambda: _kernels._count_points_numpy(*pts)),
        Case(f"residue_table m={m}", lambda: _kernels._residue_table_loop(m, factors), lambda: _kernels._residue_table_numpy(m, factors)),
    ]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies every problem size")
    args = ap.parse_args()

    print(f"backend={BACKEND} loop kernels {'compiled' if USE_NUMBA else 'interpreted'}")
    print(f"{'kernel':<34}{'loop [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for case in make_cases(args.scale):
        case.loop()  # compile / warm up
        t_loop = min(timeit.repeat(case.loop, number=1, repeat=args.repeat)) * 1e3
        t_np = min(timeit.repeat(case.vectorised, number=1, repeat=args.repeat)) * 1e3
        print(f"{case.name:<34}{t_loop:>12.2f}{t_np:>12.2f}{t_np / t_loop:>9.1f}x")


if __name__ == "__main__":
    main()
