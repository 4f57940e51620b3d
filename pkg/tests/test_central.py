import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from oracles import naive_count
from twistlab.central import (
    NEG_INFINITY,
    InsufficientCoefficientsError,
    afe_kernel,
    central_value,
    ks_statistic,
    required_terms,
)
from twistlab.characters import enumerate_window, kronecker
from twistlab.curve import build_coefficients

L_E_1 = 0.25384186085591068  # L(11a1, 1)


def oracle_coefficients(curve, n_max):
    """a(n) from naive point counts and the Euler product, in pure Python."""
    ap = {}
    for p in range(2, n_max + 1):
        if all(p % q for q in range(2, math.isqrt(p) + 1)):
            n_pts = naive_count(curve, p)
            ap[p] = mp.mpf(p - n_pts if curve.N % p == 0 else p + 1 - n_pts) / mp.sqrt(p)
    a = [mp.mpf(0)] * (n_max + 1)
    a[1] = mp.mpf(1)
    for n in range(2, n_max + 1):
        m, p = n, next(q for q in ap if n % q == 0)
        k = 0
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            a[n] = a[m] * a[p**k]
        elif k == 1:
            a[n] = ap[p]
        elif curve.N % p == 0:
            a[n] = ap[p] * a[p ** (k - 1)]
        else:
            a[n] = ap[p] * a[p ** (k - 1)] - a[p ** (k - 2)]
    return a


def oracle_central_value(curve, d, n_terms):
    mp.mp.dps = 30
    a = oracle_coefficients(curve, n_terms)
    Q = mp.sqrt(curve.N) * abs(d) / (2 * mp.pi)
    s = mp.fsum(a[n] * kronecker(d, n) / mp.sqrt(n) * mp.exp(-n / Q) for n in range(1, n_terms + 1))
    return float(2 * s)


def test_afe_kernel():
    assert afe_kernel(math.log(2)) == pytest.approx(0.5, abs=1e-15)
    assert afe_kernel(1e-12) == pytest.approx(1.0)
    # Mellin transform at u = 2 is Gamma(2) = 1
    val, _ = integrate.quad(lambda x: afe_kernel(x) * x, 0, np.inf)
    assert val == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        afe_kernel(0.0)


def test_untwisted_value(curve, small_table):
    v = central_value(curve, small_table, 1)
    assert v.L_half == pytest.approx(L_E_1, abs=1e-14)
    assert not v.vanished and math.isnan(v.statistic)


def test_small_twists_against_high_precision_oracle(curve, small_table):
    ds = [r.d for r in enumerate_window(curve, 2, 40)][:4]
    assert ds
    for d in ds:
        n = required_terms(curve, d, 1e-12)
        got = central_value(curve, small_table, d, 1e-12)
        assert got.L_half == pytest.approx(oracle_central_value(curve, d, n), abs=1e-12)


def test_smallest_admissible_tail_eps_consistency(curve, table):
    d = enumerate_window(curve, 2, 100)[0].d
    a = central_value(curve, table, d, 1e-12).L_half
    b = central_value(curve, table, d, 1e-8).L_half
    assert abs(a - b) < 1e-8


def test_odd_sign_is_exact_zero(curve, table):
    d = next(r.d for r in enumerate_window(curve, 20, 200, admissible_only=False) if r.eps_d == -1)
    v = central_value(curve, table, d)
    assert v.L_half == 0.0 and v.vanished and v.statistic == NEG_INFINITY and v.terms_used == 0


def test_insufficient_coefficients(curve, small_table):
    d = enumerate_window(curve, 3000, 4000)[0].d
    with pytest.raises(InsufficientCoefficientsError) as exc:
        central_value(curve, small_table, d)
    assert exc.value.n_cut == required_terms(curve, d, 1e-12)
    assert str(exc.value.n_cut) in str(exc.value)


def test_ks_statistic():
    assert ks_statistic(10**4, 0.0) == NEG_INFINITY
    d = 5000
    assert ks_statistic(d, math.log(d) ** -0.5) == pytest.approx(0.0, abs=1e-15)
    ll = math.log(math.log(1e4))
    assert ks_statistic(10**4, 1.0) == pytest.approx(0.5 * math.sqrt(ll))
    # log log 10^4 = 2.2203...
    assert ks_statistic(10**4, 1.0) == pytest.approx(0.5 * math.sqrt(2.2203), abs=1e-4)
    assert ks_statistic(-30, 2.0, X=1e4) == pytest.approx((math.log(2) + 0.5 * ll) / math.sqrt(ll))
    with pytest.raises(ValueError):
        ks_statistic(19, 1.0)


@pytest.fixture(scope="module")
def sample_ds(curve):
    recs = enumerate_window(curve, 20, 1e4)
    rng = np.random.default_rng(2024)
    return sorted(rng.choice([r.d for r in recs], size=100, replace=False).tolist(), key=abs)


def test_truncation_independence(curve, table, sample_ds):
    for d in sample_ds:
        n = required_terms(curve, d, 1e-12)
        a = central_value(curve, table, d, 1e-12).L_half
        b = central_value(curve, table, d, n_cut=2 * n).L_half
        assert abs(a - b) < 1e-11, d


def test_vanishing_set_stable(curve, table, sample_ds):
    ds = [r.d for r in enumerate_window(curve, 20, 3000)]
    v10 = {d for d in ds if central_value(curve, table, d, 1e-10).vanished}
    v12 = {d for d in ds if central_value(curve, table, d, 1e-12).vanished}
    assert v10 == v12 and v10


def test_statistic_consistent_with_value(curve, table, sample_ds):
    for d in sample_ds[:20]:
        v = central_value(curve, table, d)
        if v.vanished:
            assert v.statistic == NEG_INFINITY
        else:
            ll = math.log(math.log(abs(d)))
            assert v.statistic == pytest.approx((math.log(v.L_half) + 0.5 * ll) / math.sqrt(ll))


def test_numpy_summation_path_agrees(curve, table, sample_ds):
    from twistlab import _kernels
    from twistlab.central import _scaled_an, conductor_scale
    from twistlab.characters import chi_table

    b = _scaled_an(table)
    for d in sample_ds[:10]:
        n = required_terms(curve, d, 1e-12)
        Q = conductor_scale(curve, d)
        t = chi_table(d)
        assert _kernels._central_sum_loop(b, t, Q, n) == pytest.approx(_kernels._central_sum_numpy(b, t, Q, n), abs=1e-13)


def test_first_moment_sanity(curve, table):
    ds = [r.d for r in enumerate_window(curve, 2000, 4000, lower_open=True)]
    mean = np.mean([central_value(curve, table, d).L_half for d in ds])
    assert 0 < mean < 3 * math.log(2000)


def test_tiny_table_rejected(curve):
    t = build_coefficients(curve, 200)
    d = enumerate_window(curve, 100, 300)[0].d
    with pytest.raises(InsufficientCoefficientsError):
        central_value(curve, t, d)
