"""Experiment drivers behind the CLI: sweep, density, moments, report."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cache import load_or_build
from .central import central_value, required_terms
from .characters import DiscriminantRecord, admissible_classes, enumerate_window
from .config import ConfigError, ExperimentConfig, x_from_policy
from .curve import CoefficientTable, CurveSpec
from .explicit import (
    FEJER,
    INDICATOR,
    PHI,
    character_values,
    predicted_density_main_term,
    required_prime_bound,
    weighted_moments,
    window_weights,
    zero_weights_batch,
)
from .primesums import MomentReport, loglog, moments_from_values, prime_sums_batch
from .records import SweepRecord, read_csv, write_csv
from .reports import (
    DistributionReport,
    ReportWriter,
    ProportionCheck,
    distribution_report,
    histogram,
    proportion_check,
)

log = logging.getLogger(__name__)

NEGATIVE_TOL = 1e-8


class CoverageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------


def sweep_window(config: ExperimentConfig) -> tuple[float, float]:
    return config.X, 2.0 * config.X


def sweep_coverage(config: ExperimentConfig) -> tuple[int, int]:
    """(n_max, p_max) needed by a sweep: AFE terms at the largest |d|, primes for P and the zero weight."""
    curve = config.curve_spec
    n_max = required_terms(curve, int(sweep_window(config)[1]), config.tail_eps)
    p_max = max(config.x, required_prime_bound(config.L, FEJER))
    return n_max, int(math.ceil(p_max))


def family_coverage(config: ExperimentConfig) -> int:
    """p_max needed by density and moment experiments (no central values)."""
    return int(math.ceil(max(config.x, required_prime_bound(config.L, FEJER))))


def check_coverage(table: CoefficientTable, n_max: int, p_max: int) -> None:
    problems = []
    if table.n_max < n_max:
        problems.append(f"a(n) up to n={n_max} (table has {table.n_max})")
    if table.p_max < p_max:
        problems.append(f"primes up to p={p_max} (table has {table.p_max})")
    if problems:
        raise CoverageError("coefficient table too small: need " + "; ".join(problems) + ". Rebuild with `coeffs`.")


def load_table(config: ExperimentConfig, n_max: int, p_max: int) -> CoefficientTable:
    return load_or_build(config.curve_spec, config.cache_path or None, n_max, p_max)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    records: list[SweepRecord]
    distribution: DistributionReport | None
    check: ProportionCheck | None
    x: float
    L: float
    smallest_nonzero: float
    negative_count: int
    mean_L_half: float
    diagnostics: dict = field(default_factory=dict)


def _chunks(seq: Sequence, n: int) -> list[Sequence]:
    size = max(1, math.ceil(len(seq) / n))
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def compute_records(
    config: ExperimentConfig, table: CoefficientTable, family: Sequence[DiscriminantRecord]
) -> list[SweepRecord]:
    """One record per discriminant, ordered as ``family`` whatever the thread count."""
    curve = config.curve_spec
    ds = [r.d for r in family]
    if not ds:
        return []
    x, L = config.x, config.L
    P = prime_sums_batch(curve, table, ds, x)
    Z = zero_weights_batch(curve, table, ds, [L], FEJER, bad_prime_mode=config.bad_prime_mode)[0]
    scale = config.X if config.normalization == "per_X" else None

    def work(chunk):
        return [
            central_value(curve, table, d, config.tail_eps, vanish_threshold=config.vanish_threshold, X=scale)
            for d in chunk
        ]

    threads = config.resolved_threads
    if threads == 1:
        values = work(ds)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = [v for part in pool.map(work, _chunks(ds, 4 * threads)) for v in part]
    out = []
    for rec, v, p, z in zip(family, values, P.tolist(), Z.tolist()):
        out.append(SweepRecord(rec.d, rec.kappa, rec.residue_a, rec.eps_d, v.L_half, v.vanished, v.statistic, p, z))
    return out


def run_sweep(config: ExperimentConfig, table: CoefficientTable | None = None, *, write: bool = True) -> SweepResult:
    curve = config.curve_spec
    lo, hi = sweep_window(config)
    family = enumerate_window(curve, lo, hi, lower_open=True)
    n_need, p_need = sweep_coverage(config)
    if table is None:
        table = load_table(config, n_need, p_need)
    check_coverage(table, n_need, p_need)
    if not family:
        warnings.warn(f"empty admissible family for X={config.X:g}", stacklevel=2)
    records = compute_records(config, table, family)

    L_vals = np.array([r.L_half for r in records])
    negative = int(np.count_nonzero(L_vals < -NEGATIVE_TOL))
    if negative:
        frac = negative / len(records)
        msg = f"{negative} central values below -{NEGATIVE_TOL:g} ({100 * frac:.2f}% of the family)"
        if frac > 0.01:
            msg += "; this points at a wrong root number or character"
        warnings.warn(msg, stacklevel=2)
    # a vanished value should carry a double zero, so a weight below 1.8 deserves a look
    review = [r.d for r in records if r.vanished and 0.5 <= r.zero_weight < 1.8]
    if review:
        warnings.warn(f"{len(review)} vanished twists with zero weight in [0.5, 1.8): {review[:10]}", stacklevel=2)
    nonzero = np.abs(L_vals[np.abs(L_vals) >= config.vanish_threshold])
    smallest = float(nonzero.min()) if nonzero.size else math.nan
    mean_L = float(L_vals.mean()) if L_vals.size else math.nan

    dist = distribution_report(records, config.alpha, config.beta) if records else None
    chk = proportion_check(dist) if dist else None
    result = SweepResult(
        records,
        dist,
        chk,
        config.x,
        config.L,
        smallest,
        negative,
        mean_L,
        {
            "X": config.X,
            "x": config.x,
            "loglog_x": loglog(config.x) if config.x > math.e else math.nan,
            "x_triple_log": triple_log_x(config.X),
            "L": config.L,
            "prime_bound": required_prime_bound(config.L, FEJER),
            "normalization": config.normalization,
            "min_zero_weight": float(min((r.zero_weight for r in records), default=math.nan)),
            "vanished_weight_review": review,
            "mean_L_half_over_logX": mean_L / math.log(config.X),
        },
    )
    if write:
        out = Path(config.output_path)
        write_csv(records, out / "sweep.csv")
        rw = ReportWriter(out, "sweep_report")
        rw.add("config", {"text": config.to_text()})
        rw.add("diagnostics", {**result.diagnostics, "smallest_nonzero_L_half": smallest, "negative_L_half": negative, "mean_L_half": mean_L})
        if dist:
            rw.add("distribution", dist)
            rw.add("proportion_check", chk)
        rw.add("histogram", histogram(r.statistic for r in records))
        rw.flush()
    return result


def triple_log_x(X: float) -> float:
    """The asymptotic choice X^{1/log log log X}, reported for reference (nan when undefined)."""
    try:
        return x_from_policy("triple_log", X)
    except ConfigError:
        return math.nan


def report_from_csv(path: str, alpha: float, beta: float) -> tuple[DistributionReport, ProportionCheck]:
    recs = read_csv(path)
    rep = distribution_report(recs, alpha, beta)
    return rep, proportion_check(rep)


# ---------------------------------------------------------------------------
# density and moments over the smooth window
# ---------------------------------------------------------------------------


@dataclass
class FamilySample:
    X: float
    records: list[DiscriminantRecord]
    ds: np.ndarray
    classes: dict[tuple[int, int], np.ndarray]


def family_sample(curve: CurveSpec, X: float) -> FamilySample:
    lo, hi = X / 2.0, 2.5 * X
    recs = enumerate_window(curve, lo, hi)
    ds = np.array([r.d for r in recs], dtype=np.int64)
    classes = {}
    kap = np.array([r.kappa for r in recs])
    res = np.array([r.residue_a for r in recs])
    for c in admissible_classes(curve):
        classes[(c.kappa, c.a_mod_N0)] = np.flatnonzero((kap == c.kappa) & (res == c.a_mod_N0))
    return FamilySample(X, recs, ds, classes)


@dataclass
class DensityResult:
    X: float
    L: float
    ell: int
    pooled: float
    pooled_ratio_to_ell1: float
    predicted: float | None
    pooled_ratio_to_prediction: float | None
    per_class: dict[str, float]


def run_density(
    config: ExperimentConfig,
    table: CoefficientTable | None = None,
    *,
    sample: FamilySample | None = None,
    write: bool = True,
) -> list[DensityResult]:
    """Phi-weighted zero-weight sums twisted by chi_d(ell), per class and pooled."""
    curve = config.curve_spec
    p_need = family_coverage(config)
    if table is None:
        table = load_table(config, min(p_need, 10**6), p_need)
    check_coverage(table, 1, p_need)
    sample = sample or family_sample(curve, config.X)
    if sample.ds.size == 0:
        raise ValueError("empty family sample")
    L = config.L
    Z = zero_weights_batch(curve, table, sample.ds, [L], FEJER, bad_prime_mode=config.bad_prime_mode)[0]
    Phi = PHI if config.window == "smooth" else INDICATOR
    phi = window_weights(sample.ds, config.X, Phi)
    n_cls = len(sample.classes)
    base = None
    out = []
    ells = list(config.ells)
    if 1 not in ells:
        ells.insert(0, 1)
    for ell in ells:
        if ell < 1 or math.gcd(ell, curve.N0) != 1:
            raise ValueError(f"ell={ell} must be a positive integer coprime to N0={curve.N0}")
        chi = character_values(sample.ds, ell)
        terms = Z * chi * phi
        pooled = math.fsum(terms)
        if ell == 1:
            base = pooled
        r = math.isqrt(ell)
        pred = predicted_density_main_term(curve, config.X, L, FEJER, Phi, ell) if r * r == ell else None
        per_class = {f"{k}:{a}": math.fsum(terms[idx]) for (k, a), idx in sample.classes.items()}
        out.append(
            DensityResult(
                config.X,
                L,
                ell,
                pooled,
                pooled / base,
                pred,
                pooled / (n_cls * pred) if pred else None,
                per_class,
            )
        )
    if write:
        rw = ReportWriter(config.output_path, "density_report")
        rw.add("parameters", {"X": config.X, "L": L, "prime_bound": required_prime_bound(L, FEJER), "classes": n_cls, "sample": int(sample.ds.size)})
        for r in out:
            rw.add("density", r)
        rw.flush()
    return out


@dataclass
class MomentsResult:
    pooled: MomentReport
    weighted: MomentReport
    per_class: dict[str, MomentReport]


def run_moments(
    config: ExperimentConfig,
    table: CoefficientTable | None = None,
    *,
    sample: FamilySample | None = None,
    write: bool = True,
) -> MomentsResult:
    curve = config.curve_spec
    p_need = family_coverage(config)
    if table is None:
        table = load_table(config, min(p_need, 10**6), p_need)
    check_coverage(table, 1, p_need)
    sample = sample or family_sample(curve, config.X)
    if sample.ds.size == 0:
        raise ValueError("empty family sample")
    x = config.x
    Phi = PHI if config.window == "smooth" else INDICATOR
    P = prime_sums_batch(curve, table, sample.ds, x)
    w = window_weights(sample.ds, config.X, Phi)
    pooled = moments_from_values(P, w, config.X, x, config.k_max, "pooled")
    per_class = {
        f"{k}:{a}": moments_from_values(P[idx], w[idx], config.X, x, config.k_max, f"{k}:{a}")
        for (k, a), idx in sample.classes.items()
        if idx.size
    }
    Z = zero_weights_batch(curve, table, sample.ds, [config.L], FEJER, bad_prime_mode=config.bad_prime_mode)[0]
    weighted = weighted_moments(
        curve, table, sample.ds, config.X, x, config.k_max, config.L, FEJER, Phi, weights=Z, label="zero-weighted"
    )
    res = MomentsResult(pooled, weighted, per_class)
    if write:
        rw = ReportWriter(config.output_path, "moments_report")
        rw.add("parameters", {"X": config.X, "x": x, "loglog_x": loglog(x) if x > math.e else math.nan, "x_triple_log": triple_log_x(config.X), "loglog_X": loglog(config.X)})
        rw.add("moments", pooled)
        rw.add("weighted_moments", weighted)
        for m in per_class.values():
            rw.add("class_moments", m)
        rw.flush()
    return res


__all__ = [
    "CoverageError",
    "SweepResult",
    "run_sweep",
    "run_density",
    "run_moments",
    "report_from_csv",
    "family_sample",
    "sweep_coverage",
    "family_coverage",
]
