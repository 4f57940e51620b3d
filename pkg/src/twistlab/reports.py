"""Aggregate reports: statistic distribution, the quarter-proportion check, histograms."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy import stats

from .records import SweepRecord

HIST_EDGES = np.linspace(-4.0, 4.0, 33)


def gaussian_mass(alpha: float, beta: float) -> float:
    """Standard normal probability of (alpha, beta)."""
    if beta < alpha:
        return -gaussian_mass(beta, alpha)
    if alpha > 0:
        # upper tail: difference of survival functions keeps precision
        return float(stats.norm.sf(alpha) - stats.norm.sf(beta))
    return float(stats.norm.cdf(beta) - stats.norm.cdf(alpha))


def ks_distance(values: Sequence[float]) -> float:
    """Kolmogorov distance between the empirical CDF of finite values and N(0, 1)."""
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return math.nan
    return float(stats.kstest(v, "norm").statistic)


@dataclass(frozen=True)
class DistributionReport:
    alpha: float
    beta: float
    counts: int
    family_size: int
    gaussian_mass: float
    quarter_bound: float
    nonvanishing_fraction: float
    ks_distance: float


@dataclass(frozen=True)
class ProportionCheck:
    passed: bool
    margin: float


def distribution_report(records: Sequence[SweepRecord], alpha: float, beta: float) -> DistributionReport:
    """N(X; alpha, beta) = #{d : alpha < statistic(d) < beta} against the Gaussian mass."""
    if len(records) == 0:
        raise ValueError("no records")
    if not alpha < beta:
        raise ValueError("alpha must be < beta")
    st = np.array([r.statistic for r in records], dtype=np.float64)
    counts = int(np.count_nonzero((st > alpha) & (st < beta)))
    mass = gaussian_mass(alpha, beta)
    n = len(records)
    nonvan = sum(1 for r in records if not r.vanished)
    return DistributionReport(alpha, beta, counts, n, mass, 0.25 * mass * n, nonvan / n, ks_distance(st))


def proportion_check(report: DistributionReport) -> ProportionCheck:
    """Pass iff counts >= quarter_bound; margin = counts / quarter_bound."""
    if report.quarter_bound <= 0:
        return ProportionCheck(True, math.inf)
    return ProportionCheck(report.counts >= report.quarter_bound, report.counts / report.quarter_bound)


def histogram(values: Iterable[float]) -> dict[str, Any]:
    v = np.asarray(list(values), dtype=np.float64)
    fin = v[np.isfinite(v)]
    counts, _ = np.histogram(fin, bins=HIST_EDGES)
    return {
        "edges": HIST_EDGES.tolist(),
        "counts": counts.astype(int).tolist(),
        "below": int(np.count_nonzero(fin < HIST_EDGES[0])),
        "above": int(np.count_nonzero(fin > HIST_EDGES[-1])),
        "neg_inf": int(np.count_nonzero(np.isneginf(v))),
    }


def _jsonable(obj: Any) -> Any:
    if hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _text_block(kind: str, payload: dict) -> str:
    lines = [f"[{kind}]"]
    for k, v in payload.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        elif isinstance(v, str) and "\n" in v:
            v = "\n    " + v.strip().replace("\n", "\n    ")
        lines.append(f"  {k}: {v}")
    return "\n".join(lines)


class ReportWriter:
    """Appends entries to ``<stem>.jsonl`` and a readable ``<stem>.txt``."""

    def __init__(self, directory: str | os.PathLike, stem: str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.jsonl = self.dir / f"{stem}.jsonl"
        self.txt = self.dir / f"{stem}.txt"
        self.entries: list[dict] = []

    def add(self, kind: str, payload: Any) -> None:
        data = _jsonable(payload)
        self.entries.append({"kind": kind, **(data if isinstance(data, dict) else {"value": data})})

    def flush(self) -> None:
        with open(self.jsonl, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(json.dumps(e, sort_keys=True) + "\n")
        blocks = []
        for e in self.entries:
            body = {k: v for k, v in e.items() if k != "kind"}
            blocks.append(_text_block(e["kind"], body))
        self.txt.write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
