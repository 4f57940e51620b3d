"""Per-discriminant sweep records and their CSV form."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

CSV_COLUMNS = ("d", "kappa", "a_class", "eps_d", "L_half", "vanished", "statistic", "P_dx", "zero_weight")


@dataclass(frozen=True)
class SweepRecord:
    d: int
    kappa: int
    a_class: int
    eps_d: int
    L_half: float
    vanished: bool
    statistic: float
    P_dx: float
    zero_weight: float


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def _row(r: SweepRecord) -> list[str]:
    return [
        str(r.d),
        str(r.kappa),
        str(r.a_class),
        str(r.eps_d),
        format_float(r.L_half),
        "1" if r.vanished else "0",
        format_float(r.statistic),
        format_float(r.P_dx),
        format_float(r.zero_weight),
    ]


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(_row(r))
    return buf.getvalue()


def write_csv(records: Iterable[SweepRecord], path: str | os.PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(records_to_csv(records), encoding="utf-8", newline="")


def read_csv(path: str | os.PathLike) -> list[SweepRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header!r}")
        out = []
        for row in reader:
            d, kappa, a, eps, L, van, stat, P, zw = row
            out.append(SweepRecord(int(d), int(kappa), int(a), int(eps), float(L), van == "1", float(stat), float(P), float(zw)))
    return out

