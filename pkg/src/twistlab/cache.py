"""Binary coefficient cache.

Layout (little-endian):

    b"TWL1" | u32 version | 32-byte curve hash | u64 p_max | u64 n_max
    | f64 lambda(p) for primes p <= p_max | f64 a(n) for 1 <= n <= n_max
    | u64 checksum (byte sum of the two float arrays, mod 2^64)
"""

from __future__ import annotations

import logging
import os
import struct
import warnings
from pathlib import Path

import numpy as np

from .arith import primes_up_to
from .curve import CoefficientTable, CurveSpec, build_coefficients

MAGIC = b"TWL1"
VERSION = 1
_HEADER = struct.Struct("<4sI32sQQ")
_CHECK = struct.Struct("<Q")

log = logging.getLogger(__name__)


class CacheError(Exception):
    pass


class CacheMismatchError(CacheError):
    """Readable file written for another format version or curve."""


class CacheCorruptError(CacheError):
    """Truncated file or checksum failure."""


def checksum(payload: bytes) -> int:
    return int(np.frombuffer(payload, dtype=np.uint8).sum(dtype=np.uint64))


def table_bytes(table: CoefficientTable) -> bytes:
    payload = table.lam.astype("<f8").tobytes() + table.an[1:].astype("<f8").tobytes()
    head = _HEADER.pack(MAGIC, VERSION, table.built_for, table.p_max, table.n_max)
    return head + payload + _CHECK.pack(checksum(payload))


def write_table(table: CoefficientTable, path: str | os.PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(table_bytes(table))
    os.replace(tmp, path)


def read_table(path: str | os.PathLike, curve: CurveSpec) -> CoefficientTable:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CacheCorruptError(f"{path}: file shorter than header ({len(data)} bytes)")
    magic, version, key, p_max, n_max = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CacheMismatchError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CacheMismatchError(f"{path}: version {version}, expected {VERSION}")
    if key != curve.key:
        raise CacheMismatchError(f"{path}: written for a different curve")
    primes = np.array(primes_up_to(p_max), dtype=np.int64)
    n_lam = primes.size
    expected = _HEADER.size + 8 * (n_lam + n_max) + _CHECK.size
    if len(data) != expected:
        raise CacheCorruptError(f"{path}: length {len(data)} bytes, expected {expected}")
    payload = data[_HEADER.size : expected - _CHECK.size]
    (stored,) = _CHECK.unpack_from(data, expected - _CHECK.size)
    if checksum(payload) != stored:
        raise CacheCorruptError(f"{path}: checksum mismatch")
    lam = np.frombuffer(payload, dtype="<f8", count=n_lam).astype(np.float64)
    an = np.zeros(n_max + 1)
    an[1:] = np.frombuffer(payload, dtype="<f8", offset=8 * n_lam, count=n_max)
    ap = np.rint(lam * np.sqrt(primes.astype(np.float64))).astype(np.int64)
    bad = np.array([curve.is_bad(p) for p in primes.tolist()], dtype=bool)
    return CoefficientTable(
        p_max=int(p_max), n_max=int(n_max), primes=primes, ap_int=ap, lam=lam, an=an, built_for=key, bad_mask=bad
    )


def default_cache_file(directory: str | os.PathLike, curve: CurveSpec) -> Path:
    return Path(directory) / f"curve-{curve.key.hex()[:16]}.twl"


def load_or_build(
    curve: CurveSpec, path: str | os.PathLike | None, n_max: int, p_max: int | None = None
) -> CoefficientTable:
    """Cached table covering ``n_max``/``p_max``; rebuilt (and rewritten) when stale.

    A directory path maps to a per-curve file inside it. Mismatched files are
    rebuilt with a warning; corrupt ones raise :class:`CacheCorruptError`.
    """
    p_need = max(int(p_max or n_max), n_max)
    if path is None:
        return build_coefficients(curve, n_max, p_need)
    path = Path(path)
    if path.is_dir() or not path.suffix:
        path = default_cache_file(path, curve)
    if path.exists():
        try:
            table = read_table(path, curve)
        except CacheMismatchError as exc:
            warnings.warn(f"rebuilding coefficient cache: {exc}", stacklevel=2)
        else:
            if table.n_max >= n_max and table.p_max >= p_need:
                return table
            log.info("cache %s covers n<=%d, p<=%d; extending", path, table.n_max, table.p_max)
            n_max, p_need = max(n_max, table.n_max), max(p_need, table.p_max)
    table = build_coefficients(curve, n_max, p_need)
    write_table(table, path)
    return table
