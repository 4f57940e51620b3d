"""Experiment configuration: a flat ``key = value`` text format with ``#`` comments."""

from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .curve import CURVE_11A1, CurveSpec

NORMALIZATIONS = ("per_d", "per_X")
BAD_PRIME_MODES = ("euler", "exclude")
WINDOWS = ("smooth", "indicator")
THREADS_ENV = "TWISTLAB_THREADS"

_POLICY_RE = re.compile(r"^\s*([A-Za-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


class ConfigError(ValueError):
    pass


def _number(text: str) -> float:
    text = text.strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _split_policy(text: str) -> tuple[str, float | None]:
    m = _POLICY_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse policy {text!r}")
    name, arg = m.group(1), m.group(2)
    return name, (_number(arg) if arg not in (None, "") else None)


def x_from_policy(policy: str, X: float) -> float:
    """Prime-sum length x for window parameter X.

    ``triple_log`` is X^{1 / log log log X}; ``power(t)`` is X^t; ``fixed(v)`` is v.
    """
    name, arg = _split_policy(policy)
    if name == "triple_log" and arg is None:
        lll = math.log(math.log(math.log(X)))
        if lll <= 0:
            raise ConfigError(f"x_policy 'triple_log' needs log log log X > 0, X={X:g}")
        return X ** (1.0 / lll)
    if name == "power" and arg is not None:
        return X**arg
    if name == "fixed" and arg is not None:
        return arg
    raise ConfigError(f"unknown x_policy {policy!r}; use triple_log | power(theta) | fixed(x)")


def L_from_policy(policy: str, X: float) -> float:
    """Dilation L: ``extended(delta)`` is (2 - delta/2) log X, ``logX`` is log X, ``fixed(v)`` is v."""
    name, arg = _split_policy(policy)
    if name == "extended" and arg is not None:
        return (2.0 - arg / 2.0) * math.log(X)
    if name == "logX" and arg is None:
        return math.log(X)
    if name == "fixed" and arg is not None:
        return arg
    raise ConfigError(f"unknown L_policy {policy!r}; use extended(delta) | logX | fixed(L)")


def _int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


@dataclass
class ExperimentConfig:
    curve: tuple[int, int, int, int, int] = CURVE_11A1.coefficients
    N: int = CURVE_11A1.N
    eps_E: int = CURVE_11A1.eps_E
    X: float = 1e4
    x_policy: str = "power(1/3)"
    L_policy: str = "logX"
    k_max: int = 6
    alpha: float = -1.0
    beta: float = 1.0
    tail_eps: float = 1e-12
    vanish_threshold: float = 1e-6
    bad_prime_mode: str = "euler"
    normalization: str = "per_d"
    window: str = "smooth"
    ells: tuple[int, ...] = (1, 3, 7, 9, 13)
    threads: int = 0
    cache_path: str = "twistlab-cache"
    output_path: str = "twistlab-out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.alpha < self.beta:
            raise ConfigError("alpha must be < beta")
        if self.X < 20:
            raise ConfigError("X must be >= 20")
        if not 0 < self.tail_eps <= 1e-4:
            raise ConfigError("tail_eps must lie in (0, 1e-4]")
        if self.vanish_threshold <= 0:
            raise ConfigError("vanish_threshold must be positive")
        if self.bad_prime_mode not in BAD_PRIME_MODES:
            raise ConfigError(f"bad_prime_mode must be one of {BAD_PRIME_MODES}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
        if self.window not in WINDOWS:
            raise ConfigError(f"window must be one of {WINDOWS}")
        if self.k_max < 0:
            raise ConfigError("k_max must be >= 0")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")
        if len(self.curve) != 5:
            raise ConfigError("curve needs five Weierstrass coefficients a1,a2,a3,a4,a6")
        x_from_policy(self.x_policy, self.X)
        L_from_policy(self.L_policy, self.X)

    # derived values
    @property
    def curve_spec(self) -> CurveSpec:
        return CurveSpec.from_coefficients(self.curve, self.N, self.eps_E)

    @property
    def x(self) -> float:
        return x_from_policy(self.x_policy, self.X)

    @property
    def L(self) -> float:
        return L_from_policy(self.L_policy, self.X)

    @property
    def resolved_threads(self) -> int:
        if self.threads > 0:
            return self.threads
        env = os.environ.get(THREADS_ENV, "").strip()
        if env:
            try:
                n = int(env)
            except ValueError as exc:
                raise ConfigError(f"{THREADS_ENV}={env!r} is not an integer") from exc
            if n > 0:
                return n
        return 1

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(i) for i in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_CONVERTERS = {
    "curve": _int_tuple,
    "ells": _int_tuple,
    "N": int,
    "eps_E": int,
    "k_max": int,
    "threads": int,
    "X": _number,
    "alpha": _number,
    "beta": _number,
    "tail_eps": _number,
    "vanish_threshold": _number,
}
FIELD_NAMES = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def convert_value(key: str, raw: str):
    conv = _CONVERTERS.get(key, str)
    try:
        return conv(raw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into converted values (unknown keys rejected)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELD_NAMES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = convert_value(key, value)
    return out


def load_config(path: str | os.PathLike | None = None, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
