"""Line-oriented ``key = value`` scenario files.

Example::

    d1 = 1
    d2 = 2
    sigma = 1
    f1 = logistic(K=1)
    f2 = cubic(K=4, theta=1)
    h = 0.05
    T = 80
    datum = indicator
    datum_params = a=-1, b=1, height=1
    expand = true
    interface_order = 1
    output_times = 1:80:1

``output_times`` accepts a comma list or ``start:stop:step``.  Lines starting
with ``#`` are comments.  Sweep files add ``vary key = v1, v2, ...`` lines.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, PatchfrontError
from .reaction import Reaction, parse_reaction
from .stationary import PatchModel

DATUM_KINDS = ("bump", "plateau", "indicator", "half_bump")
REQUIRED = ("d1", "d2", "sigma", "f1", "f2")
ANALYSIS_KEYS = ("ext_tol", "lambda_block", "speed_floor", "burn_in", "window")


@dataclass(frozen=True)
class ScenarioConfig:
    d1: float
    d2: float
    sigma: float
    f1: str
    f2: str
    h: float = 0.05
    T: float = 80.0
    datum: str = "indicator"
    datum_params: Tuple[Tuple[str, float], ...] = (("a", -1.0), ("b", 1.0), ("height", 1.0))
    expand: bool = True
    interface_order: int = 1
    output_times: Optional[Tuple[float, ...]] = None
    domain_left: float = -20.0
    domain_right: float = 20.0
    ext_tol: Optional[float] = None
    lambda_block: Optional[float] = None
    speed_floor: Optional[float] = None
    burn_in: Optional[float] = None
    window: Optional[float] = None

    def __post_init__(self):
        for k in ("d1", "d2", "sigma", "h", "T"):
            v = getattr(self, k)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{k} must be a positive number, got {v!r}")
        if self.datum not in DATUM_KINDS:
            raise ConfigError(f"unknown datum {self.datum!r}; expected one of {DATUM_KINDS}")
        if self.interface_order not in (1, 2):
            raise ConfigError("interface_order must be 1 or 2")
        if not self.domain_left < 0 < self.domain_right:
            raise ConfigError("domain_left < 0 < domain_right is required")
        if self.output_times is not None:
            ts = self.output_times
            if any(not (0 < t <= self.T) for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
                raise ConfigError("output_times must be increasing and inside (0, T]")
        self.model()

    # -- derived objects -------------------------------------------------------
    def reactions(self) -> Tuple[Reaction, Reaction]:
        try:
            return parse_reaction(self.f1), parse_reaction(self.f2)
        except PatchfrontError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def model(self) -> PatchModel:
        f1, f2 = self.reactions()
        try:
            return PatchModel(self.d1, self.d2, self.sigma, f1, f2)
        except PatchfrontError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def params(self) -> Dict[str, float]:
        return dict(self.datum_params)

    def times(self) -> List[float]:
        if self.output_times is None:
            return list(np.arange(1, int(math.floor(self.T)) + 1, dtype=float)) + (
                [] if float(self.T).is_integer() else [self.T])
        return list(self.output_times)

    def regime_options(self):
        from .analysis import RegimeOptions
        kw = {k: getattr(self, k) for k in ANALYSIS_KEYS if getattr(self, k) is not None}
        return RegimeOptions(**kw)

    # -- text form -------------------------------------------------------------
    def to_text(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            out.append(f"{f.name} = {_emit(f.name, v)}")
        return "\n".join(out) + "\n"


def _emit(key: str, v) -> str:
    if key == "datum_params":
        return ", ".join(f"{k}={x!r}" for k, x in v)
    if key == "output_times":
        return ", ".join(repr(t) for t in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {text!r}")


def _times(text: str) -> Tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("output_times range must be start:stop:step")
        a, b, s = (_float("output_times", p) for p in parts)
        if not s > 0:
            raise ConfigError("output_times step must be positive")
        if b < a:
            raise ConfigError("output_times range is empty")
        n = int(math.floor((b - a) / s + 1e-9))
        return tuple(float(a + i * s) for i in range(n + 1))
    return tuple(_float("output_times", p) for p in text.split(",") if p.strip())


def _pairs(text: str) -> Tuple[Tuple[str, float], ...]:
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        k, eq, v = item.partition("=")
        if not eq or not k.strip():
            raise ConfigError(f"datum_params: malformed entry {item!r}")
        out.append((k.strip(), _float(k.strip(), v)))
    return tuple(out)


_CONVERT = {
    "d1": _float, "d2": _float, "sigma": _float, "h": _float, "T": _float,
    "domain_left": _float, "domain_right": _float,
    "ext_tol": _float, "lambda_block": _float, "speed_floor": _float,
    "burn_in": _float, "window": _float,
    "f1": lambda k, v: v.strip(), "f2": lambda k, v: v.strip(),
    "datum": lambda k, v: v.strip(),
    "datum_params": lambda k, v: _pairs(v),
    "expand": _bool,
    "interface_order": lambda k, v: int(_float(k, v)),
    "output_times": lambda k, v: _times(v),
}


def _lines(text: str):
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw!r}")
        yield n, key.strip(), val.strip()


def _build(values: Dict[str, object]) -> ScenarioConfig:
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str) -> ScenarioConfig:
    values: Dict[str, object] = {}
    for n, key, val in _lines(text):
        if key.startswith("vary "):
            raise ConfigError(f"line {n}: 'vary' is only allowed in sweep files")
        if key not in _CONVERT:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        values[key] = _CONVERT[key](key, val)
    return _build(values)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioConfig
    axes: Tuple[Tuple[str, Tuple[str, ...]], ...] = field(default=())

    def points(self) -> List[Tuple[Dict[str, str], ScenarioConfig]]:
        """Cartesian product of the varied keys, in file order."""
        if not self.axes:
            return [({}, self.base)]
        names = [a for a, _ in self.axes]
        out = []
        for combo in itertools.product(*(vals for _, vals in self.axes)):
            upd = {k: _CONVERT[k](k, v) for k, v in zip(names, combo)}
            try:
                cfg = replace(self.base, **upd)
            except TypeError as exc:
                raise ConfigError(str(exc)) from None
            out.append((dict(zip(names, combo)), cfg))
        return out


def _split_values(text: str) -> Tuple[str, ...]:
    """Comma split that keeps parenthesised reaction specs intact."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == ";" or (ch == "," and depth == 0):
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur).strip())
    return tuple(v for v in out if v)


def parse_sweep(text: str) -> SweepConfig:
    values: Dict[str, object] = {}
    axes = []
    for n, key, val in _lines(text):
        if key.startswith("vary "):
            name = key[5:].strip()
            if name not in _CONVERT or name in ("datum_params", "output_times"):
                raise ConfigError(f"line {n}: cannot vary {name!r}")
            vals = _split_values(val)
            if not vals:
                raise ConfigError(f"line {n}: no values for {name!r}")
            axes.append((name, vals))
            continue
        if key not in _CONVERT:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        values[key] = _CONVERT[key](key, val)
    for name, vals in axes:
        values.setdefault(name, _CONVERT[name](name, vals[0]))
    sw = SweepConfig(_build(values), tuple(axes))
    for _, cfg in sw.points():
        cfg.model()
    return sw


def load_sweep(path: str) -> SweepConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_sweep(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read sweep file {path}: {exc}") from None


__all__ = ["ScenarioConfig", "SweepConfig", "parse_config", "load_config", "parse_sweep",
           "load_sweep"]
