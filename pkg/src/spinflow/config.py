"""``key = value`` run configuration.

Unknown keys, malformed values and violated constraints are all errors that
name the key and the line they came from.
"""
from __future__ import annotations

from typing import Callable, Iterable

from .flow import PRESETS, FlowConfig
from .toy2d import ToyConfig

MODES = ("flow", "toy2d")

FLOW_KEYS = ("nx", "ny", "nz", "lx", "ly", "lz", "t_end", "dt", "cfl_safety", "epsilon",
             "rho_floor", "gauge", "alpha", "init", "init_r0", "init_amp", "seed",
             "snapshot_every", "outdir")
TOY_KEYS = ("n", "L", "t_end", "dt", "cfl_safety", "outdir")
ALL_KEYS = ("mode",) + tuple(dict.fromkeys(FLOW_KEYS + TOY_KEYS))

FLOW_DEFAULTS = dict(nx=32, ny=32, nz=0, lx=3.0, ly=3.0, lz=3.0)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: str | int | None = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def _dt(text: str):
    return None if text.lower() == "cfl" else float(text)


def _positive(v):
    return v > 0


CASTS: dict[str, Callable[[str], object]] = {
    "mode": str, "nx": int, "ny": int, "nz": int, "lx": float, "ly": float, "lz": float,
    "n": int, "L": float, "t_end": float, "dt": _dt, "cfl_safety": float, "epsilon": float,
    "rho_floor": float, "gauge": _bool, "alpha": float, "init": str, "init_r0": float,
    "init_amp": float, "seed": int, "snapshot_every": int, "outdir": str,
}

CONSTRAINTS: dict[str, tuple[Callable[[object], bool], str]] = {
    "mode": (lambda v: v in MODES, f"must be one of {MODES}"),
    "nx": (lambda v: v >= 8, "must be >= 8"),
    "ny": (lambda v: v >= 8, "must be >= 8"),
    "nz": (lambda v: v == 0 or v >= 8, "must be 0 (2D) or >= 8"),
    "n": (lambda v: v >= 8, "must be >= 8"),
    "lx": (_positive, "must be > 0"),
    "ly": (_positive, "must be > 0"),
    "lz": (_positive, "must be > 0"),
    "L": (lambda v: v >= 6, "must be >= 6"),
    "t_end": (_positive, "must be > 0"),
    "dt": (lambda v: v is None or v > 0, "must be > 0 or 'cfl'"),
    "cfl_safety": (lambda v: 0 < v <= 1, "must lie in (0, 1]"),
    "epsilon": (lambda v: v >= 0, "must be >= 0"),
    "rho_floor": (lambda v: 0 < v < 1, "must lie in (0, 1), i.e. be > 0"),
    "alpha": (lambda v: v >= 0, "must be >= 0"),
    "init": (lambda v: v in PRESETS, f"must be one of {PRESETS}"),
    "init_amp": (_positive, "must be > 0"),
    "init_r0": (_positive, "must be > 0"),
    "seed": (lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer"),
    "snapshot_every": (lambda v: v >= 0, "must be >= 0"),
}


def _parse_line(key: str, raw: str, line) -> object:
    if key not in CASTS:
        raise ConfigError("unknown key", key, line)
    try:
        value = CASTS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {raw!r}: {exc}", key, line) from None
    check = CONSTRAINTS.get(key)
    if check and not check[0](value):
        raise ConfigError(f"{check[1]}, got {raw!r}", key, line)
    return value


def parse_pairs(text: str) -> list[tuple[str, object, int]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, raw = (part.strip() for part in body.split("=", 1))
        pairs.append((key, _parse_line(key, raw, lineno), lineno))
    return pairs


def parse_overrides(items: Iterable[str]) -> list[tuple[str, object, str]]:
    pairs = []
    for i, item in enumerate(items, start=1):
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}", line=f"override {i}")
        key, raw = (part.strip() for part in item.split("=", 1))
        pairs.append((key, _parse_line(key, raw, f"override {i}"), f"override {i}"))
    return pairs


def build_config(pairs, mode: str | None = None) -> FlowConfig | ToyConfig:
    values: dict[str, tuple[object, object]] = {}
    for key, value, line in pairs:
        values[key] = (value, line)
    mode = values.pop("mode", (mode or "flow", None))[0]
    allowed = FLOW_KEYS if mode == "flow" else TOY_KEYS
    for key, (_, line) in values.items():
        if key not in allowed:
            raise ConfigError(f"not valid in mode {mode!r}", key, line)
    v = {k: val for k, (val, _) in values.items()}
    try:
        if mode == "toy2d":
            return ToyConfig(**v)
        geo = {**FLOW_DEFAULTS, **{k: v.pop(k) for k in list(v) if k in FLOW_DEFAULTS}}
        n = (geo["nx"], geo["ny"]) + ((geo["nz"],) if geo["nz"] else ())
        length = (geo["lx"], geo["ly"]) + ((geo["lz"],) if geo["nz"] else ())
        return FlowConfig(n=n, length=length, **v)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, overrides: Iterable[str] = (), mode: str | None = None):
    """Resolve config text plus ``key=value`` overrides (which win) into a config object."""
    return build_config(parse_pairs(text) + parse_overrides(overrides), mode)
