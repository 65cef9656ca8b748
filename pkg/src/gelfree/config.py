"""Run configuration: a flat ``key=value`` file merged with command-line flags."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .measure import MeasureSpec, parse_measure

__all__ = ["ConfigError", "RunConfig", "parse_grid", "read_config_file", "build_config", "thread_cap"]

SUBCOMMANDS = ("analytic", "characteristics", "selfsim", "simulate", "validate")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (exit code 2)."""


def parse_grid(text: str) -> tuple:
    """Parse ``"a,b,c"``, ``"log:lo:hi:n"`` or ``"lin:lo:hi:n"`` into an ascending tuple."""
    text = str(text).strip()
    try:
        if text.startswith(("log:", "lin:")):
            kind, lo, hi, n = text.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
            if n < 1:
                raise ConfigError(f"grid {text!r}: need at least one point")
            if kind == "log":
                if not (lo > 0 and hi > 0):
                    raise ConfigError(f"grid {text!r}: log grid needs positive ends")
                vals = np.logspace(math.log10(lo), math.log10(hi), n)
            else:
                vals = np.linspace(lo, hi, n)
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from None
    vals = tuple(float(v) for v in vals)
    if not vals:
        raise ConfigError("empty grid")
    if any(not math.isfinite(v) for v in vals):
        raise ConfigError(f"grid {text!r} has non-finite values")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"grid {text!r} must be strictly ascending")
    return vals


def _pos_int(name):
    def conv(v):
        try:
            out = int(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected an integer, got {v!r}") from None
        if out < 1:
            raise ConfigError(f"{name}: must be positive, got {out}")
        return out
    return conv


def _float(name, positive=False, nonneg=False):
    def conv(v):
        try:
            out = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected a number, got {v!r}") from None
        if not math.isfinite(out):
            raise ConfigError(f"{name}: must be finite")
        if positive and not out > 0:
            raise ConfigError(f"{name}: must be positive, got {out}")
        if nonneg and out < 0:
            raise ConfigError(f"{name}: must be non-negative, got {out}")
        return out
    return conv


def _seed(v):
    try:
        out = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"seed: expected an integer, got {v!r}") from None
    if out < 0:
        raise ConfigError("seed: must be non-negative")
    return out


def _measure(v):
    try:
        return parse_measure(str(v))
    except ValueError as exc:
        raise ConfigError(f"measure: {exc}") from None


def _criteria(v):
    try:
        nums = tuple(sorted({int(x) for x in str(v).split(",") if x.strip()}))
    except ValueError:
        raise ConfigError(f"criteria: expected a comma list of integers, got {v!r}") from None
    if not nums or any(n < 1 or n > 10 for n in nums):
        raise ConfigError("criteria: numbers must lie in 1..10")
    return nums


def _order(v):
    out = _pos_int("order")(v)
    if out % 2 or not 8 <= out <= 18:
        raise ConfigError("order: must be even and in [8, 18]")
    return out


# key -> converter; every key is also a command-line flag (underscores become dashes)
CONVERTERS = {
    "k": _float("k", nonneg=True),
    "measure": _measure,
    "t_grid": parse_grid,
    "s_grid": parse_grid,
    "grid": parse_grid,
    "s0": _float("s0", positive=True),
    "stride": _pos_int("stride"),
    "order": _order,
    "n_particles": _pos_int("n_particles"),
    "seed": _seed,
    "replicates": _pos_int("replicates"),
    "t_end": _float("t_end", positive=True),
    "observe_at": parse_grid,
    "event_cap": _pos_int("event_cap"),
    "root_tol": _float("root_tol", positive=True),
    "residual_step": _float("residual_step", positive=True),
    "criteria": _criteria,
    "out_dir": str,
}


@dataclass
class RunConfig:
    """Fully validated settings for one subcommand."""

    subcommand: str
    k: float = 1.0
    measure: MeasureSpec = field(default_factory=MeasureSpec.monodisperse)
    t_grid: tuple = (0.1, 0.5, 1.0, 2.0, 5.0)
    s_grid: tuple = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0)
    grid: tuple = tuple(float(v) for v in np.logspace(-2, 2, 41))
    s0: float = 1.0
    stride: int = 100
    order: int = 12
    n_particles: int | None = None
    seed: int | None = None
    replicates: int = 1
    t_end: float = 2.0
    observe_at: tuple | None = None
    event_cap: int = 10**7
    root_tol: float = 1e-12
    residual_step: float | None = None
    criteria: tuple = tuple(range(1, 11))
    out_dir: str = "."

    def describe(self) -> list[str]:
        """``key=value`` lines in field order, for the report header."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, MeasureSpec):
                v = v.describe()
            elif isinstance(v, tuple) and len(v) > 8:
                v = f"{len(v)} points in [{v[0]!r}, {v[-1]!r}]"
            out.append(f"{f.name}={v}")
        return out


def _norm_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def read_config_file(path) -> dict:
    """Raw ``key -> text`` mapping; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!s}: {exc.strerror}") from None
    out: dict = {}
    seen: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = _norm_key(key)
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        out[key] = value.strip()
    return out


def build_config(subcommand: str, file_values: dict | None = None,
                 flag_values: dict | None = None) -> RunConfig:
    """Merge defaults, file values and flag values (flags win) and validate."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    kwargs = {}
    for key, raw in merged.items():
        key = _norm_key(key)
        if key not in CONVERTERS:
            raise ConfigError(f"unknown key {key!r}")
        kwargs[key] = CONVERTERS[key](raw)
    cfg = RunConfig(subcommand, **kwargs)
    if subcommand in ("analytic", "characteristics", "selfsim") and not cfg.k > 0:
        raise ConfigError(f"{subcommand}: k must be positive")
    if subcommand == "analytic":
        if cfg.t_grid[0] <= 0:
            raise ConfigError("t_grid: times must be positive")
        if cfg.s_grid[0] < 0:
            raise ConfigError("s_grid: values must be non-negative")
    if subcommand == "selfsim" and cfg.grid[0] <= 0:
        raise ConfigError("grid: values must be positive")
    if subcommand == "simulate":
        # RNG-touching runs always carry an explicit seed
        cfg.n_particles = cfg.n_particles or 10_000
        cfg.seed = 12345 if cfg.seed is None else cfg.seed
        if cfg.s_grid[0] <= 0 and len(cfg.s_grid) > 0:
            cfg.s_grid = tuple(s for s in cfg.s_grid if s > 0)
        if cfg.observe_at is not None and (cfg.observe_at[0] <= 0 or cfg.observe_at[-1] > cfg.t_end):
            raise ConfigError("observe_at: times must lie in (0, t_end]")
    return cfg


def thread_cap(default: int = 1) -> int:
    """Worker cap from ``GELFREE_THREADS``."""
    raw = os.environ.get("GELFREE_THREADS")
    if raw is None or not raw.strip():
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GELFREE_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("GELFREE_THREADS must be at least 1")
    return n
