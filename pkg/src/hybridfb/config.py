"""Plain-text experiment configuration.

One ``key = value`` per line; ``#`` starts a comment; list-valued keys take
comma-separated values.  Unknown keys, malformed values and out-of-range
values raise :class:`ConfigError` naming the line and key.
"""

from dataclasses import dataclass, fields, replace

from .errors import ConfigError

EXPERIMENTS = (
    "power-sweep",
    "user-sweep",
    "budget-sweep",
    "saoa-sweep",
    "bound-vs-mc",
    "bit-allocation-compare",
    "multicell-power-sweep",
    "validate",
)

CODEBOOK_KINDS = ("dft", "skewed")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "power-sweep"
    M: int = 32
    K: tuple = (8,)
    B_total: tuple = (32,)
    p_d_grid: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    saoa_deg: tuple = (10.0,)
    codebook: tuple = ("dft",)
    trials: int = 500
    drops: int = 10
    seed: int = 1
    output: str = "results"
    paths: int = 20
    spacing_ratio: float = 0.5
    x_min: int = 1
    x_max: int = None
    cells: int = 3
    cell_radius: float = 500.0
    min_distance: float = 100.0
    shadow_sigma_db: float = 8.0
    pathloss_exponent: float = 2.2

    @property
    def grid_max(self):
        return self.M if self.x_max is None else self.x_max

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _int(text):
    return int(text)


def _float(text):
    value = float(text)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("not finite")
    return value


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _list(item):
    def parse(text):
        parts = [p.strip() for p in text.split(",")]
        if not parts or any(not p for p in parts):
            raise ValueError("empty list entry")
        return tuple(item(p) for p in parts)
    return parse


_PARSERS = {
    "experiment": _choice(EXPERIMENTS),
    "M": _int,
    "K": _list(_int),
    "B_total": _list(_int),
    "p_d_grid": _list(_float),
    "saoa_deg": _list(_float),
    "codebook": _list(_choice(CODEBOOK_KINDS)),
    "trials": _int,
    "drops": _int,
    "seed": _int,
    "output": str,
    "paths": _int,
    "spacing_ratio": _float,
    "x_min": _int,
    "x_max": _int,
    "cells": _int,
    "cell_radius": _float,
    "min_distance": _float,
    "shadow_sigma_db": _float,
    "pathloss_exponent": _float,
}


def _range_errors(cfg):
    """Yield ``(key, message)`` for every out-of-range field."""
    if cfg.M < 1:
        yield "M", "must be >= 1"
    if any(k < 1 for k in cfg.K):
        yield "K", "user counts must be >= 1"
    if any(b < 0 for b in cfg.B_total):
        yield "B_total", "budgets must be >= 0"
    if cfg.trials < 1:
        yield "trials", "must be >= 1"
    if cfg.drops < 1:
        yield "drops", "must be >= 1"
    if cfg.seed < 0 or cfg.seed >= 1 << 64:
        yield "seed", "must be in [0, 2^64)"
    if cfg.paths < 1:
        yield "paths", "must be >= 1"
    if cfg.spacing_ratio != 0.5:
        yield "spacing_ratio", "analytical beam covariances need half-wavelength spacing (0.5)"
    if any(s < 0 or s > 180 for s in cfg.saoa_deg):
        yield "saoa_deg", "must be in [0, 180]"
    if not 1 <= cfg.x_min <= cfg.M:
        yield "x_min", "must satisfy 1 <= x_min <= M"
    if cfg.x_max is not None and not cfg.x_min <= cfg.x_max <= cfg.M:
        yield "x_max", "must satisfy x_min <= x_max <= M"
    if cfg.cells not in (1, 3):
        yield "cells", "only 1 or 3 cells are supported"
    if cfg.cell_radius <= 0:
        yield "cell_radius", "must be positive"
    if not 0 < cfg.min_distance < cfg.cell_radius:
        yield "min_distance", "must satisfy 0 < min_distance < cell_radius"
    if cfg.shadow_sigma_db < 0:
        yield "shadow_sigma_db", "must be >= 0"
    if cfg.pathloss_exponent <= 0:
        yield "pathloss_exponent", "must be positive"
    if cfg.experiment == "bit-allocation-compare" and max(cfg.K) > 12:
        yield "K", "exhaustive comparison supports at most 12 users"
    if cfg.experiment == "multicell-power-sweep" and any(k % cfg.cells for k in cfg.K):
        yield "K", "multi-cell user counts must split evenly over the cells"


def validate_config(cfg, lines=None):
    lines = lines or {}
    for key, message in _range_errors(cfg):
        raise ConfigError(message, line=lines.get(key), key=key)
    return cfg


def parse_config_text(text):
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError("expected 'key = value'", line=lineno)
        if key not in _PARSERS:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, key=key)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"malformed value {value!r}: {exc}", line=lineno, key=key) from None
        where[key] = lineno
    return validate_config(replace(ExperimentConfig(), **values), where)


def parse_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
