"""Experiment configuration files.

Configs are ``key = value`` text with ``[section]`` headers (read with
:mod:`configparser`).  Sections and keys::

    [dataset]     name, path, transform (none|log10), period, total, test_len
    [arima]       kind (ar|sarima), order; for sarima also seasonal_order, period
    [ann]         layout (p,h,q), stride, difference, epochs, restarts, hidden_grid
    [svm]         lags, grid ("C,sigma,eps; ..."), folds, difference
    [combiners]   use (comma list, see COMBINER_NAMES)
    [run]         seed, mode, stats, standardization, ridge, arv, metrics_scale, output_dir

``difference`` is ``none``, ``d`` or ``d,D`` (seasonal order uses the
dataset period).  Relative paths are resolved against the config file.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

from ..combiners import linear
from ..errors import ConfigError, ParseError
from ..timeseries import Difference

NONLINEAR = "nonlinear_ensemble"
COMBINER_NAMES = ("simple_average", "trimmed", "winsorized", "median", "error_based",
                  "variance_based", NONLINEAR)
DEFAULT_COMBINERS = ("simple_average", "trimmed(20)", "winsorized(1)", "median",
                     "error_based(mape)", "variance_based", NONLINEAR)
DEFAULT_SVR_GRID = tuple((C, s, e) for C in (1.0, 10.0, 100.0)
                         for s in (0.5, 1.0, 2.0) for e in (0.01, 0.05))
BUNDLED = ("lynx", "sunspots", "airline")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    path: Path
    test_len: int
    transform: str = "none"
    period: Optional[int] = None
    total: Optional[int] = None
    arima_kind: str = "ar"
    ar_order: int = 12
    sarima_order: Tuple[int, int, int] = (0, 1, 1)
    sarima_seasonal: Tuple[int, int, int] = (0, 1, 1)
    mlp_layout: Tuple[int, int, int] = (12, 4, 1)
    mlp_stride: int = 1
    mlp_difference: Optional[Difference] = None
    mlp_epochs: int = 1000
    mlp_restarts: int = 3
    hidden_grid: Tuple[int, ...] = ()
    svr_lags: int = 12
    svr_grid: Tuple[Tuple[float, float, float], ...] = DEFAULT_SVR_GRID
    svr_difference: Optional[Difference] = None
    folds: int = 3
    combiners: Tuple[str, ...] = DEFAULT_COMBINERS
    seed: int = 0
    mode: str = "rolling"
    stats: str = "frozen"
    standardization: str = "variance"
    ridge: float = 0.0
    arv: str = "paper"
    metrics_scale: str = "transformed"
    output_dir: Optional[Path] = None

    def __post_init__(self):
        checks = [("transform", ("none", "log10")), ("arima_kind", ("ar", "sarima")),
                  ("mode", ("rolling", "iterated")), ("stats", ("frozen", "recompute")),
                  ("standardization", ("variance", "stddev")),
                  ("arv", ("paper", "conventional")),
                  ("metrics_scale", ("transformed", "original"))]
        for attr, allowed in checks:
            if getattr(self, attr) not in allowed:
                raise ConfigError(f"{attr} must be one of {allowed}, got {getattr(self, attr)!r}")
        if self.test_len < 1:
            raise ConfigError("test_len must be positive")
        if self.ridge < 0:
            raise ConfigError("ridge must be nonnegative")
        for c in self.combiners:
            parse_combiner(c)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


_COMBINER_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def parse_combiner(text: str):
    """``"trimmed(20)"`` -> ``LinearCombinerSpec``; the nonlinear ensemble -> its name."""
    m = _COMBINER_RE.match(text)
    if not m or m.group(1) not in COMBINER_NAMES:
        raise ConfigError(f"unknown combiner {text!r}; choose from {COMBINER_NAMES}")
    kind, arg = m.group(1), m.group(2)
    if kind == NONLINEAR:
        return NONLINEAR
    if kind == "trimmed":
        return linear.trimmed(float(arg) if arg else 20.0)
    if kind == "winsorized":
        return linear.winsorized(int(arg) if arg else 1)
    if kind == "error_based":
        return linear.error_based(arg or "mape")
    return getattr(linear, kind)()


def _ints(text: str, n: Optional[int] = None):
    try:
        vals = tuple(int(v) for v in re.split(r"[,\s]+", text.strip().strip("()")) if v)
    except ValueError:
        raise ConfigError(f"expected integers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} integers, got {text!r}")
    return vals


def _difference(text: Optional[str], period: Optional[int]) -> Optional[Difference]:
    if text is None or text.strip().lower() in ("", "none"):
        return None
    orders = _ints(text)
    d = orders[0]
    D = orders[1] if len(orders) > 1 else 0
    try:
        return Difference(d, D, period if D else None)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _grid(text: str):
    points = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        try:
            C, sigma, eps = (float(v) for v in chunk.split(","))
        except ValueError:
            raise ConfigError(f"SVR grid point must be 'C, sigma, eps', got {chunk!r}") from None
        points.append((C, sigma, eps))
    return tuple(points)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(str(exc), path=path, line=getattr(exc, "lineno", None)) from None

    def get(section, key, default=None):
        if parser.has_option(section, key):
            value = parser.get(section, key).strip()
            return value if value != "" else default
        return default

    if not parser.has_section("dataset"):
        raise ConfigError(f"{path}: missing [dataset] section")
    data_path = get("dataset", "path")
    if data_path is None:
        raise ConfigError(f"{path}: [dataset] path is required")
    data_path = Path(data_path)
    if not data_path.is_absolute():
        data_path = path.parent / data_path

    period = get("dataset", "period")
    period = int(period) if period else None
    kw = dict(name=get("dataset", "name", path.stem), path=data_path,
              transform=get("dataset", "transform", "none"), period=period)
    if get("dataset", "test_len") is None:
        raise ConfigError(f"{path}: [dataset] test_len is required")
    kw["test_len"] = int(get("dataset", "test_len"))
    if get("dataset", "total"):
        kw["total"] = int(get("dataset", "total"))

    kw["arima_kind"] = get("arima", "kind", "ar")
    if kw["arima_kind"] == "ar":
        kw["ar_order"] = int(get("arima", "order", 12))
    else:
        kw["sarima_order"] = _ints(get("arima", "order", "0,1,1"), 3)
        kw["sarima_seasonal"] = _ints(get("arima", "seasonal_order", "0,1,1"), 3)
        p = get("arima", "period")
        if p:
            kw["period"] = kw["period"] or int(p)

    if get("ann", "layout"):
        kw["mlp_layout"] = _ints(get("ann", "layout"), 3)
    kw["mlp_stride"] = int(get("ann", "stride", 1))
    kw["mlp_difference"] = _difference(get("ann", "difference"), kw["period"])
    kw["mlp_epochs"] = int(get("ann", "epochs", 1000))
    kw["mlp_restarts"] = int(get("ann", "restarts", 3))
    if get("ann", "hidden_grid"):
        kw["hidden_grid"] = _ints(get("ann", "hidden_grid"))

    kw["svr_lags"] = int(get("svm", "lags", 12))
    if get("svm", "grid"):
        kw["svr_grid"] = _grid(get("svm", "grid"))
    kw["folds"] = int(get("svm", "folds", 3))
    kw["svr_difference"] = _difference(get("svm", "difference"), kw["period"])

    use = get("combiners", "use")
    if use is not None or parser.has_option("combiners", "use"):
        kw["combiners"] = tuple(c.strip() for c in re.split(r",(?![^(]*\))", use or "")
                                if c.strip())

    kw["seed"] = int(get("run", "seed", 0))
    for key in ("mode", "stats", "standardization", "arv", "metrics_scale"):
        value = get("run", key)
        if value is not None:
            kw[key] = value
    kw["ridge"] = float(get("run", "ridge", 0.0))
    out = get("run", "output_dir")
    if out:
        kw["output_dir"] = Path(out) if Path(out).is_absolute() else path.parent / out
    return ExperimentConfig(**kw)


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a bundled config (``lynx``, ``sunspots`` or ``airline``)."""
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config named {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("nlcombine") / "data" / f"{name}.ini"))


def resolve_config(arg: str) -> ExperimentConfig:
    """Load ``arg`` as a config path, or as the name of a bundled config."""
    p = Path(arg)
    if p.exists():
        return load_config(p)
    if arg in BUNDLED:
        return load_config(bundled_config_path(arg))
    raise ConfigError(f"config {arg!r} not found")
