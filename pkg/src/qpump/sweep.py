"""Parameter sweeps over a config document, written as CSV."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from .config import parse_config
from .errors import ConfigError
from .model import prepare
from .otm import _otm_report
from .ttm import _ttm_report

COLUMNS = (
    "param",
    "entropy_production",
    "rel_entropy",
    "mutual_info",
    "gamma_rel_entropy",
    "delta",
    "ft_value_ttm",
    "ft_value_otm",
    "conservation_defect",
)


def grid(start: float, stop: float, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    if stop < start:
        raise ValueError("stop must be >= start")
    if count == 1:
        return np.array([float(start)])
    return np.linspace(start, stop, count)


def evaluate_point(document: dict, param: str, value: float, conservation: str | None = None) -> tuple[float, ...]:
    loaded = parse_config(document, {param: value}, conservation)
    if param not in loaded.used_parameters:
        raise ConfigError(param, f"parameter {param!r} is not referenced by the config")
    prep = prepare(loaded.model, "otm")
    ttm = _ttm_report(prep, loaded.options.merge_tol, loaded.options.drop_tol)
    otm = _otm_report(prep, loaded.options.merge_tol)
    return (
        float(value),
        otm.entropy_production,
        otm.rel_entropy,
        otm.mutual_info,
        otm.gamma_rel_entropy,
        otm.delta,
        ttm.ft_value,
        otm.ft_value,
        ttm.conservation_defect,
    )


def _evaluate_args(args):
    return evaluate_point(*args)


def run_sweep(document: dict, param: str, values: Sequence[float], jobs: int = 1,
              conservation: str | None = None) -> list[tuple[float, ...]]:
    """Evaluate every grid value; rows come back in grid order regardless of ``jobs``."""
    # fail fast on an unknown parameter before spawning workers
    probe = parse_config(document, {param: float(values[0])}, conservation)
    if param not in probe.used_parameters:
        raise ConfigError(param, f"parameter {param!r} is not referenced by the config")
    tasks = [(document, param, float(v), conservation) for v in values]
    if jobs <= 1 or len(tasks) == 1:
        return [_evaluate_args(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_evaluate_args, tasks))


def format_value(x: float) -> str:
    return f"{x:.17g}"


def write_csv(rows, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([format_value(x) for x in row])
