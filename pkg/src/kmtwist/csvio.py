"""Config files, CSV tables and gnuplot scripts."""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import sys
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .harness import ConfigError, ExperimentConfig, SweepRow, config_keys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SNAPSHOT_HEADER = ("k", "u", "u_mod_2pi", "v_dev")
SWEEP_HEADER = ("b1", "r_measured", "r_predicted", "psi", "mean_drift", "max_dev",
                "converged", "seed", "wall_time_s")

_TUPLE_KEYS = {"snapshot_times", "b1_values", "n_values"}


def _fmt(x: float) -> str:
    return "%.17g" % x


def _coerce(key: str, value: Any, default: Any) -> Any:
    if key in _TUPLE_KEYS:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list")
        return tuple(value)
    if isinstance(value, (dict, list)):
        raise ConfigError(f"{key}: nested values are not allowed")
    if isinstance(default, bool) or isinstance(value, bool):
        raise ConfigError(f"{key}: booleans are not accepted")
    if isinstance(default, int) and not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if isinstance(default, float) or key == "omega":
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    if default is None or isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
    return value


def config_from_mapping(values: Mapping[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Overlay flat ``values`` on ``base``; unknown keys are errors."""
    base = base or ExperimentConfig()
    known = set(config_keys())
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    changes = {k: _coerce(k, v, getattr(base, k)) for k, v in values.items()}
    return base.replace(**changes)


def load_config(path: str | os.PathLike, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a flat TOML file of ExperimentConfig keys."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_mapping(data, base)


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if v is None:
            continue
        if isinstance(v, str):
            lines.append(f'{f.name} = "{v}"')
        elif isinstance(v, tuple):
            lines.append(f"{f.name} = [{', '.join(repr(x) for x in v)}]")
        else:
            lines.append(f"{f.name} = {v!r}")
    return "\n".join(lines) + "\n"


def _open_for_write(path: str | os.PathLike):
    try:
        return open(path, "w", newline="", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def write_snapshot_csv(path: str | os.PathLike, u: np.ndarray, target: np.ndarray) -> None:
    u = np.asarray(u, dtype=float)
    target = np.asarray(target, dtype=float)
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        for k, (uk, tk) in enumerate(zip(u, target), start=1):
            w.writerow((k, _fmt(uk), _fmt(float(uk) % (2 * math.pi)), _fmt(uk - tk)))


def read_snapshot_csv(path: str | os.PathLike) -> np.ndarray:
    """Phases ``u`` from a snapshot CSV, ordered by ``k``."""
    try:
        with open(path, newline="", encoding="ascii") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows or "k" not in rows[0] or "u" not in rows[0]:
        raise ConfigError(f"{path}: not a snapshot CSV (need columns k,u)")
    rows.sort(key=lambda r: int(r["k"]))
    return np.array([float(r["u"]) for r in rows])


def write_sweep_csv(rows: Iterable[SweepRow], path: str | os.PathLike, include_timing: bool = True) -> None:
    """Sweep table.  ``include_timing=False`` writes zero wall times for byte-stable output."""
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow((_fmt(r.b1), _fmt(r.r_measured), _fmt(r.r_predicted), _fmt(r.psi),
                        _fmt(r.mean_drift), _fmt(r.max_dev), int(r.converged), r.seed,
                        _fmt(r.wall_time if include_timing else 0.0)))


def read_sweep_csv(path: str | os.PathLike) -> list[dict[str, float]]:
    with open(path, newline="", encoding="ascii") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_table(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])


def sweep_plot_script(csv_path: str | os.PathLike, script_path: str | os.PathLike,
                      b1q: float | None = None, title: str = "") -> str:
    """Gnuplot script drawing measured and predicted amplitude against b1."""
    rel = os.path.relpath(csv_path, Path(script_path).resolve().parent)
    out = Path(rel).with_suffix(".svg").as_posix()
    marker = f"set arrow from {b1q!r}, graph 0 to {b1q!r}, graph 1 nohead dt 2\n" if b1q is not None else ""
    return f"""\
# Bifurcation diagram from {rel}
set datafile separator ","
set terminal svg size 640,480
set output "{out}"
set key top right
set xlabel "b_1"
set ylabel "r"
set title "{title}"
{marker}plot "{rel}" using 1:2 skip 1 with points pt 7 title "simulation", \\
     "{rel}" using 1:3 skip 1 with lines lw 2 title "normal form"
"""


def snapshot_plot_script(csv_path: str | os.PathLike, script_path: str | os.PathLike,
                         stride: int = 100, first: int = 50) -> str:
    """Gnuplot script of ``u mod 2 pi`` against ``k`` for every ``stride``-th node."""
    rel = os.path.relpath(csv_path, Path(script_path).resolve().parent)
    out = Path(rel).with_suffix(".svg").as_posix()
    return f"""\
# Phase profile from {rel}
set datafile separator ","
set terminal svg size 640,480
set output "{out}"
set xlabel "k"
set ylabel "u_k mod 2pi"
set yrange [0:2*pi]
plot "{rel}" every {stride}::{first - 1} using 1:3 skip 1 with points pt 7 notitle
"""


def write_text(path: str | os.PathLike, text: str) -> None:
    with _open_for_write(path) as fh:
        fh.write(text)
