"""Deterministic artifact writers: CSV tables and JSON summaries.

Every artifact starts with the sha256 of the config file that produced
it, so a result can always be traced back to its exact inputs.  Floats
are written with %.17g (lossless for doubles) and nothing time- or
host-dependent ever enters a file: identical config and seed must give
bit-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .evolve import Trajectory

__all__ = [
    "write_table",
    "write_trajectory_csv",
    "write_snapshots",
    "write_spectrum_csv",
    "write_sweep_csv",
    "write_json_report",
]

_FMT = "%.17g"


def _fmt(value: float) -> str:
    return _FMT % float(value)


def write_table(path: str | Path, columns: Iterable[str], rows: np.ndarray,
                config_hash: str, comments: Iterable[str] = ()) -> Path:
    """Write a CSV table with the config hash and column header on top."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    lines = [f"# config_sha256: {config_hash}"]
    lines += [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trajectory_csv(traj: Trajectory, path: str | Path, config_hash: str) -> Path:
    return write_table(path, traj.columns, traj.table(), config_hash)


def write_snapshots(traj: Trajectory, directory: str | Path, config_hash: str) -> list[Path]:
    """One CSV per stored snapshot time (cable fields), plus a delay-line file.

    Cable files carry columns x, y, z with the scalar traces in comments;
    the companion ``*_delay.csv`` carries columns s, u on the delay grid.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for idx, (t, state) in enumerate(zip(traj.snapshot_times, traj.snapshots)):
        grid = state.grid
        comments = [f"t: {_fmt(t)}", f"xi: {_fmt(state.xi)}", f"eta: {_fmt(state.eta)}"]
        cable = np.column_stack([grid.x, state.y, state.z])
        written.append(write_table(directory / f"snapshot_{idx:04d}.csv",
                                   ("x", "y", "z"), cable, config_hash, comments))
        delay = np.column_stack([grid.s, state.u])
        written.append(write_table(directory / f"snapshot_{idx:04d}_delay.csv",
                                   ("s", "u"), delay, config_hash, comments[:1]))
    return written


def write_spectrum_csv(report, path: str | Path, config_hash: str) -> Path:
    lam = np.asarray(report.eigenvalues)
    rows = np.column_stack([lam.real, lam.imag])
    return write_table(path, ("re", "im"), rows, config_hash,
                       comments=[f"restricted: {report.restricted}"])


def write_sweep_csv(sweep, path: str | Path, config_hash: str) -> Path:
    rows = np.column_stack([sweep.gammas, sweep.norms, sweep.scaled])
    return write_table(path, ("gamma", "norm", "scaled"), rows, config_hash)


def _jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [[float(v.real), float(v.imag)] for v in obj]
        return [_jsonable(float(v)) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_json_report(payload: dict, path: str | Path, config_hash: str) -> Path:
    """Serialize a report dict (dataclasses welcome) with the config hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config_sha256": config_hash}
    body.update(_jsonable(payload))
    path.write_text(json.dumps(body, sort_keys=True, indent=2,
                               allow_nan=True) + "\n")
    return path
