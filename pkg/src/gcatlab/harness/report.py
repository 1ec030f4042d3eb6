"""Result containers and their on-disk forms (mesh files, CSV tables, manifests)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError

REPORT_COLUMNS = ("method", "dataset", "acc_mean", "acc_std", "time_ms_mean", "time_ms_std")


@dataclass
class ExperimentResult:
    """Accuracies and timings of one method over repeated splits.

    Standard deviations use the population convention (``ddof=0``).  The
    reported time of a repeat is ``transform_ms + train_ms``; one-off costs
    such as embedding training live in ``extra`` under keys ending in
    ``_ms``.
    """

    method: str
    dataset: str
    accuracies: list
    train_ms: list
    transform_ms: list
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.accuracies:
            raise ValidationError("an experiment result needs at least one repeat")
        if not len(self.accuracies) == len(self.train_ms) == len(self.transform_ms):
            raise ValidationError("per-repeat lists differ in length")
        if min(self.train_ms) < 0 or min(self.transform_ms) < 0:
            raise ValidationError("times must be non-negative")

    @property
    def acc_mean(self):
        return float(np.mean(self.accuracies))

    @property
    def acc_std(self):
        return float(np.std(self.accuracies))

    @property
    def time_ms(self):
        return [a + b for a, b in zip(self.transform_ms, self.train_ms)]

    @property
    def time_ms_mean(self):
        return float(np.mean(self.time_ms))

    @property
    def time_ms_std(self):
        return float(np.std(self.time_ms))

    def to_json(self):
        return {
            "method": self.method,
            "dataset": self.dataset,
            "accuracies": [float(a) for a in self.accuracies],
            "acc_mean": self.acc_mean,
            "acc_std": self.acc_std,
            "std_convention": "population",
            "train_ms": [float(t) for t in self.train_ms],
            "transform_ms": [float(t) for t in self.transform_ms],
            "time_ms_mean": self.time_ms_mean,
            "time_ms_std": self.time_ms_std,
            "config": self.config,
            "extra": self.extra,
        }


@dataclass
class SurfaceGrid:
    """Aggregate scores over a 2-D parameter grid; ``z[i, j]`` is for ``(x[i], y[j])``."""

    x_values: list
    y_values: list
    z: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        if self.z.shape != (len(self.x_values), len(self.y_values)):
            raise ValidationError(f"z has shape {self.z.shape}, grid is "
                                  f"{len(self.x_values)}x{len(self.y_values)}")

    @property
    def complete(self):
        return bool(np.all(np.isfinite(self.z)))

    def pruned(self):
        """Drop grid rows and columns with no finite cell at all."""
        ok = np.isfinite(self.z)
        rows = np.flatnonzero(ok.any(axis=1))
        cols = np.flatnonzero(ok.any(axis=0))
        return SurfaceGrid([self.x_values[i] for i in rows], [self.y_values[j] for j in cols],
                           self.z[np.ix_(rows, cols)], self.name)


def _num(v):
    return format(float(v), ".17g")


def emit_surface(grid, path):
    """Write ``x y z`` lines, grouped by ``x`` with a blank line between groups."""
    if not grid.complete:
        bad = np.argwhere(~np.isfinite(grid.z))[0]
        raise ValidationError(f"surface {grid.name!r} has a missing cell at "
                              f"x={grid.x_values[bad[0]]}, y={grid.y_values[bad[1]]}")
    lines = []
    for i, x in enumerate(grid.x_values):
        if i:
            lines.append("")
        for j, y in enumerate(grid.y_values):
            lines.append(f"{_num(x)} {_num(y)} {_num(grid.z[i, j])}")
    with open(Path(path), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_surface(path, name=""):
    """Parse a file written by :func:`emit_surface`."""
    xs, ys, cells = [], [], {}
    with open(Path(path)) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expected 'x y z'", lineno)
            try:
                x, y, z = (float(p) for p in parts)
            except ValueError:
                raise ParseError(f"non-numeric value in {line.strip()!r}", lineno) from None
            if x not in xs:
                xs.append(x)
            if y not in ys:
                ys.append(y)
            cells[(x, y)] = z
    z = np.full((len(xs), len(ys)), np.nan)
    for (x, y), v in cells.items():
        z[xs.index(x), ys.index(y)] = v
    return SurfaceGrid(xs, ys, z, name)


def emit_report(results, path):
    """Write the summary CSV and a ``.json`` sidecar with per-repeat values.

    Column order is fixed: ``method, dataset, acc_mean, acc_std,
    time_ms_mean, time_ms_std``.  Returns ``(csv_path, json_path)``.
    """
    results = list(results)
    if not results:
        raise ValidationError("no results to report")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in results:
            w.writerow([r.method, r.dataset, repr(r.acc_mean), repr(r.acc_std),
                        repr(r.time_ms_mean), repr(r.time_ms_std)])
    sidecar = path.with_suffix(".json")
    write_json(sidecar, {"columns": list(REPORT_COLUMNS), "results": [r.to_json() for r in results]})
    return path, sidecar


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload):
    with open(Path(path), "w") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(run_dir, command, config, outputs=()):
    """Record the command, its full configuration and the files it produced.

    No wall-clock timestamps are written, so identical runs produce
    identical manifests.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    root = run_dir.resolve()

    def rel(p):
        try:
            return Path(p).resolve().relative_to(root).as_posix()
        except ValueError:
            return str(p)

    payload = {"command": command, "config": config, "outputs": sorted(rel(p) for p in outputs)}
    write_json(run_dir / "manifest.json", payload)
    return run_dir / "manifest.json"


def strip_timing(obj):
    """Drop every key that holds a timing measurement.

    Timing keys end in ``_ms``, contain ``_ms_``, or mention ``seconds`` or
    ``time``.
    """
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items()
                if not (k.endswith("_ms") or "_ms_" in k or "seconds" in k or "time" in k)}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj
