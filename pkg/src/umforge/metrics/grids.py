"""Multi-scale multi-task evaluation grids (fidelity and variety).

A grid holds one value per (scale, task) cell: rows are the four scales
128..1024, columns the four extraction tasks. FID grids compare a real
dataset against a synthetic one; STD grids summarize a single dataset's
feature spread.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from ..errors import IncompleteGridError, ParameterError, ValidationError
from .gaussian import SCALES, TASKS, FeatureSet, frechet_distance, gaussian_summary


@dataclass(frozen=True)
class EvalGrid:
    """A scales x tasks matrix of FID or STD values."""

    kind: str
    cells: np.ndarray
    scales: tuple[int, ...] = SCALES
    tasks: tuple[str, ...] = TASKS
    normalized: bool = False
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("FID", "STD"):
            raise ValidationError(f"grid kind must be FID or STD, got {self.kind!r}")
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.shape != (len(self.scales), len(self.tasks)):
            raise ValidationError(
                f"cells shape {cells.shape} does not match "
                f"{len(self.scales)} scales x {len(self.tasks)} tasks"
            )
        if self.kind == "FID" and np.any(cells < 0):
            raise ValidationError("FID cells must be non-negative")
        if self.normalized and (np.any(cells < 0) or np.any(cells > 1)):
            raise ValidationError("normalized cells must lie in [0, 1]")
        cells = np.ascontiguousarray(cells)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "flags", tuple(self.flags))

    def cell(self, scale: int, task: str) -> float:
        return float(self.cells[self.scales.index(scale), self.tasks.index(task)])

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "scales": list(self.scales),
            "tasks": list(self.tasks),
            "cells": [[float(v) for v in row] for row in self.cells],
            "normalized": self.normalized,
            "flags": list(self.flags),
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalGrid":
        data = json.loads(text)
        return cls(
            kind=data["kind"],
            cells=np.asarray(data["cells"], dtype=np.float64),
            scales=tuple(data["scales"]),
            tasks=tuple(data["tasks"]),
            normalized=bool(data["normalized"]),
            flags=tuple(data.get("flags", ())),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scale", *self.tasks])
        for scale, row in zip(self.scales, self.cells):
            writer.writerow([scale, *(repr(float(v)) for v in row)])
        return buf.getvalue()


def _index_cells(sets, label: str) -> dict[tuple[int, str], FeatureSet]:
    index: dict[tuple[int, str], FeatureSet] = {}
    for fs in sets:
        key = (fs.scale, fs.task_id)
        if key in index:
            raise ParameterError(f"duplicate {label} feature cell for {key}")
        index[key] = fs
    return index


def mm_fid(
    real,
    synth,
    scales: tuple[int, ...] = SCALES,
    tasks: tuple[str, ...] = TASKS,
) -> EvalGrid:
    """Fréchet distance per (scale, task) cell between real and synthetic features."""
    real_ix = _index_cells(real, "real")
    synth_ix = _index_cells(synth, "synthetic")
    missing = [
        (s, t)
        for s in scales
        for t in tasks
        if (s, t) not in real_ix or (s, t) not in synth_ix
    ]
    if missing:
        raise IncompleteGridError(missing)
    cells = np.zeros((len(scales), len(tasks)))
    flags = []
    for i, s in enumerate(scales):
        for j, t in enumerate(tasks):
            value, details = frechet_distance(
                gaussian_summary(real_ix[(s, t)]),
                gaussian_summary(synth_ix[(s, t)]),
                return_details=True,
            )
            cells[i, j] = value
            if details.regularized:
                flags.append(f"regularized:{s}:{t}")
    return EvalGrid(kind="FID", cells=cells, scales=scales, tasks=tasks, flags=tuple(flags))


def mm_std(
    sets,
    scales: tuple[int, ...] = SCALES,
    tasks: tuple[str, ...] = TASKS,
) -> EvalGrid:
    """Variety grid: per cell, the mean over dimensions of the sample std (N-1)."""
    index = _index_cells(sets, "dataset")
    missing = [(s, t) for s in scales for t in tasks if (s, t) not in index]
    if missing:
        raise IncompleteGridError(missing)
    cells = np.zeros((len(scales), len(tasks)))
    for i, s in enumerate(scales):
        for j, t in enumerate(tasks):
            m = index[(s, t)].matrix
            cells[i, j] = float(m.std(axis=0, ddof=1).mean())
    return EvalGrid(kind="STD", cells=cells, scales=scales, tasks=tasks)


def mm_std_per_dimension(fs: FeatureSet) -> np.ndarray:
    """Per-dimension sample stds for one cell (exported for auditing)."""
    return fs.matrix.std(axis=0, ddof=1)


def normalize_grids(grids) -> list[EvalGrid]:
    """Min-max normalize each cell across methods; ties map every method to 0.

    Normalization is monotone per cell, so the per-cell ranking of methods
    is preserved.
    """
    grids = list(grids)
    if len(grids) < 2:
        raise ParameterError("normalization needs at least 2 method grids")
    kind = grids[0].kind
    scales = grids[0].scales
    tasks = grids[0].tasks
    for g in grids:
        if g.kind != kind or g.scales != scales or g.tasks != tasks:
            raise ParameterError("grids must share kind and cell layout")
        if g.normalized:
            raise ParameterError("grids are already normalized")
    stack = np.stack([g.cells for g in grids])
    lo = stack.min(axis=0)
    hi = stack.max(axis=0)
    span = hi - lo
    out = []
    for g in grids:
        with np.errstate(invalid="ignore", divide="ignore"):
            norm = np.where(span > 0, (g.cells - lo) / np.where(span > 0, span, 1.0), 0.0)
        out.append(
            EvalGrid(
                kind=kind,
                cells=norm,
                scales=scales,
                tasks=tasks,
                normalized=True,
                flags=g.flags,
            )
        )
    return out


def grid_summary(grid: EvalGrid) -> tuple[float, float]:
    """Across-cell mean and std (population) of a grid, for report headlines."""
    return float(grid.cells.mean()), float(grid.cells.std())
