"""Analysis artifacts for variational runs: landscape planes, trajectory PCA, CSV export."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .optimizers import OptimizerTrace, trace_rows


class MonitorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LandscapeScan:
    center: np.ndarray
    u: np.ndarray
    v: np.ndarray
    extent: tuple[float, float]
    k: int
    energies: np.ndarray  # energies[i, j] at center + a_i u + b_j v

    @property
    def a(self) -> np.ndarray:
        return np.linspace(-self.extent[0], self.extent[0], 2 * self.k + 1)

    @property
    def b(self) -> np.ndarray:
        return np.linspace(-self.extent[1], self.extent[1], 2 * self.k + 1)


def orthonormalize(u, v, eps: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt on two directions."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u)
    if nu < eps:
        raise MonitorError("first scan direction is zero")
    u = u / nu
    v = v - (v @ u) * u
    nv = np.linalg.norm(v)
    if nv < eps * max(1.0, np.linalg.norm(v)):
        raise MonitorError("scan directions are parallel")
    return u, v / nv


def landscape_scan(obj, center, u=None, v=None, extent=1.0, k: int = 10) -> LandscapeScan:
    """Evaluate ``obj`` on a (2k+1)² grid spanning a plane through ``center``.

    Directions default to the first two coordinate axes. ``extent`` is the
    half-width along each axis (a scalar or a pair).
    """
    if k < 1:
        raise MonitorError(f"resolution k must be >= 1, got {k}")
    center = np.asarray(center, dtype=float).ravel()
    d = center.size
    if u is None or v is None:
        if d < 2:
            raise MonitorError("need at least a 2-D parameter space for a default plane")
        u = np.eye(d)[0] if u is None else u
        v = np.eye(d)[1] if v is None else v
    u, v = orthonormalize(u, v)
    ext = (float(extent), float(extent)) if np.isscalar(extent) else tuple(float(e) for e in extent)
    a = np.linspace(-ext[0], ext[0], 2 * k + 1)
    b = np.linspace(-ext[1], ext[1], 2 * k + 1)
    grid = np.empty((2 * k + 1, 2 * k + 1))
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            if i == k and j == k:
                grid[i, j] = obj(center)
            else:
                grid[i, j] = obj(center + ai * u + bj * v)
    return LandscapeScan(center, u, v, ext, k, grid)


@dataclass(frozen=True, eq=False)
class TrajectoryProjection:
    coords: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    total_variance: float


def project_trajectory(trace_or_params) -> TrajectoryProjection:
    """PCA of the parameter history onto its top two components.

    A constant trajectory projects to all-zero coordinates with zero variance.
    Component signs are fixed so each component's largest entry is positive.
    """
    params = trace_or_params.params if isinstance(trace_or_params, OptimizerTrace) else trace_or_params
    X = np.asarray(params, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise MonitorError("trajectory projection needs at least 2 iterates")
    n, d = X.shape
    Xc = X - X.mean(axis=0)
    _, svals, vt = np.linalg.svd(Xc, full_matrices=False)
    comps = np.zeros((2, d))
    var = np.zeros(2)
    r = min(2, vt.shape[0])
    comps[:r] = vt[:r]
    var[:r] = svals[:r] ** 2 / n
    for c in range(2):
        if var[c] <= 0:
            comps[c] = 0.0
            var[c] = 0.0
            continue
        pivot = np.argmax(np.abs(comps[c]))
        if comps[c, pivot] < 0:
            comps[c] = -comps[c]
    total = float((Xc ** 2).sum() / n)
    ratio = var / total if total > 0 else np.zeros(2)
    return TrajectoryProjection(Xc @ comps.T, comps, var, ratio, total)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_table(header, rows, destination) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    text = buf.getvalue()
    if destination is not None:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def export(artifact, destination: Optional[os.PathLike] = None) -> str:
    """Write a trace, scan or projection as CSV; returns the text written."""
    if isinstance(artifact, OptimizerTrace):
        header, rows = trace_rows(artifact)
    elif isinstance(artifact, LandscapeScan):
        header = ["a", "b", "energy"]
        rows = [
            [ai, bj, artifact.energies[i, j]]
            for i, ai in enumerate(artifact.a)
            for j, bj in enumerate(artifact.b)
        ]
    elif isinstance(artifact, TrajectoryProjection):
        header = ["iter", "x", "y"]
        rows = [[k, xy[0], xy[1]] for k, xy in enumerate(artifact.coords)]
    else:
        raise MonitorError(f"cannot export {type(artifact).__name__}")
    return _write_table(header, rows, destination)


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader])
    return header, data
