"""Sampling-based validation of computed reach sets.

Nothing here trusts the reach computation: outputs come from plain forward
evaluation and membership is decided against the emitted regions directly.
"""

import csv
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import DimensionMismatch, Unbounded
from .geometry import bounding_box, interior_point, region_residual
from .netmodel import Network, forward

SOUNDNESS_TOL = 1e-6
COMPLETENESS_TOL = 1e-9


def _piece_box(P):
    lo, hi = bounding_box(P)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise Unbounded("grid sampling needs bounded input pieces")
    return lo, hi


def grid_points(lo, hi, per_axis=None, step=None):
    if (per_axis is None) == (step is None):
        raise ValueError("give exactly one of per_axis or step")
    axes = []
    for a, b in zip(lo, hi):
        if per_axis is not None:
            axes.append(np.linspace(a, b, per_axis) if b > a else np.array([a]))
        else:
            count = int(np.floor((b - a) / step + 1e-9)) + 1
            axes.append(a + step * np.arange(count))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sample_input_set(X0, strategy="grid", per_axis=None, step=None, n=None, seed=0, tol=1e-9):
    """Points of ``X0``.

    ``grid`` lays a regular grid (``per_axis`` points per axis, or spacing
    ``step``) over each piece's bounding box and keeps members. ``uniform``
    draws ``n`` points by rejection from the bounding boxes, choosing pieces
    in proportion to box volume.
    """
    if strategy == "grid":
        if per_axis is None and step is None:
            per_axis = 20
        chunks = []
        for P in X0.pieces:
            lo, hi = _piece_box(P)
            G = grid_points(lo, hi, per_axis, step)
            chunks.append(G[P.contains_many(G, tol)])
        return np.vstack(chunks) if chunks else np.zeros((0, X0.dim))
    if strategy == "uniform":
        if n is None:
            raise ValueError("uniform sampling needs n")
        rng = np.random.default_rng(seed)
        boxes = [_piece_box(P) for P in X0.pieces]
        vols = np.array([np.prod(np.maximum(hi - lo, 1e-12)) for lo, hi in boxes])
        which = rng.choice(len(boxes), size=n, p=vols / vols.sum())
        out = np.empty((n, X0.dim))
        for s, (lo, hi) in enumerate(boxes):
            slots = np.flatnonzero(which == s)
            got = []
            need, tries = len(slots), 0
            while need > 0:
                tries += 1
                if tries > 1000:
                    raise RuntimeError(f"rejection sampling failed on piece {s}; it may have no volume")
                batch = rng.uniform(lo, hi, size=(max(2 * need, 64), X0.dim))
                batch = batch[X0.pieces[s].contains_many(batch, tol)][:need]
                got.append(batch)
                need -= len(batch)
            if len(slots):
                out[slots] = np.vstack(got)
        return out
    raise ValueError(f"unknown strategy {strategy!r}")


@dataclass
class SoundnessReport:
    n_samples: int
    failures: List[dict] = field(default_factory=list)
    max_residual: float = 0.0
    tol: float = SOUNDNESS_TOL

    @property
    def ok(self):
        return not self.failures

    def to_json(self):
        # An output no region can reach has no finite residual.
        max_res = self.max_residual if np.isfinite(self.max_residual) else None
        return {"n_samples": self.n_samples, "n_failures": len(self.failures), "failures": self.failures,
                "max_residual": max_res, "tol": self.tol, "ok": self.ok}


def _output_boxes(Y):
    boxes = []
    for region in Y.regions:
        lo, hi = bounding_box(region.domain)
        # Interval image of the domain box; a cheap superset of the region's outputs.
        M, c = region.map, region.offset
        mid, rad = (lo + hi) / 2, (hi - lo) / 2
        center = M @ np.where(np.isfinite(mid), mid, 0.0) + c
        spread = np.abs(M) @ np.where(np.isfinite(rad), rad, np.inf)
        boxes.append((center - spread, center + spread))
    return boxes


def reach_residuals(Y, X, F, tol=SOUNDNESS_TOL):
    """Smallest membership residual of each output ``F[k]`` in the reach set.

    Tries the region whose domain holds the sampled input first; falls back to
    one LP per candidate region (filtered by output boxes) otherwise.
    """
    best = np.full(len(X), np.inf)
    regions = Y.regions
    if regions and regions[0].in_dim == X.shape[1] and regions[0].out_dim == F.shape[1]:
        for region in regions:
            inside = region.domain.contains_many(X, 1e-9)
            if inside.any():
                res = np.max(np.abs(region.apply(X[inside]) - F[inside]), axis=1)
                best[inside] = np.minimum(best[inside], res)
    elif regions and regions[0].out_dim != F.shape[1]:
        raise DimensionMismatch(f"reach set has {regions[0].out_dim} outputs, samples have {F.shape[1]}")
    todo = np.flatnonzero(best > tol)
    if todo.size:
        boxes = _output_boxes(Y)
        for k in todo:
            for region, (lo, hi) in zip(regions, boxes):
                if np.any(F[k] < lo - tol) or np.any(F[k] > hi + tol):
                    continue
                best[k] = min(best[k], region_residual(region, F[k]))
                if best[k] <= tol:
                    break
    return best


def check_soundness(net, Y, samples, tol=SOUNDNESS_TOL):
    """Every ``forward(net, x)`` must lie in ``Y``; failures are reported, not raised."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    F = forward(net, X)
    try:
        best = reach_residuals(Y, X, F, tol)
    except DimensionMismatch:
        best = np.full(len(X), np.inf)
    bad = np.flatnonzero(best > tol)
    failures = [{"index": int(k), "x": X[k].tolist(), "y": F[k].tolist(),
                 "residual": None if not np.isfinite(best[k]) else float(best[k])} for k in bad]
    return SoundnessReport(len(X), failures, float(best.max()) if len(best) else 0.0, tol)


@dataclass
class CompletenessReport:
    n_regions: int
    residuals: np.ndarray
    tol: float = COMPLETENESS_TOL

    @property
    def max_residual(self):
        return float(self.residuals.max()) if self.residuals.size else 0.0

    @property
    def failures(self):
        return [int(k) for k in np.flatnonzero(self.residuals > self.tol)]

    @property
    def ok(self):
        return not self.failures


def check_completeness(net, Y, tol=COMPLETENESS_TOL):
    """Each region's Chebyshev center ``z`` must satisfy ``forward(net, z) == M z + c``.

    ``Y`` must be the reach set of the whole network. The center is
    recomputed here rather than taken from the reach computation.
    """
    res = np.empty(len(Y.regions))
    for k, region in enumerate(Y.regions):
        z = interior_point(region.domain)
        res[k] = np.max(np.abs(forward(net, z) - region.apply(z)[0]))
    return CompletenessReport(len(res), res, tol)


def brute_force_reach(net, X0, resolution):
    """Dense forward images of a grid with spacing ``resolution`` over ``X0``."""
    if net.input_dim > 3:
        raise DimensionMismatch("brute_force_reach is meant for input dimension <= 3")
    X = sample_input_set(X0, "grid", step=resolution)
    return forward(net, X)


def prefix_network(net, depth):
    return Network(net.layers[:depth], net.input_dim)


def write_samples_csv(path, X, F):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(X.shape[1])] + [f"y{i}" for i in range(F.shape[1])])
        for x, y in zip(X, F):
            w.writerow([format(v, ".17g") for v in np.concatenate([x, y])])
