"""Exact output reachable sets of ReLU/linear networks.

A reach set is a list of affine regions ``{M x + c | x in D}`` whose domains
live in the network's input space. A ReLU layer splits every region by the
sign of each pre-activation; a linear layer only composes the map. Nothing is
projected until export.

Two split strategies produce the same regions in the same order:

``patterns``
    enumerate all ``2**n`` activation patterns of the layer and test each
    candidate domain with one LP (neurons whose sign is fixed on the domain
    are resolved up front, which only skips provably empty candidates);
``neuronwise``
    split one neuron at a time, discarding empty branches as soon as they
    appear.

Closed half-spaces are used on both sides of every split, so pieces overlap
on their shared faces. Candidates whose domain has no interior (Chebyshev
radius below ``radius_tol``) are dropped when the root input piece has an
interior: by continuity their outputs are already produced by the adjacent
full-dimensional pieces.
"""

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .errors import DimensionMismatch, PatternSpaceTooLarge, RegionCapExceeded
from .geometry import (
    AffineRegion,
    Polyhedron,
    UnionOfPolyhedra,
    chebyshev_ball,
    region_to_polyhedron,
    remove_redundancy,
    vertices_2d,
)
from .geometry.lp import solve_lp
from .netmodel import PATTERN_CAP, Layer, Network

log = logging.getLogger(__name__)

MODES = ("patterns", "neuronwise")
RADIUS_TOL = 1e-9
REGION_CAP = 100_000


@dataclass(frozen=True)
class ReachOptions:
    mode: str = "neuronwise"
    jobs: int = 1
    pattern_cap: int = PATTERN_CAP
    radius_tol: float = RADIUS_TOL
    region_cap: Optional[int] = REGION_CAP
    # Domains are reduced once they carry more than this many rows per input dimension.
    redundancy_factor: int = 4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


@dataclass(frozen=True, eq=False)
class Piece:
    """A reach-set region plus its provenance and a witness ball of its domain."""

    region: AffineRegion
    root: int
    codes: tuple  # activation-pattern index per ReLU layer so far
    center: np.ndarray
    radius: float


@dataclass(eq=False)
class ReachSet:
    pieces: List[Piece]
    layer_index: int
    # Per input piece: whether lower-dimensional descendants may be dropped.
    solid_roots: tuple = ()

    @property
    def regions(self):
        return [p.region for p in self.pieces]

    def __len__(self):
        return len(self.pieces)

    @property
    def out_dim(self):
        return self.pieces[0].region.out_dim if self.pieces else None

    def to_json(self, stats=None):
        regions = []
        for p in self.pieces:
            r = p.region.to_json()
            r["root"] = p.root
            r["codes"] = list(p.codes)
            regions.append(r)
        out = {"layer": self.layer_index, "regions": regions, "solid_roots": list(self.solid_roots)}
        if stats is not None:
            out["stats"] = stats.counts_json()
        return out

    @classmethod
    def from_json(cls, obj):
        from .errors import ParseError

        try:
            pieces = []
            for r in obj["regions"]:
                region = AffineRegion.from_json(r)
                pieces.append(Piece(region, int(r.get("root", 0)), tuple(r.get("codes", ())),
                                    None, float("nan")))
            return cls(pieces, int(obj.get("layer", 0)), tuple(obj.get("solid_roots", ())))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed reach file: {exc}") from exc


@dataclass
class ReachStats:
    per_layer_counts: List[int] = field(default_factory=list)
    per_layer_pruned: List[int] = field(default_factory=list)
    per_layer_candidates: List[int] = field(default_factory=list)
    per_layer_seconds: List[float] = field(default_factory=list)
    per_layer_bound: List[int] = field(default_factory=list)
    initial_count: int = 0
    mode: str = "neuronwise"
    jobs: int = 1

    @property
    def total_seconds(self):
        return float(sum(self.per_layer_seconds))

    def counts_json(self):
        return {
            "initial_count": self.initial_count,
            "per_layer_counts": self.per_layer_counts,
            "per_layer_pruned": self.per_layer_pruned,
            "per_layer_candidates": self.per_layer_candidates,
            "per_layer_bound": self.per_layer_bound,
        }

    def to_json(self):
        out = self.counts_json()
        out.update(mode=self.mode, jobs=self.jobs, per_layer_seconds=self.per_layer_seconds,
                   total_seconds=self.total_seconds)
        return out


# ---------------------------------------------------------------------------
# per-region split kernels (run inside worker processes)


def _with_rows(D, rows, rhs):
    return Polyhedron(np.vstack([D.A, rows]), np.concatenate([D.b, rhs]), D.E, D.f, dim=D.dim)


def _sign_rows(Mp, cp, bits):
    """Rows ``G x <= g`` asserting the sign of each neuron in ``bits`` (1: >= 0, 0: <= 0)."""
    s = np.where(np.asarray(bits) == 1, -1.0, 1.0)
    return s[:, None] * Mp, -s * cp


def _keep(ball, solid, radius_tol):
    if ball is None:
        return False
    return ball.radius > radius_tol or not solid


def _reduce(D, factor):
    if factor and D.n_ineq > factor * D.dim:
        return remove_redundancy(D)
    return D


def _emit(piece, D, bits, Mp, cp, ball, h):
    mask = np.asarray(bits, dtype=float)
    region = AffineRegion(D, mask[:, None] * Mp, mask * cp)
    return Piece(region, piece.root, piece.codes + (h,), ball.center, ball.radius)


def _split_patterns(piece, W, theta, solid, opts):
    D = piece.region.domain
    Mp = W @ piece.region.map
    cp = W @ piece.region.offset + theta
    n = W.shape[0]
    if n > opts.pattern_cap:
        raise PatternSpaceTooLarge(n, opts.pattern_cap)
    # Neurons whose sign cannot change on D; the opposite patterns are empty.
    fixed = {}
    for i in range(n):
        lo = solve_lp(Mp[i], D.A, D.b, D.E, D.f)
        hi = solve_lp(-Mp[i], D.A, D.b, D.E, D.f)
        if lo.status == "optimal" and lo.objective + cp[i] > opts.radius_tol * np.linalg.norm(Mp[i]) + 1e-12:
            fixed[i] = 1
        elif hi.status == "optimal" and -hi.objective + cp[i] < -(opts.radius_tol * np.linalg.norm(Mp[i]) + 1e-12):
            fixed[i] = 0
    out = []
    for h in range(2**n):
        bits = tuple((h >> (n - 1 - i)) & 1 for i in range(n))
        if any(bits[i] != v for i, v in fixed.items()):
            continue
        G, g = _sign_rows(Mp, cp, bits)
        cand = _with_rows(D, G, g)
        ball = chebyshev_ball(cand)
        if _keep(ball, solid, opts.radius_tol):
            out.append(_emit(piece, cand, bits, Mp, cp, ball, h))
    return out, 2**n


def _split_neuronwise(piece, W, theta, solid, opts):
    D = piece.region.domain
    Mp = W @ piece.region.map
    cp = W @ piece.region.offset + theta
    n = W.shape[0]
    # (bits, domain, center, radius); a known ball avoids the LP on its side.
    frontier = [((), D, piece.center, piece.radius)]
    generated = 0
    for i in range(n):
        nxt = []
        row_norm = float(np.linalg.norm(Mp[i]))
        for bits, dom, z, r in frontier:
            v = float(Mp[i] @ z + cp[i]) if z is not None else None
            for bit in (0, 1):
                generated += 1
                sign = 1.0 if bit else -1.0
                G, g = _sign_rows(Mp[i:i + 1], cp[i:i + 1], (bit,))
                cand = _with_rows(dom, G, g)
                if v is not None and np.isfinite(r) and sign * v >= r * row_norm:
                    # The parent's inscribed ball lies on this side.
                    nxt.append((bits + (bit,), cand, z, r))
                    continue
                ball = chebyshev_ball(cand)
                if _keep(ball, solid, opts.radius_tol):
                    nxt.append((bits + (bit,), cand, ball.center, ball.radius))
        frontier = nxt
    out = []
    for bits, dom, z, r in frontier:
        h = int("".join(map(str, bits)), 2)
        ball = _Ball(z, r)
        out.append(_emit(piece, dom, bits, Mp, cp, ball, h))
    # Count candidates as in the pattern view so stats are comparable across modes.
    return out, generated


@dataclass(frozen=True)
class _Ball:
    center: np.ndarray
    radius: float


def _relu_chunk(args):
    pieces, W, theta, solids, opts = args
    split = _split_patterns if opts.mode == "patterns" else _split_neuronwise
    results = []
    for piece in pieces:
        out, candidates = split(piece, W, theta, solids[piece.root], opts)
        out = [replace(p, region=replace(p.region, domain=_reduce(p.region.domain, opts.redundancy_factor)))
               for p in out]
        results.append((out, candidates))
    return results


# ---------------------------------------------------------------------------
# public layer operations


def _layer_params(layer, X):
    if X.pieces and X.out_dim != layer.in_dim:
        raise DimensionMismatch(f"reach set has dimension {X.out_dim}, layer expects {layer.in_dim}")
    return layer.weights, layer.bias


def _run_relu(layer, X, opts, pool=None):
    W, theta = _layer_params(layer, X)
    if opts.mode == "patterns" and layer.out_dim > opts.pattern_cap:
        raise PatternSpaceTooLarge(layer.out_dim, opts.pattern_cap)
    solids = X.solid_roots
    if pool is None or len(X.pieces) < 2:
        results = _relu_chunk((X.pieces, W, theta, solids, opts))
    else:
        # Enough chunks to balance load, few enough to amortize pickling.
        n_chunks = min(len(X.pieces), opts.jobs * 8)
        bounds = np.linspace(0, len(X.pieces), n_chunks + 1).astype(int)
        tasks = [(X.pieces[a:b], W, theta, solids, opts) for a, b in zip(bounds[:-1], bounds[1:])]
        results = [r for chunk in pool.map(_relu_chunk, tasks) for r in chunk]
    pieces = [p for out, _ in results for p in out]
    candidates = sum(c for _, c in results)
    return ReachSet(pieces, X.layer_index + 1, X.solid_roots), candidates


def relu_layer_reach_patterns(layer: Layer, X: ReachSet, **kw) -> ReachSet:
    """ReLU layer image by enumerating activation patterns per region."""
    return _run_relu(layer, X, ReachOptions(mode="patterns", **kw))[0]


def relu_layer_reach_neuronwise(layer: Layer, X: ReachSet, **kw) -> ReachSet:
    """ReLU layer image by splitting one neuron at a time."""
    return _run_relu(layer, X, ReachOptions(mode="neuronwise", **kw))[0]


def linear_layer_reach(layer: Layer, X: ReachSet) -> ReachSet:
    W, theta = _layer_params(layer, X)
    pieces = [replace(p, region=p.region.compose(W, theta)) for p in X.pieces]
    return ReachSet(pieces, X.layer_index + 1, X.solid_roots)


def seed_reach_set(X0: UnionOfPolyhedra, radius_tol=RADIUS_TOL) -> ReachSet:
    """Identity regions over the nonempty input pieces."""
    pieces, solids = [], []
    for s, P in enumerate(X0.pieces):
        ball = chebyshev_ball(P)
        solids.append(ball is not None and ball.radius > radius_tol)
        if ball is None:
            log.warning("input piece %d is empty; dropped", s)
            continue
        pieces.append(Piece(AffineRegion.identity(P), s, (), ball.center, ball.radius))
    return ReachSet(pieces, 0, tuple(solids))


def network_reach(net: Network, X0: UnionOfPolyhedra, mode="neuronwise", jobs=1, **kw):
    """Reach set of the whole network; returns ``(ReachSet, ReachStats)``.

    The result does not depend on ``mode`` or ``jobs``: regions come back in
    (parent region, activation pattern) order regardless of scheduling.
    """
    if X0.dim != net.input_dim:
        raise DimensionMismatch(f"input set has dimension {X0.dim}, network expects {net.input_dim}")
    opts = ReachOptions(mode=mode, jobs=jobs, **kw)
    X = seed_reach_set(X0, opts.radius_tol)
    stats = ReachStats(initial_count=len(X), mode=mode, jobs=jobs)
    bound = len(X0.pieces)
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for k, layer in enumerate(net.layers, start=1):
            t0 = time.perf_counter()
            if layer.activation == "relu":
                X, candidates = _run_relu(layer, X, opts, pool)
                bound *= 2**layer.out_dim
            else:
                X = linear_layer_reach(layer, X)
                candidates = len(X)
            stats.per_layer_seconds.append(time.perf_counter() - t0)
            stats.per_layer_counts.append(len(X))
            stats.per_layer_candidates.append(candidates)
            stats.per_layer_pruned.append(candidates - len(X))
            stats.per_layer_bound.append(bound)
            log.info("layer %d (%s): %d regions, %d pruned, %.2fs", k, layer.activation, len(X),
                     candidates - len(X), stats.per_layer_seconds[-1])
            if opts.region_cap is not None and len(X) > opts.region_cap:
                raise RegionCapExceeded(len(X), opts.region_cap, k)
    finally:
        if pool is not None:
            pool.shutdown()
    return X, stats


def relu_function_reach(X: UnionOfPolyhedra, **kw) -> UnionOfPolyhedra:
    """Image of a union of polyhedra under the coordinatewise ReLU, as H-reps."""
    n = X.dim
    layer = Layer(np.eye(n), np.zeros(n), "relu")
    opts = ReachOptions(mode=kw.pop("mode", "patterns"), **kw)
    Y, _ = _run_relu(layer, seed_reach_set(X, opts.radius_tol), opts)
    return UnionOfPolyhedra(tuple(region_to_polyhedron(r) for r in Y.regions), dim=n)


def export_reach(Y: ReachSet, form="regions"):
    """``regions``: JSON-ready regions; ``hrep``: UnionOfPolyhedra; ``polygons2d``: vertex lists."""
    if form == "regions":
        return Y.to_json()
    if form == "hrep":
        return UnionOfPolyhedra(tuple(region_to_polyhedron(r) for r in Y.regions), dim=Y.out_dim)
    if form == "polygons2d":
        if Y.pieces and Y.out_dim != 2:
            raise DimensionMismatch(f"polygons2d needs 2 outputs, reach set has {Y.out_dim}")
        return [vertices_2d(region_to_polyhedron(r)) for r in Y.regions]
    raise ValueError(f"unknown export form {form!r}")


def default_jobs():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
