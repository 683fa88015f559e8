"""Vertex enumeration for bounded planar polyhedra (plot export)."""

from itertools import combinations

import numpy as np

from ..errors import DimensionMismatch, EmptyPolyhedron, Unbounded
from .lp import TOL, solve_lp
from .polyhedron import is_empty

_MERGE = 1e-7


def _check_bounded(P):
    for i in range(P.dim):
        for sign in (1.0, -1.0):
            c = np.zeros(P.dim)
            c[i] = sign
            if solve_lp(c, P.A, P.b, P.E, P.f).status == "unbounded":
                raise Unbounded("vertices_2d needs a bounded polyhedron")


def _unique_points(pts):
    out = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) <= _MERGE * max(1.0, np.max(np.abs(q))) for q in out):
            out.append(p)
    return out


def vertices_2d(P):
    """Counter-clockwise vertices of a bounded planar polyhedron.

    Starts at the lowest (then leftmost) vertex. A segment comes back as its
    two endpoints, a single point as one vertex.
    """
    if P.dim != 2:
        raise DimensionMismatch(f"vertices_2d needs dimension 2, got {P.dim}")
    if is_empty(P):
        raise EmptyPolyhedron("vertices_2d of an empty polyhedron")
    _check_bounded(P)

    rows = np.vstack([P.A, P.E])
    rhs = np.concatenate([P.b, P.f])
    norms = np.linalg.norm(rows, axis=1)
    nz = norms > TOL
    rows, rhs = rows[nz] / norms[nz, None], rhs[nz] / norms[nz]

    cands = []
    for i, j in combinations(range(rows.shape[0]), 2):
        M = rows[[i, j]]
        if abs(np.linalg.det(M)) <= 1e-12:
            continue
        cands.append(np.linalg.solve(M, rhs[[i, j]]))
    tol = 1e-7
    pts = [p for p in cands if P.slack(p)[0] <= tol]
    pts = _unique_points(pts)
    if not pts:
        raise EmptyPolyhedron("no vertices found; polyhedron is numerically empty")
    return order_ccw(np.array(pts))


def _pt(p):
    return (float(p[0]) + 0.0, float(p[1]) + 0.0)


def order_ccw(pts):
    """Convex-position ordering; drops points interior to the hull's edges."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) == 1:
        return [_pt(pts[0])]
    start = np.lexsort((pts[:, 0], pts[:, 1]))[0]
    spread = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(spread, full_matrices=False)
    if s.size < 2 or s[1] <= 1e-9 * max(1.0, s[0]):
        # Collinear: return the two extreme points along the line.
        t = spread @ vt[0]
        a, b = pts[np.argmin(t)], pts[np.argmax(t)]
        a, b = sorted([a, b], key=lambda p: (p[1], p[0]))
        return [_pt(a), _pt(b)]
    # Monotone chain hull, then rotate to start at the lowest-leftmost point.
    order = sorted(range(len(pts)), key=lambda k: (pts[k, 0], pts[k, 1]))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for k in order:
        while len(lower) >= 2 and cross(pts[lower[-2]], pts[lower[-1]], pts[k]) <= 1e-12:
            lower.pop()
        lower.append(k)
    for k in reversed(order):
        while len(upper) >= 2 and cross(pts[upper[-2]], pts[upper[-1]], pts[k]) <= 1e-12:
            upper.pop()
        upper.append(k)
    hull = lower[:-1] + upper[:-1]
    i0 = hull.index(start) if start in hull else 0
    hull = hull[i0:] + hull[:i0]
    return [_pt(pts[k]) for k in hull]
