"""H-representation polyhedra, affine regions and unions of polyhedra."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DimensionMismatch, EmptyPolyhedron, ParseError
from .lp import TOL, LpOutcome, as_matrix, as_vector, check_finite, solve_lp

# Half-width of the box used to regularize ball LPs over unbounded sets.
BIG = 1e6


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """``{x in R^dim | A x <= b, E x = f}``.

    Zero inequality and equality rows denote the whole space.
    """

    A: np.ndarray
    b: np.ndarray
    E: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    dim: Optional[int] = None

    def __post_init__(self):
        dim = self.dim
        if dim is None:
            for m in (self.A, self.E):
                m = np.asarray(m if m is not None else [], dtype=float)
                if m.ndim == 2 and m.shape[1] > 0:
                    dim = m.shape[1]
                    break
            else:
                raise DimensionMismatch("cannot infer dimension of a polyhedron without rows; pass dim=")
        dim = int(dim)
        if dim < 1:
            raise DimensionMismatch("polyhedron dimension must be positive")
        A = as_matrix(self.A, dim, "A")
        b = as_vector(self.b, A.shape[0], "b")
        E = as_matrix(self.E if self.E is not None else np.zeros((0, dim)), dim, "E")
        f = as_vector(self.f if self.f is not None else np.zeros(0), E.shape[0], "f")
        check_finite(A, b, E, f)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "E", _frozen(E))
        object.__setattr__(self, "f", _frozen(f))

    @classmethod
    def universe(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @classmethod
    def box(cls, lower, upper):
        lower = as_vector(lower)
        upper = as_vector(upper, lower.shape[0])
        eye = np.eye(lower.shape[0])
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    @classmethod
    def from_json(cls, obj):
        try:
            A = obj.get("A") or []
            E = obj.get("E") or []
            dim = obj.get("dim")
            if dim is None:
                rows = A or E
                if not rows:
                    raise ParseError("polyhedron needs rows or an explicit 'dim'")
                dim = len(rows[0])
            return cls(np.array(A, dtype=float).reshape(-1, dim), obj.get("b") or [],
                       np.array(E, dtype=float).reshape(-1, dim), obj.get("f") or [], dim=dim)
        except (TypeError, AttributeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed polyhedron: {exc}") from exc

    def to_json(self):
        out = {"dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist()}
        if self.n_eq:
            out["E"] = self.E.tolist()
            out["f"] = self.f.tolist()
        return out

    @property
    def n_ineq(self):
        return self.A.shape[0]

    @property
    def n_eq(self):
        return self.E.shape[0]

    def slack(self, X):
        """Worst normalized violation per point (``<= 0`` inside); ``X`` is (k, dim) or (dim,)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"points have dimension {X.shape[1]}, polyhedron {self.dim}")
        worst = np.full(X.shape[0], -np.inf)
        if self.n_ineq:
            na = np.linalg.norm(self.A, axis=1)
            viol = (X @ self.A.T - self.b) / np.where(na > 0, na, 1.0)
            worst = np.maximum(worst, viol.max(axis=1))
        if self.n_eq:
            ne = np.linalg.norm(self.E, axis=1)
            viol = np.abs(X @ self.E.T - self.f) / np.where(ne > 0, ne, 1.0)
            worst = np.maximum(worst, viol.max(axis=1))
        return worst

    def contains(self, x, tol=TOL):
        return bool(self.slack(as_vector(x, self.dim))[0] <= tol)

    def contains_many(self, X, tol=TOL):
        return self.slack(X) <= tol


@dataclass(frozen=True, eq=False)
class UnionOfPolyhedra:
    pieces: tuple
    dim: Optional[int] = None

    def __post_init__(self):
        pieces = tuple(self.pieces)
        dims = {p.dim for p in pieces}
        if len(dims) > 1:
            raise DimensionMismatch(f"union pieces have mixed dimensions {sorted(dims)}")
        dim = self.dim if self.dim is not None else (dims.pop() if dims else None)
        if pieces and pieces[0].dim != dim:
            raise DimensionMismatch("union dim does not match its pieces")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "dim", dim)

    def __len__(self):
        return len(self.pieces)

    def __iter__(self):
        return iter(self.pieces)

    def contains(self, x, tol=TOL):
        return any(p.contains(x, tol) for p in self.pieces)

    def contains_many(self, X, tol=TOL):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        hit = np.zeros(X.shape[0], dtype=bool)
        for p in self.pieces:
            hit |= p.contains_many(X, tol)
        return hit

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict) and "pieces" in obj:
            return cls(tuple(Polyhedron.from_json(p) for p in obj["pieces"]), dim=obj.get("dim"))
        if isinstance(obj, dict):
            return cls((Polyhedron.from_json(obj),))
        raise ParseError("expected a polyhedron or {'pieces': [...]} object")

    def to_json(self):
        out = {"pieces": [p.to_json() for p in self.pieces]}
        if self.dim is not None:
            out["dim"] = self.dim
        return out


@dataclass(frozen=True, eq=False)
class AffineRegion:
    """The set ``{map @ x + offset | x in domain}``, kept unprojected."""

    domain: Polyhedron
    map: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        M = as_matrix(self.map, self.domain.dim, "map")
        c = as_vector(self.offset, M.shape[0], "offset")
        object.__setattr__(self, "map", _frozen(M))
        object.__setattr__(self, "offset", _frozen(c))

    @classmethod
    def identity(cls, domain):
        return cls(domain, np.eye(domain.dim), np.zeros(domain.dim))

    @property
    def in_dim(self):
        return self.domain.dim

    @property
    def out_dim(self):
        return self.map.shape[0]

    def compose(self, M, c):
        """Image under ``y -> M y + c``; domain unchanged."""
        M = as_matrix(M, self.out_dim, "M")
        c = as_vector(c, M.shape[0], "c")
        return AffineRegion(self.domain, M @ self.map, M @ self.offset + c)

    def apply(self, X):
        return np.atleast_2d(X) @ self.map.T + self.offset

    def to_json(self):
        out = self.domain.to_json()
        out["M"] = self.map.tolist()
        out["c"] = self.offset.tolist()
        return out

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(Polyhedron.from_json(obj), np.array(obj["M"], dtype=float), obj["c"])
        except KeyError as exc:
            raise ParseError(f"region is missing field {exc}") from exc


def lp_feasible(A, b, E=None, f=None):
    """Decide whether ``{x | A x <= b, E x = f}`` is nonempty.

    The witness is pushed away from the inequality boundaries where possible
    (margin capped at 1) so it survives re-checking at tolerance.
    """
    A = np.asarray(A, dtype=float)
    E = np.asarray(E if E is not None else [], dtype=float)
    if A.ndim != 2 and E.ndim != 2:
        raise DimensionMismatch("cannot infer dimension; A or E must be 2-D")
    n = A.shape[1] if A.ndim == 2 else E.shape[1]
    A = as_matrix(A, n, "A")
    b = as_vector(b, A.shape[0], "b")
    E = as_matrix(E if E.size else np.zeros((0, n)), n, "E")
    f = as_vector(f if f is not None else np.zeros(0), E.shape[0], "f")
    check_finite(A, b, E, f)
    na = np.linalg.norm(A, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    lb = np.concatenate([np.full(n, -np.inf), [0.0]])
    ub = np.concatenate([np.full(n, np.inf), [1.0]])
    sol = solve_lp(c, np.hstack([A, na[:, None]]), b, np.hstack([E, np.zeros((E.shape[0], 1))]), f, lb, ub)
    if sol.status != "optimal":
        return LpOutcome(False)
    return LpOutcome(True, sol.x[:n])


def is_empty(P):
    return not lp_feasible(P.A, P.b, P.E, P.f).feasible


@dataclass(frozen=True)
class ChebyshevBall:
    center: np.ndarray
    radius: float
    regularized: bool  # True when the +-BIG box limited the ball


def _nullspace(E, dim):
    if E.shape[0] == 0:
        return np.eye(dim)
    _, s, vt = np.linalg.svd(E)
    rank = int(np.sum(s > TOL * max(1.0, s[0])))
    return vt[rank:].T


def chebyshev_ball(P):
    """Largest inscribed ball over the inequality rows, inside the equality subspace.

    Returns ``None`` when ``P`` is empty.
    """
    n = P.dim
    N = _nullspace(P.E, n)
    A, b = P.A, P.b
    # Row norms measured within the equality subspace.
    rho = np.linalg.norm(A @ N, axis=1) if A.shape[0] else np.zeros(0)
    scale = np.linalg.norm(A, axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    eye = np.eye(n)
    box_rho = np.linalg.norm(eye @ N, axis=1)
    A_ub = np.vstack([np.hstack([A / scale[:, None], (rho / scale)[:, None]]),
                      np.hstack([eye, box_rho[:, None]]),
                      np.hstack([-eye, box_rho[:, None]])])
    b_ub = np.concatenate([b / scale, np.full(2 * n, BIG)])
    A_eq = np.hstack([P.E, np.zeros((P.n_eq, 1))])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    lb = np.concatenate([np.full(n, -np.inf), [0.0]])
    sol = solve_lp(c, A_ub, b_ub, A_eq, P.f, lb, None)
    if sol.status != "optimal":
        return None
    z, r = sol.x[:n], float(sol.x[n])
    box_slack = BIG - np.abs(z) - box_rho * r
    regularized = bool(np.any(box_slack <= 1e-6 * BIG) and N.shape[1] > 0)
    return ChebyshevBall(z, r, regularized)


def interior_point(P):
    """Chebyshev center of ``P`` (any feasible point when ``P`` has no volume)."""
    ball = chebyshev_ball(P)
    if ball is None:
        raise EmptyPolyhedron("interior_point of an empty polyhedron")
    return ball.center


def intersect(P, Q):
    if P.dim != Q.dim:
        raise DimensionMismatch(f"cannot intersect dimensions {P.dim} and {Q.dim}")
    return Polyhedron(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]),
                      np.vstack([P.E, Q.E]), np.concatenate([P.f, Q.f]), dim=P.dim)


def affine_preimage_constraints(P, M, c):
    """``{x | M x + c in P}``."""
    M = as_matrix(M, None, "M")
    if M.shape[0] != P.dim:
        raise DimensionMismatch(f"map has {M.shape[0]} rows, polyhedron dimension is {P.dim}")
    c = as_vector(c, P.dim, "c")
    return Polyhedron(P.A @ M, P.b - P.A @ c, P.E @ M, P.f - P.E @ c, dim=M.shape[1])


def canonical(P, decimals=9):
    """Unit-normalized, deduplicated, lexicographically sorted rows.

    All-zero rows that hold trivially are dropped. Meant for comparing
    representations, not for changing the point set.
    """
    def norm_rows(M, v, keep_sign):
        n = np.linalg.norm(M, axis=1)
        nz = n > TOL
        M, v, n = M[nz], v[nz], n[nz]
        M, v = M / n[:, None], v / n
        if not keep_sign and M.shape[0]:
            # E x = f and -E x = -f are the same row.
            lead = np.array([row[np.flatnonzero(np.abs(row) > TOL)[0]] for row in M])
            sgn = np.sign(lead)
            M, v = M * sgn[:, None], v * sgn
        rows = np.round(np.hstack([M, v[:, None]]), decimals) + 0.0
        rows = np.unique(rows, axis=0) if rows.shape[0] else rows
        return rows[:, :-1], rows[:, -1]

    A, b = norm_rows(P.A, P.b, True)
    E, f = norm_rows(P.E, P.f, False)
    return Polyhedron(A, b, E, f, dim=P.dim)


def _dedupe_rows(A, b):
    n = np.linalg.norm(A, axis=1)
    keep = n > TOL
    A, b, n = A[keep], b[keep], n[keep]
    if not A.shape[0]:
        return A, b
    An, bn = A / n[:, None], b / n
    key = np.round(An, 12)
    order = np.lexsort(np.vstack([bn, key.T[::-1]]))
    out = []
    for pos, i in enumerate(order):
        if out and np.array_equal(key[i], key[out[-1]]):
            # Same direction: keep the tighter offset (order sorts bn ascending).
            continue
        out.append(i)
    out = sorted(out)
    return An[out], bn[out]


def remove_redundancy(P):
    """Drop inequality rows implied by the others (one LP per row)."""
    if P.n_ineq:
        zero = np.linalg.norm(P.A, axis=1) <= TOL
        if np.any(P.b[zero] < -TOL):
            raise EmptyPolyhedron("remove_redundancy of an empty polyhedron")
    A, b = _dedupe_rows(P.A, P.b)
    if is_empty(Polyhedron(A, b, P.E, P.f, dim=P.dim)):
        raise EmptyPolyhedron("remove_redundancy of an empty polyhedron")
    keep = np.ones(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        keep[i] = False
        others = keep.copy()
        sol = solve_lp(-A[i], A[others], b[others], P.E, P.f)
        if sol.status == "unbounded" or (sol.status == "optimal" and -sol.objective > b[i] + TOL):
            keep[i] = True
    return Polyhedron(A[keep], b[keep], P.E, P.f, dim=P.dim)


def bounding_box(P):
    """Per-coordinate ``(lower, upper)``; infinite entries where unbounded."""
    lo = np.empty(P.dim)
    hi = np.empty(P.dim)
    for i in range(P.dim):
        e = np.zeros(P.dim)
        e[i] = 1.0
        for sign, out in ((1.0, lo), (-1.0, hi)):
            sol = solve_lp(sign * e, P.A, P.b, P.E, P.f)
            if sol.status == "infeasible":
                raise EmptyPolyhedron("bounding_box of an empty polyhedron")
            out[i] = sol.x[i] if sol.status == "optimal" else -sign * np.inf
    return lo, hi


def region_residual(region, y):
    """``min ||M z + c - y||_inf`` over ``z`` in the region's domain; ``inf`` if empty."""
    y = as_vector(y, region.out_dim, "y")
    d, k = region.in_dim, region.out_dim
    D = region.domain
    M = region.map
    # Variables (z, t): minimize t subject to |M z + c - y| <= t.
    A_ub = np.vstack([np.hstack([D.A, np.zeros((D.n_ineq, 1))]),
                      np.hstack([M, -np.ones((k, 1))]),
                      np.hstack([-M, -np.ones((k, 1))])])
    b_ub = np.concatenate([D.b, y - region.offset, region.offset - y])
    A_eq = np.hstack([D.E, np.zeros((D.n_eq, 1))])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    sol = solve_lp(c, A_ub, b_ub, A_eq, D.f)
    if sol.status != "optimal":
        return np.inf
    return max(float(sol.x[-1]), 0.0)
