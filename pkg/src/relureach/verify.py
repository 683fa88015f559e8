"""Safety verification against unions of unsafe output polyhedra."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, EqualityNotComplementable, ParseError
from .geometry import Polyhedron, UnionOfPolyhedra, affine_preimage_constraints, intersect, lp_feasible
from .netmodel import forward
from .reach import network_reach

SAFE = "SAFE"
UNSAFE = "UNSAFE"
WITNESS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SafetySpec:
    """Unsafe output region to stay clear of.

    With ``kind == "safe_given"``, ``unsafe`` is the closed complement of the
    single polyhedron in ``safe``.
    """

    unsafe: UnionOfPolyhedra
    kind: str = "unsafe_given"
    safe: Optional[Polyhedron] = None

    @property
    def dim(self):
        return self.unsafe.dim if self.unsafe.dim is not None else (self.safe.dim if self.safe else None)

    @classmethod
    def from_safe(cls, P):
        return cls(complement_of_polyhedron(P), "safe_given", P)

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ParseError("spec must be an object with a 'kind' field")
        kind = obj["kind"]
        try:
            if kind == "unsafe_ball_inf":
                return unsafe_from_infinity_ball(obj["center"], float(obj["radius"]))
            pieces = [Polyhedron(np.array(p["C"], dtype=float), p["d"]) for p in obj["pieces"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed spec: {exc}", context=f"kind={kind!r}") from exc
        if kind == "unsafe":
            return cls(UnionOfPolyhedra(tuple(pieces)))
        if kind == "safe":
            if len(pieces) != 1:
                raise ParseError("a safe region must be a single polyhedron", context="pieces")
            return cls.from_safe(pieces[0])
        raise ParseError(f"unknown spec kind {kind!r}")

    def to_json(self):
        if self.kind == "safe_given":
            return {"kind": "safe", "pieces": [{"C": self.safe.A.tolist(), "d": self.safe.b.tolist()}]}
        return {"kind": "unsafe", "pieces": [{"C": p.A.tolist(), "d": p.b.tolist()} for p in self.unsafe]}


@dataclass
class Counterexample:
    x: np.ndarray
    y: np.ndarray
    piece: int
    region: int

    def to_json(self):
        return {"x": self.x.tolist(), "y": self.y.tolist(), "piece": self.piece, "region": self.region}


@dataclass
class Verdict:
    status: str
    counterexample: Optional[Counterexample] = None
    checked_pairs: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def safe(self):
        return self.status == SAFE

    def to_json(self):
        return {
            "status": self.status,
            "witness": self.counterexample.to_json() if self.counterexample else None,
            "checked_pairs": self.checked_pairs,
            "stats": self.stats,
        }


def unsafe_from_infinity_ball(center, radius):
    """``{y | ||y - center||_inf <= radius}`` as stacked +-unit rows."""
    center = np.asarray(center, dtype=float).reshape(-1)
    if not radius > 0:
        raise ValueError("radius must be positive")
    n = center.shape[0]
    C = np.zeros((2 * n, n))
    d = np.zeros(2 * n)
    for i in range(n):
        C[2 * i, i], d[2 * i] = 1.0, center[i] + radius
        C[2 * i + 1, i], d[2 * i + 1] = -1.0, radius - center[i]
    return SafetySpec(UnionOfPolyhedra((Polyhedron(C, d),)))


def complement_of_polyhedron(P):
    """Closed complement: one half-space ``a_i y >= b_i`` per inequality row."""
    if P.n_eq:
        raise EqualityNotComplementable("complement of a polyhedron with equality rows is not closed-polyhedral")
    pieces = tuple(Polyhedron(-P.A[i:i + 1], -P.b[i:i + 1]) for i in range(P.n_ineq))
    return UnionOfPolyhedra(pieces, dim=P.dim)


def check_reach_set(Y, spec, net=None):
    """Scan (region, unsafe piece) pairs in order; first feasible pair gives the witness."""
    if spec.dim is not None and Y.out_dim is not None and spec.dim != Y.out_dim:
        raise DimensionMismatch(f"spec has dimension {spec.dim}, reach set {Y.out_dim}")
    checked = 0
    for r, region in enumerate(Y.regions):
        for m, S in enumerate(spec.unsafe):
            checked += 1
            pulled = intersect(region.domain, affine_preimage_constraints(S, region.map, region.offset))
            out = lp_feasible(pulled.A, pulled.b, pulled.E, pulled.f)
            if out.feasible:
                x = out.witness
                y = forward(net, x) if net is not None else region.apply(x)[0]
                return Verdict(UNSAFE, Counterexample(x, y, m, r), checked)
    return Verdict(SAFE, None, checked)


def verify_network(net, X0, spec, mode="neuronwise", jobs=1, **kw):
    """Compute the output reach set and decide whether it meets the unsafe region."""
    if spec.dim != net.output_dim:
        raise DimensionMismatch(f"spec has dimension {spec.dim}, network outputs {net.output_dim}")
    Y, stats = network_reach(net, X0, mode=mode, jobs=jobs, **kw)
    verdict = check_reach_set(Y, spec, net)
    verdict.stats = stats.to_json()
    return verdict


def witness_is_valid(net, X0, spec, verdict, tol=WITNESS_TOL):
    """Re-check an UNSAFE verdict by direct evaluation."""
    cex = verdict.counterexample
    if cex is None:
        return False
    y = forward(net, cex.x)
    return bool(X0.contains(cex.x, tol) and np.max(np.abs(y - cex.y)) <= tol
                and spec.unsafe.pieces[cex.piece].contains(y, tol))
