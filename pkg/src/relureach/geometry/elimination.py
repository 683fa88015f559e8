"""Explicit H-representation of affine images by variable elimination."""

import numpy as np

from ..errors import EliminationBlowup, EmptyPolyhedron
from .lp import TOL, solve_lp
from .polyhedron import Polyhedron, _dedupe_rows, is_empty, remove_redundancy

FM_ROW_CAP = 10_000


def _prune(A, b, E, f):
    """Redundancy removal in the lifted space, tolerant of zero rows."""
    A, b = _dedupe_rows(A, b)
    if not A.shape[0]:
        return A, b
    keep = np.ones(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        keep[i] = False
        sol = solve_lp(-A[i], A[keep], b[keep], E, f)
        if sol.status == "unbounded" or (sol.status == "optimal" and -sol.objective > b[i] + TOL):
            keep[i] = True
    return A[keep], b[keep]


def pivot_equalities(A, b, E, f, cols):
    """Substitute out each column in ``cols`` through an equality row.

    Partial pivoting on the largest coefficient. Columns with no usable pivot
    are zeroed in ``E`` and returned in ``left`` for Fourier-Motzkin.
    """
    A, b, E, f = A.copy(), b.copy(), E.copy(), f.copy()
    left = []
    for j in cols:
        piv = 0.0
        if E.shape[0]:
            r = int(np.argmax(np.abs(E[:, j])))
            piv = E[r, j]
        if abs(piv) <= TOL * max(1.0, float(np.abs(E).max(initial=0.0))):
            if E.shape[0]:
                E[:, j] = 0.0
            left.append(j)
            continue
        row, rhs = E[r] / piv, f[r] / piv
        E, f = np.delete(E, r, axis=0), np.delete(f, r)
        ka, ke = A[:, j].copy(), E[:, j].copy()
        A -= np.outer(ka, row)
        b -= ka * rhs
        E -= np.outer(ke, row)
        f -= ke * rhs
        A[:, j] = 0.0
        E[:, j] = 0.0
    return A, b, E, f, left


def fourier_motzkin(A, b, j):
    """Eliminate column ``j`` from ``A x <= b``; the column is left as zeros."""
    col = A[:, j]
    scale = np.max(np.abs(A), axis=1)
    rel = np.where(scale > 0, col / np.where(scale > 0, scale, 1.0), 0.0)
    pos = np.flatnonzero(rel > TOL)
    neg = np.flatnonzero(rel < -TOL)
    zero = np.flatnonzero(np.abs(rel) <= TOL)
    rows = [A[zero]]
    rhs = [b[zero]]
    if pos.size and neg.size:
        P = A[pos] / col[pos, None]
        pb = b[pos] / col[pos]
        N = A[neg] / -col[neg, None]
        nb = b[neg] / -col[neg]
        rows.append((P[:, None, :] + N[None, :, :]).reshape(-1, A.shape[1]))
        rhs.append((pb[:, None] + nb[None, :]).reshape(-1))
    out = np.vstack(rows)
    out[:, j] = 0.0
    return out, np.concatenate(rhs)


def project(P, keep, cap=FM_ROW_CAP):
    """H-representation of the projection of ``P`` onto the coordinates ``keep``."""
    keep = list(keep)
    drop = [j for j in range(P.dim) if j not in keep]
    A, b, E, f, left = pivot_equalities(np.array(P.A), np.array(P.b), np.array(P.E), np.array(P.f), drop)
    while left:
        # Eliminate the column with the smallest pos*neg product first.
        def cost(j):
            return int(np.sum(A[:, j] > TOL)) * int(np.sum(A[:, j] < -TOL))

        j = min(left, key=cost)
        left.remove(j)
        A, b = fourier_motzkin(A, b, j)
        if A.shape[0] > cap:
            raise EliminationBlowup(A.shape[0], cap)
        A, b = _prune(A, b, E, f)
    zero_eq = np.linalg.norm(E, axis=1) <= TOL
    E, f = E[~zero_eq], f[~zero_eq]
    return Polyhedron(A[:, keep], b, E[:, keep], f, dim=len(keep))


def region_to_polyhedron(region, cap=FM_ROW_CAP):
    """``{M x + c | x in domain}`` as an explicit H-representation in output space."""
    D = region.domain
    if is_empty(D):
        raise EmptyPolyhedron("image of an empty domain")
    k, d = region.out_dim, region.in_dim
    # Lifted variables (y, x): D rows act on x; y - M x = c.
    A = np.hstack([np.zeros((D.n_ineq, k)), D.A])
    E = np.vstack([np.hstack([np.zeros((D.n_eq, k)), D.E]),
                   np.hstack([np.eye(k), -region.map])])
    f = np.concatenate([D.f, region.offset])
    lifted = Polyhedron(A, D.b, E, f, dim=k + d)
    image = project(lifted, range(k), cap)
    if image.n_ineq:
        image = remove_redundancy(image)
    return image
