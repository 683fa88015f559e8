"""Small dense LP front end over HiGHS.

Every emptiness, ball, redundancy and membership question in the package
reduces to one call of :func:`solve_lp`.
"""

import threading
from dataclasses import dataclass
from typing import Optional

import highspy
import numpy as np

from ..errors import DimensionMismatch, NonFiniteInput

TOL = 1e-9
INF = highspy.kHighsInf

_local = threading.local()


# Tried in order until HiGHS reports a definite status.
_ATTEMPTS = (
    {"presolve": "off", "primal_feasibility_tolerance": TOL, "dual_feasibility_tolerance": TOL},
    {"presolve": "on", "primal_feasibility_tolerance": TOL, "dual_feasibility_tolerance": TOL},
    {"presolve": "on", "primal_feasibility_tolerance": 1e-7, "dual_feasibility_tolerance": 1e-7},
    {"presolve": "off", "primal_feasibility_tolerance": 1e-7, "dual_feasibility_tolerance": 1e-7,
     "simplex_strategy": 4},
)


def _solver(k):
    cache = getattr(_local, "highs", None)
    if cache is None:
        cache = _local.highs = {}
    h = cache.get(k)
    if h is None:
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        for key, value in _ATTEMPTS[k].items():
            h.setOptionValue(key, value)
        cache[k] = h
    return h


_DEFINITE = (
    highspy.HighsModelStatus.kOptimal,
    highspy.HighsModelStatus.kInfeasible,
    highspy.HighsModelStatus.kUnbounded,
    highspy.HighsModelStatus.kUnboundedOrInfeasible,
)


@dataclass(frozen=True)
class LpOutcome:
    """Feasibility verdict; ``witness`` is set iff ``feasible``."""

    feasible: bool
    witness: Optional[np.ndarray] = None

    @property
    def status(self):
        return "feasible" if self.feasible else "infeasible"


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]


def as_matrix(a, cols=None, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        if cols is None:
            cols = a.shape[1] if a.ndim == 2 else 0
        return np.zeros((0, cols))
    if a.ndim == 1 and cols is not None and a.shape[0] == cols:
        a = a.reshape(1, cols)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if cols is not None and a.shape[1] != cols:
        raise DimensionMismatch(f"{name} has {a.shape[1]} columns, expected {cols}")
    return a


def as_vector(v, length=None, name="vector"):
    v = np.asarray(v, dtype=float).reshape(-1)
    if length is not None and v.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {length}")
    return v


def check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteInput("NaN or infinite entry in LP data")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None):
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``lb <= x <= ub``.

    Bounds default to free variables. Infinite bound entries are allowed; the
    constraint data itself must be finite.
    """
    c = as_vector(c)
    n = c.shape[0]
    A_ub = as_matrix(A_ub if A_ub is not None else np.zeros((0, n)), n, "A_ub")
    b_ub = as_vector(b_ub if b_ub is not None else np.zeros(0), A_ub.shape[0], "b_ub")
    A_eq = as_matrix(A_eq if A_eq is not None else np.zeros((0, n)), n, "A_eq")
    b_eq = as_vector(b_eq if b_eq is not None else np.zeros(0), A_eq.shape[0], "b_eq")
    check_finite(c, A_ub, b_ub, A_eq, b_eq)
    lb = np.full(n, -INF) if lb is None else np.where(np.isfinite(lb), lb, -INF)
    ub = np.full(n, INF) if ub is None else np.where(np.isfinite(ub), ub, INF)

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    A = np.vstack([A_ub, A_eq])
    lp = highspy.HighsLp()
    lp.num_col_ = n
    lp.num_row_ = m_ub + m_eq
    lp.col_cost_ = c
    lp.col_lower_ = np.asarray(lb, dtype=float)
    lp.col_upper_ = np.asarray(ub, dtype=float)
    lp.row_lower_ = np.concatenate([np.full(m_ub, -INF), b_eq])
    lp.row_upper_ = np.concatenate([b_ub, b_eq])
    if A.shape[0]:
        lp.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
        lp.a_matrix_.start_ = np.arange(0, A.size + 1, n, dtype=np.int32)
        lp.a_matrix_.index_ = np.tile(np.arange(n, dtype=np.int32), A.shape[0])
        lp.a_matrix_.value_ = A.ravel()
    else:
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = np.zeros(n + 1, dtype=np.int32)

    for k in range(len(_ATTEMPTS)):
        h = _solver(k)
        h.clearModel()
        h.passModel(lp)
        h.run()
        status = h.getModelStatus()
        if status in _DEFINITE:
            break
    if status == highspy.HighsModelStatus.kOptimal:
        x = np.array(h.getSolution().col_value, dtype=float)
        return LpSolution("optimal", x, float(c @ x))
    if status == highspy.HighsModelStatus.kInfeasible:
        return LpSolution("infeasible", None, None)
    if status in (highspy.HighsModelStatus.kUnbounded, highspy.HighsModelStatus.kUnboundedOrInfeasible):
        # Distinguish the two with a pure feasibility solve.
        if c.any():
            probe = solve_lp(np.zeros(n), A_ub, b_ub, A_eq, b_eq, lb, ub)
            if probe.status == "infeasible":
                return probe
        return LpSolution("unbounded", None, None)
    raise RuntimeError(f"HiGHS returned unexpected status {h.modelStatusToString(status)}")
