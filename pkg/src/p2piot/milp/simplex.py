"""Dense two-phase bounded-variable simplex for the LP relaxations.

The pivot loop lives in a compiled extension (``_simplex_kernel``) when it
has been built, otherwise in the numpy fallback (``_simplex_py``). Set
``P2PIOT_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _simplex_py
from .model import MilpModel

try:
    if os.environ.get("P2PIOT_PURE_PYTHON"):
        raise ImportError("pure-python kernel requested")
    from . import _simplex_kernel
except ImportError:
    _simplex_kernel = None

__all__ = ["KERNEL", "available_kernels", "LPResult", "StandardForm", "solve_lp"]

KERNEL = "compiled" if _simplex_kernel is not None else "python"

_STATUS = {0: "optimal", 1: "unbounded", 2: "iteration_limit"}


def available_kernels() -> list[str]:
    return ["compiled", "python"] if _simplex_kernel is not None else ["python"]


def _run(kernel, T, beta, d, basis, at_upper, is_basic, ub, max_iter, ptol, dtol):
    if kernel == "compiled":
        if _simplex_kernel is None:
            raise RuntimeError("compiled simplex kernel is not built")
        return _simplex_kernel.iterate(T, beta, d, basis, at_upper.view(np.uint8), is_basic.view(np.uint8),
                                       ub, max_iter, ptol, dtol)
    return _simplex_py.iterate(T, beta, d, basis, at_upper, is_basic, ub, max_iter, ptol, dtol)


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


class StandardForm:
    """Equality form ``A x = b`` of a model's relaxation, slacks appended.

    Columns are scaled to unit max-norm and rows after them, which keeps the
    big-M VM rows and the bit/s rate rows in a comparable range.
    """

    def __init__(self, model: MilpModel):
        n = len(model.variables)
        rows = model.constraints
        m = len(rows)
        n_slack = sum(1 for c in rows if c.sense != "=")
        A = np.zeros((m, n + n_slack))
        b = np.zeros(m)
        s = n
        for r, con in enumerate(rows):
            for idx, coef in con.terms:
                A[r, idx] += coef
            b[r] = con.rhs
            if con.sense == "<=":
                A[r, s] = 1.0
                s += 1
            elif con.sense == ">=":
                A[r, s] = -1.0
                s += 1
        c = np.zeros(n + n_slack)
        for idx, coef in model.objective.items():
            c[idx] = coef
        if model.sense != "maximize":
            c = -c
        lb = np.zeros(n + n_slack)
        ub = np.full(n + n_slack, np.inf)
        for idx, v in enumerate(model.variables):
            lb[idx] = v.lb
            ub[idx] = 1.0 if v.binary else v.ub

        col = np.abs(A).max(axis=0) if m else np.ones(n + n_slack)
        col_scale = np.where(col > 0, 1.0 / np.where(col > 0, col, 1.0), 1.0)
        A = A * col_scale
        row = np.abs(A).max(axis=1) if n + n_slack else np.ones(m)
        row_scale = np.where(row > 0, 1.0 / np.where(row > 0, row, 1.0), 1.0)
        self.A = np.ascontiguousarray(A * row_scale[:, None])
        self.b = b * row_scale
        self.c = c * col_scale
        self.col_scale = col_scale
        self.lb = lb
        self.ub = ub
        self.n_structural = n
        self.maximize = model.sense == "maximize"

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


def solve_lp(sf: StandardForm, lb=None, ub=None, kernel: str | None = None,
             max_iter: int = 50_000, ptol: float = 1e-9, dtol: float = 1e-11,
             feas_tol: float = 1e-7) -> LPResult:
    """Maximise the relaxation under optional overriding bounds (unscaled units).

    Returns the structural solution ``x`` (without slacks) and its objective.
    """
    kernel = kernel or KERNEL
    lb = sf.lb if lb is None else np.asarray(lb, float)
    ub = sf.ub if ub is None else np.asarray(ub, float)
    cs = sf.col_scale
    lbs = lb / cs
    ubs = (ub - lb) / cs
    if np.any(ubs < -feas_tol):
        return LPResult("infeasible", None, -np.inf, 0)
    ubs = np.maximum(ubs, 0.0)
    m, N = sf.A.shape
    resid = sf.b - sf.A @ lbs
    sign = np.where(resid < 0, -1.0, 1.0)
    A_s = sf.A * sign[:, None]
    b_s = resid * sign

    T = np.ascontiguousarray(np.hstack([A_s, np.eye(m)]))
    ub_all = np.concatenate([ubs, np.full(m, np.inf)])
    basis = np.arange(N, N + m, dtype=np.int64)
    is_basic = np.zeros(N + m, dtype=bool)
    is_basic[N:] = True
    at_upper = np.zeros(N + m, dtype=bool)
    beta = b_s.copy()

    # phase 1: drive the artificials out
    d = np.concatenate([T[:, :N].sum(axis=0), np.zeros(m)]) if m else np.zeros(N)
    status, it1 = _run(kernel, T, beta, d, basis, at_upper, is_basic, ub_all, max_iter, ptol, dtol)
    if status != 0:
        return LPResult(_STATUS[status], None, -np.inf, it1)
    # artificial N+r carries the residual of row r; judge each against its own rhs
    art = basis >= N
    rows = basis[art] - N
    if np.any(beta[art] > feas_tol * np.maximum(1.0, b_s[rows])):
        return LPResult("infeasible", None, -np.inf, it1)

    # phase 2: artificials pinned at zero
    ub_all[N:] = 0.0
    c2 = np.concatenate([sf.c, np.zeros(m)])
    d = c2 - c2[basis] @ T
    status, it2 = _run(kernel, T, beta, d, basis, at_upper, is_basic, ub_all, max_iter - it1, ptol, dtol)
    if status != 0:
        return LPResult(_STATUS[status], None, -np.inf, it1 + it2)

    # recompute basic values from B^-1 (the artificial block) for accuracy
    xs = np.where(at_upper, ub_all, 0.0)
    xs[basis] = 0.0
    Binv = T[:, N:]
    beta = Binv @ (b_s - A_s @ xs[:N])
    xs[basis] = beta
    xs = xs[:N]
    x = (lbs + xs) * cs
    obj = float(sf.c @ (lbs + xs))
    if not sf.maximize:
        obj = -obj
    return LPResult("optimal", x[: sf.n_structural], obj, it1 + it2)
