"""Pure numpy bounded-variable simplex iterations (fallback kernel).

Mirrors ``_simplex_kernel.pyx`` step for step; see ``iterate`` there.
"""

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

# consecutive degenerate pivots before switching to Bland's rule
BLAND_AFTER = 50
_TIE = 1e-12


def iterate(T, beta, d, basis, at_upper, is_basic, ub, max_iter, ptol, dtol):
    """Run primal simplex pivots on a tableau in place (maximisation).

    ``T`` is ``B^-1 A`` (m x n), ``beta`` the basic values, ``d`` the reduced
    costs, ``basis`` the basic column per row. Nonbasic columns sit at 0 or,
    when ``at_upper`` is set, at ``ub``. Returns ``(status, iterations)``.
    """
    m, n = T.shape
    iters = 0
    degenerate = 0
    while iters < max_iter:
        movable = (~is_basic) & (ub > 0)
        elig = movable & np.where(at_upper, d < -dtol, d > dtol)
        if not elig.any():
            return OPTIMAL, iters
        if degenerate > BLAND_AFTER:
            q = int(np.argmax(elig))
        else:
            q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
        s = -1.0 if at_upper[q] else 1.0
        alpha = s * T[:, q]

        # ratio test: smallest step, ties within _TIE go to the largest |pivot|
        t_best = ub[q]
        r = -1
        ub_b = ub[basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(alpha > ptol, beta / alpha,
                             np.where((alpha < -ptol) & (ub_b < np.inf), (ub_b - beta) / -alpha, np.inf))
        np.maximum(ratio, 0.0, out=ratio)
        t_min = ratio.min() if m else np.inf
        if t_min < t_best:
            ties = np.flatnonzero(ratio <= t_min + _TIE)
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
            t_best = ratio[r]
        if r < 0 and t_best == np.inf:
            return UNBOUNDED, iters

        iters += 1
        degenerate = degenerate + 1 if t_best <= _TIE else 0
        beta -= t_best * alpha
        if r < 0:
            at_upper[q] = not at_upper[q]
            continue

        leaving = basis[r]
        entering_value = (ub[q] if at_upper[q] else 0.0) + s * t_best
        piv = T[r, q]
        T[r, :] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r, :])
        d -= d[q] * T[r, :]
        d[q] = 0.0
        beta[r] = entering_value
        at_upper[leaving] = alpha[r] < 0
        is_basic[leaving] = False
        is_basic[q] = True
        at_upper[q] = False
        basis[r] = q
    return ITERATION_LIMIT, iters
