# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bounded-variable simplex iterations.

Same pivoting rules as ``_simplex_py.iterate``: Dantzig pricing with a
switch to Bland's rule after a run of degenerate steps, and a ratio test
that takes the smallest step and breaks ties on the largest pivot.
"""

from libc.math cimport fabs, INFINITY

cdef enum:
    BLAND_AFTER = 50
cdef double TIE = 1e-12


def iterate(double[:, ::1] T, double[::1] beta, double[::1] d, long[::1] basis,
            unsigned char[::1] at_upper, unsigned char[::1] is_basic, double[::1] ub,
            long max_iter, double ptol, double dtol):
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t n = T.shape[1]
    cdef Py_ssize_t i, j, q, r, leaving
    cdef long iters = 0
    cdef long degenerate = 0
    cdef double best, val, s, a, ratio, t_min, t_best, a_best, ubb, piv, factor, dq, entering_value
    cdef bint elig

    while iters < max_iter:
        # pricing
        q = -1
        best = -1.0
        for j in range(n):
            if is_basic[j] or ub[j] <= 0:
                continue
            val = d[j]
            if at_upper[j]:
                elig = val < -dtol
            else:
                elig = val > dtol
            if not elig:
                continue
            if degenerate > BLAND_AFTER:
                q = j
                break
            if fabs(val) > best:
                best = fabs(val)
                q = j
        if q < 0:
            return 0, iters
        s = -1.0 if at_upper[q] else 1.0

        # ratio test, first pass: minimum ratio
        t_min = INFINITY
        for i in range(m):
            a = s * T[i, q]
            if a > ptol:
                ratio = beta[i] / a
            elif a < -ptol:
                ubb = ub[basis[i]]
                if ubb == INFINITY:
                    continue
                ratio = (ubb - beta[i]) / -a
            else:
                continue
            if ratio < 0:
                ratio = 0.0
            if ratio < t_min:
                t_min = ratio

        t_best = ub[q]
        r = -1
        if t_min < t_best:
            # second pass: among near-minimal ratios take the largest |pivot|
            a_best = -1.0
            for i in range(m):
                a = s * T[i, q]
                if a > ptol:
                    ratio = beta[i] / a
                elif a < -ptol:
                    ubb = ub[basis[i]]
                    if ubb == INFINITY:
                        continue
                    ratio = (ubb - beta[i]) / -a
                else:
                    continue
                if ratio < 0:
                    ratio = 0.0
                if ratio <= t_min + TIE and fabs(a) > a_best:
                    a_best = fabs(a)
                    r = i
                    t_best = ratio
        if r < 0 and t_best == INFINITY:
            return 1, iters

        iters += 1
        if t_best <= TIE:
            degenerate += 1
        else:
            degenerate = 0
        for i in range(m):
            beta[i] -= t_best * s * T[i, q]
        if r < 0:
            at_upper[q] = not at_upper[q]
            continue

        leaving = basis[r]
        a = s * T[r, q]
        entering_value = (ub[q] if at_upper[q] else 0.0) + s * t_best
        piv = T[r, q]
        for j in range(n):
            T[r, j] /= piv
        for i in range(m):
            if i == r:
                continue
            factor = T[i, q]
            if factor != 0.0:
                for j in range(n):
                    T[i, j] -= factor * T[r, j]
        dq = d[q]
        if dq != 0.0:
            for j in range(n):
                d[j] -= dq * T[r, j]
        d[q] = 0.0
        beta[r] = entering_value
        at_upper[leaving] = a < 0
        is_basic[leaving] = 0
        is_basic[q] = 1
        at_upper[q] = 0
        basis[r] = q
    return 2, iters
