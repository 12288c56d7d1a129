# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bounded-variable simplex pivot kernel.

Direct port of ``_simplex_py.simplex_run`` -- the two must implement the
identical pivot selection rules (see that module for the tableau layout
and the rule definitions).  Any change here must be mirrored there.
"""

import numpy as np

cimport cython
from libc.math cimport INFINITY, fabs

ctypedef signed char int8_t
ctypedef long long int64_t

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
PIVOT_LIMIT = 3
NUMERICAL = 4

DEF AT_LOWER = 0
DEF AT_UPPER = 1
DEF BASIC = 2
DEF FREE = 3

DEF PIV_TOL = 1e-9
DEF CLEAN_TOL = 1e-7
DEF DEGEN_TOL = 1e-10
DEF PRICE_TOL = 1e-9


cdef inline double _nb_value(Py_ssize_t j, int8_t[::1] vstat,
                             double[::1] lo, double[::1] up) noexcept nogil:
    if vstat[j] == AT_LOWER:
        return lo[j]
    if vstat[j] == AT_UPPER:
        return up[j]
    return 0.0


cdef void _pivot(double[:, ::1] T, double[::1] xB, int64_t[::1] basis,
                 int8_t[::1] vstat, double[::1] lo, double[::1] up,
                 Py_ssize_t r, Py_ssize_t j, int dir_, double t_star,
                 Py_ssize_t N, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double v_enter, piv, f
    cdef int64_t leave

    if t_star != 0.0:
        for i in range(m):
            xB[i] -= dir_ * t_star * T[i, j]
    v_enter = _nb_value(j, vstat, lo, up) + dir_ * t_star
    leave = basis[r]
    if leave < <int64_t> N:
        vstat[leave] = AT_LOWER if dir_ * T[r, j] > 0.0 else AT_UPPER
    basis[r] = j
    vstat[j] = BASIC
    xB[r] = v_enter

    piv = T[r, j]
    for k in range(N):
        T[r, k] /= piv
    for i in range(m + 2):
        if i == r:
            continue
        f = T[i, j]
        if f != 0.0:
            for k in range(N):
                T[i, k] -= f * T[r, k]
    for i in range(m + 2):
        T[i, j] = 0.0
    T[r, j] = 1.0


cdef void _drive_out_artificials(double[:, ::1] T, double[::1] xB,
                                 int64_t[::1] basis, int8_t[::1] vstat,
                                 double[::1] lo, double[::1] up,
                                 Py_ssize_t N, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t r, k, j
    cdef double best, mag
    for r in range(m):
        if basis[r] < <int64_t> N:
            continue
        best = -1.0
        j = -1
        for k in range(N):
            if vstat[k] == BASIC or lo[k] >= up[k]:
                continue
            mag = fabs(T[r, k])
            if mag > best:
                best = mag
                j = k
        if j >= 0 and best > CLEAN_TOL:
            _pivot(T, xB, basis, vstat, lo, up, r, j, 1, 0.0, N, m)
        else:
            up[basis[r]] = 0.0
            xB[r] = 0.0


cdef bint _artificials_cleared(double[::1] xB, int64_t[::1] basis,
                               double[::1] feas_row,
                               Py_ssize_t N, Py_ssize_t m) noexcept nogil:
    # each artificial keeps the tolerance of the row it was created for
    cdef Py_ssize_t i
    for i in range(m):
        if basis[i] >= <int64_t> N and xB[i] > feas_row[basis[i] - N]:
            return False
    return True


def simplex_run(double[:, ::1] T, double[::1] xB, int64_t[::1] basis,
                int8_t[::1] vstat, double[::1] lo, double[::1] up,
                double[::1] feas_row, long max_pivots, long bland_after):
    """Run the two-phase iteration in place; returns (status, pivots)."""
    cdef Py_ssize_t m = xB.shape[0]
    cdef Py_ssize_t N = T.shape[1]
    cdef Py_ssize_t i, k, j, r, pr
    cdef long pivots = 0, degen = 0
    cdef bint bland = False
    cdef int phase = 2
    cdef int dir_
    cdef int8_t s
    cdef double d, dj, best_score, a, delta, bnd, ti
    cdef double t_row, t_flip, t_star, best_mag, mag
    cdef int64_t best_label

    tv_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] tvals = tv_arr

    for i in range(m):
        if basis[i] >= <int64_t> N:
            phase = 1
            break

    while True:
        if phase == 1:
            if _artificials_cleared(xB, basis, feas_row, N, m):
                _drive_out_artificials(T, xB, basis, vstat, lo, up, N, m)
                phase = 2
                continue
            pr = m + 1
        else:
            pr = m

        # pricing
        j = -1
        if bland:
            for k in range(N):
                s = vstat[k]
                if s == BASIC or lo[k] >= up[k]:
                    continue
                d = T[pr, k]
                if (s == AT_LOWER or s == FREE) and d < -PRICE_TOL:
                    j = k
                    break
                if (s == AT_UPPER or s == FREE) and d > PRICE_TOL:
                    j = k
                    break
        else:
            best_score = -1.0
            for k in range(N):
                s = vstat[k]
                if s == BASIC or lo[k] >= up[k]:
                    continue
                d = T[pr, k]
                if ((s == AT_LOWER or s == FREE) and d < -PRICE_TOL) or \
                   ((s == AT_UPPER or s == FREE) and d > PRICE_TOL):
                    if fabs(d) > best_score:
                        best_score = fabs(d)
                        j = k

        if j < 0:
            if phase == 1:
                if not _artificials_cleared(xB, basis, feas_row, N, m):
                    return INFEASIBLE, pivots
                _drive_out_artificials(T, xB, basis, vstat, lo, up, N, m)
                phase = 2
                continue
            return OPTIMAL, pivots

        dj = T[pr, j]
        dir_ = 1 if dj < 0.0 else -1

        # ratio test
        t_row = INFINITY
        for i in range(m):
            a = T[i, j]
            delta = dir_ * a
            if delta > PIV_TOL:
                bnd = lo[basis[i]]
                if bnd == -INFINITY:
                    tvals[i] = INFINITY
                    continue
                ti = (xB[i] - bnd) / delta
            elif delta < -PIV_TOL:
                bnd = up[basis[i]]
                if bnd == INFINITY:
                    tvals[i] = INFINITY
                    continue
                ti = (bnd - xB[i]) / (-delta)
            else:
                tvals[i] = INFINITY
                continue
            if ti < 0.0:
                ti = 0.0
            tvals[i] = ti
            if ti < t_row:
                t_row = ti

        if vstat[j] != FREE and lo[j] != -INFINITY and up[j] != INFINITY:
            t_flip = up[j] - lo[j]
        else:
            t_flip = INFINITY
        t_star = t_row if t_row < t_flip else t_flip

        if t_star == INFINITY:
            return (UNBOUNDED if phase == 2 else NUMERICAL), pivots

        pivots += 1
        if t_star < DEGEN_TOL:
            degen += 1
            if degen > bland_after:
                bland = True
        if pivots > max_pivots:
            return PIVOT_LIMIT, pivots

        if t_flip <= t_row:
            for i in range(m):
                xB[i] -= dir_ * t_flip * T[i, j]
            vstat[j] = AT_UPPER if vstat[j] == AT_LOWER else AT_LOWER
            continue

        # leaving row: min ratio; Bland -> smallest basic label,
        # otherwise largest |pivot| then smallest label
        r = -1
        best_label = -1
        if bland:
            for i in range(m):
                if tvals[i] <= t_star + 1e-12:
                    if r < 0 or basis[i] < best_label:
                        best_label = basis[i]
                        r = i
        else:
            best_mag = -1.0
            for i in range(m):
                if tvals[i] <= t_star + 1e-12:
                    mag = fabs(dir_ * T[i, j])
                    if mag > best_mag:
                        best_mag = mag
            for i in range(m):
                if tvals[i] <= t_star + 1e-12:
                    mag = fabs(dir_ * T[i, j])
                    if mag >= best_mag - 1e-15:
                        if r < 0 or basis[i] < best_label:
                            best_label = basis[i]
                            r = i
        _pivot(T, xB, basis, vstat, lo, up, r, j, dir_, t_star, N, m)
