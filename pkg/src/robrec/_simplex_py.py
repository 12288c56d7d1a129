"""NumPy fallback for the bounded-variable simplex pivot kernel.

This module and ``_simplex_cy`` implement the same two-phase primal
simplex iteration on a prepared dense tableau; the compiled version is
selected at import time by :mod:`robrec._kernel` when available.  Keep the
two in lockstep: pivot selection rules are part of the solver contract
(fixed rules give bit-identical re-solves).

Tableau layout (prepared by ``lp_kernel``):
  * ``T`` is ``(m + 2, N)``: rows ``0..m-1`` hold the row-scaled
    constraint matrix in current basis coordinates, row ``m`` the phase-2
    reduced costs, row ``m+1`` the phase-1 reduced costs.
  * ``xB`` holds current basic values; ``basis`` holds basic column
    labels, where labels ``>= N`` denote phase-1 artificials (their
    columns are never materialized: an artificial can never re-enter).
  * ``vstat`` per column: 0 nonbasic at lower, 1 nonbasic at upper,
    2 basic, 3 nonbasic free (value 0).
  * ``lo``/``up`` have ``N + m`` entries so artificial labels can be
    bounded too.
"""

from __future__ import annotations

import numpy as np

# status codes shared with the compiled kernel
OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
PIVOT_LIMIT = 3
NUMERICAL = 4

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE = 3

_PIV_TOL = 1e-9
_CLEAN_TOL = 1e-7
_DEGEN_TOL = 1e-10
_PRICE_TOL = 1e-9


def _nonbasic_value(j: int, vstat, lo, up) -> float:
    s = vstat[j]
    if s == AT_LOWER:
        return lo[j]
    if s == AT_UPPER:
        return up[j]
    return 0.0


def _pivot(T, xB, basis, vstat, lo, up, r, j, dir_, t_star, N):
    m = xB.shape[0]
    col = T[:m, j].copy()
    if t_star != 0.0:
        xB -= (dir_ * t_star) * col
    v_enter = _nonbasic_value(j, vstat, lo, up) + dir_ * t_star
    leave = basis[r]
    if leave < N:
        vstat[leave] = AT_LOWER if dir_ * col[r] > 0.0 else AT_UPPER
    basis[r] = j
    vstat[j] = BASIC
    xB[r] = v_enter

    piv = T[r, j]
    trow = T[r] / piv
    colf = T[:, j].copy()
    colf[r] = 0.0
    T -= np.outer(colf, trow)
    T[r] = trow
    T[:, j] = 0.0
    T[r, j] = 1.0


def _drive_out_artificials(T, xB, basis, vstat, lo, up, N):
    """Pivot zero-valued artificial basics out where a usable column exists.

    Rows with no usable column are redundant; their artificial stays basic
    and is clamped to [0, 0].
    """
    m = xB.shape[0]
    open_cols = (vstat != BASIC) & (lo[:N] < up[:N])
    for r in range(m):
        if basis[r] < N:
            continue
        row = np.abs(T[r, :N])
        row = np.where(open_cols, row, 0.0)
        j = int(np.argmax(row))
        if row[j] > _CLEAN_TOL:
            _pivot(T, xB, basis, vstat, lo, up, r, j, 1, 0.0, N)
            open_cols[j] = False
        else:
            up[basis[r]] = 0.0
            xB[r] = 0.0


def simplex_run(T, xB, basis, vstat, lo, up, feas_row, max_pivots, bland_after):
    """Run the two-phase iteration in place; returns (status, pivots).

    ``feas_row`` holds one absolute feasibility tolerance per row; an
    artificial counts as cleared only below its own row's tolerance.
    """
    m = xB.shape[0]
    N = T.shape[1]
    lo_n = lo[:N]
    up_n = up[:N]
    open_cols = lo_n < up_n
    pivots = 0
    degen = 0
    bland = False
    phase = 1 if np.any(basis >= N) else 2

    def artificials_cleared() -> bool:
        art = basis >= N
        if not art.any():
            return True
        # each artificial keeps the tolerance of the row it was created for
        return bool(np.all(xB[art] <= feas_row[basis[art] - N]))

    while True:
        if phase == 1:
            if artificials_cleared():
                _drive_out_artificials(T, xB, basis, vstat, lo, up, N)
                phase = 2
                continue
            d = T[m + 1]
        else:
            d = T[m]

        eligible = open_cols & (
            (((vstat == AT_LOWER) | (vstat == FREE)) & (d < -_PRICE_TOL))
            | (((vstat == AT_UPPER) | (vstat == FREE)) & (d > _PRICE_TOL))
        )
        if not eligible.any():
            if phase == 1:
                if not artificials_cleared():
                    return INFEASIBLE, pivots
                _drive_out_artificials(T, xB, basis, vstat, lo, up, N)
                phase = 2
                continue
            return OPTIMAL, pivots

        if bland:
            j = int(np.argmax(eligible))
        else:
            score = np.where(eligible, np.abs(d), -1.0)
            j = int(np.argmax(score))
        dir_ = 1 if d[j] < 0.0 else -1

        # ratio test
        col = T[:m, j]
        delta = dir_ * col
        t = np.full(m, np.inf)
        dec = delta > _PIV_TOL
        if dec.any():
            lob = lo[basis[dec]]
            t[dec] = (xB[dec] - lob) / delta[dec]
        inc = delta < -_PIV_TOL
        if inc.any():
            upb = up[basis[inc]]
            t[inc] = (upb - xB[inc]) / (-delta[inc])
        np.maximum(t, 0.0, out=t)

        t_row = float(t.min()) if m else np.inf
        if vstat[j] != FREE and np.isfinite(lo[j]) and np.isfinite(up[j]):
            t_flip = up[j] - lo[j]
        else:
            t_flip = np.inf
        t_star = min(t_row, t_flip)

        if not np.isfinite(t_star):
            return (UNBOUNDED if phase == 2 else NUMERICAL), pivots

        pivots += 1
        if t_star < _DEGEN_TOL:
            degen += 1
            if degen > bland_after:
                bland = True
        if pivots > max_pivots:
            return PIVOT_LIMIT, pivots

        if t_flip <= t_row:
            # bound flip: no basis change
            xB -= (dir_ * t_flip) * col
            vstat[j] = AT_UPPER if vstat[j] == AT_LOWER else AT_LOWER
            continue

        ties = t <= t_star + 1e-12
        if bland:
            cand = np.where(ties, basis, np.iinfo(np.int64).max)
            r = int(np.argmin(cand))
        else:
            mag = np.where(ties, np.abs(delta), -1.0)
            best = float(mag.max())
            near = ties & (mag >= best - 1e-15)
            cand = np.where(near, basis, np.iinfo(np.int64).max)
            r = int(np.argmin(cand))
        _pivot(T, xB, basis, vstat, lo, up, r, j, dir_, t_star, N)
