"""Dense two-phase simplex for small linear programs.

Solves ``maximize c^T x subject to A x <= b`` with x unconstrained in sign,
by splitting x into positive and negative parts and adding slacks. Pivot
selection uses Bland's rule throughout, which is slower than steepest-edge
but cannot cycle on the degenerate vertices that random polytopes with box
constraints routinely produce. Problem sizes here are tiny (tens of rows),
so the dense tableau is the right tool.
"""

from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


class InfeasibleError(ValueError):
    """The constraint set is empty."""


class UnboundedError(ValueError):
    """The objective is unbounded over the constraint set."""


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    """Pivot on tableau row ``row`` (row 0 is the objective) and column
    ``col``; the basic variable of constraint ``row - 1`` becomes ``col``."""
    pivot_row = tableau[row] / tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, pivot_row)
    tableau[row] = pivot_row
    basis[row - 1] = col


def _bland_iterate(
    tableau: np.ndarray, basis: np.ndarray, n_cols: int, allowed: int
) -> None:
    """Run simplex iterations until no reduced cost improves.

    ``tableau`` has the objective in row 0 (expressed so that a negative
    entry means an improving column) and the rhs in the last column;
    ``allowed`` caps the entering-column index so phase 2 cannot re-enter
    artificial columns.
    """
    m = tableau.shape[0] - 1
    max_iter = 200 * (m + n_cols)
    for _ in range(max_iter):
        reduced = tableau[0, :allowed]
        improving = np.nonzero(reduced < -PIVOT_TOL)[0]
        if improving.size == 0:
            return
        col = int(improving[0])
        column = tableau[1:, col]
        positive = np.nonzero(column > PIVOT_TOL)[0]
        if positive.size == 0:
            raise UnboundedError("objective improves along an unbounded ray")
        ratios = tableau[1:, -1][positive] / column[positive]
        best = ratios.min()
        ties = positive[np.nonzero(ratios <= best + PIVOT_TOL * (1 + abs(best)))[0]]
        # Bland: among tied rows leave the one whose basic variable has the
        # smallest index.
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tableau, basis, row + 1, col)
    raise RuntimeError("simplex failed to terminate")


def simplex_maximize(
    c: np.ndarray, a_ub: np.ndarray, b_ub: np.ndarray
) -> tuple[np.ndarray, float]:
    """Maximize ``c @ x`` over ``{x : a_ub @ x <= b_ub}``, x free.

    Returns ``(x, value)`` at an optimal vertex. Raises InfeasibleError or
    UnboundedError when the polyhedron is empty or the objective has no
    finite maximum.
    """
    c = np.asarray(c, dtype=float)
    a_ub = np.asarray(a_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    m, d = a_ub.shape
    if c.shape != (d,) or b_ub.shape != (m,):
        raise ValueError("inconsistent LP shapes")

    # Columns: d positive parts, d negative parts, m slacks, then artificials.
    split = np.hstack([a_ub, -a_ub, np.eye(m)])
    rhs = b_ub.copy()
    flip = rhs < 0
    split[flip] *= -1.0
    rhs[flip] *= -1.0
    art_rows = np.nonzero(flip)[0]
    n_core = 2 * d + m
    n_art = art_rows.size
    n_cols = n_core + n_art

    tableau = np.zeros((m + 1, n_cols + 1))
    tableau[1:, :n_core] = split
    tableau[1:, -1] = rhs
    basis = np.empty(m, dtype=int)
    basis[:] = 2 * d + np.arange(m)  # slack of each row
    for j, row in enumerate(art_rows):
        col = n_core + j
        tableau[row + 1, col] = 1.0
        basis[row] = col

    if n_art:
        # Phase 1: drive the artificial mass to zero. Objective row holds
        # minus the sum of artificial rows so reduced costs start consistent.
        tableau[0, :] = -tableau[1 + art_rows].sum(axis=0)
        tableau[0, n_core:-1] = 0.0
        _bland_iterate(tableau, basis, n_cols, allowed=n_cols)
        if tableau[0, -1] < -FEAS_TOL:
            raise InfeasibleError("constraints admit no feasible point")
        for row in range(m):
            if basis[row] >= n_core:
                # Degenerate artificial still basic at level zero: pivot it
                # out on any usable core column, else the row is redundant.
                usable = np.nonzero(np.abs(tableau[row + 1, :n_core]) > PIVOT_TOL)[0]
                if usable.size:
                    _pivot(tableau, basis, row + 1, int(usable[0]))

    # Phase 2 objective: maximize c over the split variables.
    cost = np.zeros(n_cols + 1)
    cost[:d] = -c
    cost[d : 2 * d] = c
    tableau[0, :] = cost
    for row in range(m):
        col = basis[row]
        if abs(tableau[0, col]) > 0:
            tableau[0, :] -= tableau[0, col] * tableau[row + 1, :]
    _bland_iterate(tableau, basis, n_cols, allowed=n_core)

    solution = np.zeros(n_cols)
    solution[basis] = tableau[1:, -1]
    x = solution[:d] - solution[d : 2 * d]
    return x, float(c @ x)
