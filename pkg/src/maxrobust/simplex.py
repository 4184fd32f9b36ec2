"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c @ x  s.t.  A @ x = b, x >= 0``. Meant for the small LPs of the
min-norm oracle (a few hundred rows/columns), where robustness matters more
than speed. The reported primal and dual are recomputed from the final basis
with a dense solve, so their accuracy does not depend on tableau drift.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-10


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    y: Optional[np.ndarray]  # equality multipliers: c - A.T @ y >= 0 at optimum
    objective: float
    iterations: int
    basis: Optional[np.ndarray] = None
    # For infeasible problems: y with A.T @ y <= 0 and b @ y > 0.
    farkas: Optional[np.ndarray] = None


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    piv = tab[row]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, piv)
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    basis[row] = col


def _run(tab, basis, allowed, max_iter):
    """Minimize the objective row (last row holds reduced costs). Returns (status, iters)."""
    m = tab.shape[0] - 1
    for it in range(max_iter):
        cost = tab[-1, :-1]
        candidates = np.nonzero((cost < -COST_TOL) & allowed)[0]
        if candidates.size == 0:
            return "optimal", it
        col = candidates[0]
        column = tab[:m, col]
        pos = column > PIVOT_TOL
        if not np.any(pos):
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))[0]
        row = ties[np.argmin(basis[ties])]
        _pivot(tab, basis, row, col)
    raise RuntimeError(f"simplex did not terminate in {max_iter} pivots")


def linprog_eq(c, a_eq, b_eq, max_iter=50_000):
    """Solve ``min c @ x, a_eq @ x = b_eq, x >= 0``."""
    c = np.asarray(c, dtype=float)
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, n = a.shape
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1

    # Phase 1: artificials n..n+m-1 start basic.
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n] = -a.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    allowed = np.ones(n + m, dtype=bool)
    _, it1 = _run(tab, basis, allowed, max_iter)
    phase1 = -tab[-1, -1]
    if phase1 > 1e-9 * max(1.0, b.sum()):
        # Phase-1 multipliers: reduced cost of artificial k is 1 - y_k.
        y = 1.0 - tab[-1, n:n + m]
        y[flip] *= -1
        return LPResult("infeasible", None, None, np.inf, it1, farkas=y)

    # Drive zero-level artificials out of the basis; drop redundant rows.
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n:
            nz = np.nonzero(np.abs(tab[r, :n]) > 1e-9)[0]
            if nz.size:
                _pivot(tab, basis, r, nz[0])
            else:
                keep[r] = False
    rows = np.nonzero(keep)[0]
    tab = np.vstack([tab[rows][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = basis[rows]

    # Phase 2: reduced costs c - c_B B^-1 A.
    tab[-1, :n] = c
    tab[-1, -1] = 0.0
    for r, j in enumerate(basis):
        tab[-1] -= c[j] * tab[r]
    status, it2 = _run(tab, basis, np.ones(n, dtype=bool), max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, None, -np.inf, it1 + it2)

    # Clean primal/dual from the basis matrix.
    bmat = a[rows][:, basis]
    x = np.zeros(n)
    x[basis] = np.linalg.solve(bmat, b[rows])
    x[np.abs(x) < 1e-14] = 0.0
    y_rows = np.linalg.solve(bmat.T, c[basis])
    y = np.zeros(m)
    y[rows] = y_rows
    y[flip] *= -1
    return LPResult("optimal", x, y, float(c @ x), it1 + it2, basis=basis)
