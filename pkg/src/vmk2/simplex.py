"""Dense revised simplex for the restricted master LP.

Solves max c^T x subject to A x <= b, x >= 0 with b >= 0, which is exactly
the shape of the configuration LP over a column pool. The all-slack basis is
feasible, so no phase-1 is needed. Columns can be appended between solves and
the optimal basis is kept warm, which is what makes column generation cheap.

Entering ties are broken toward the smallest variable index and the pivot
rule degrades to Bland's rule after a run of degenerate pivots, so the
iteration cannot cycle and results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-10
_DEGENERATE_STREAK = 40
_REFACTOR_EVERY = 200


class SimplexError(Exception):
    pass


@dataclass
class LpResult:
    value: float
    x: np.ndarray  # primal values of the structural columns
    duals: np.ndarray  # one multiplier per row, >= 0 at optimality


class DenseSimplex:
    """Incremental solver; structural variables are numbered after the slacks."""

    def __init__(self, b: np.ndarray):
        self.b = np.asarray(b, dtype=float)
        if np.any(self.b < 0):
            raise SimplexError("RHS must be nonnegative for the slack basis to be feasible")
        self.rows = len(self.b)
        self._cap = 64
        self.cols = np.zeros((self.rows, self._cap))
        self.obj = np.zeros(self._cap)
        self.ncols = 0
        # Basis state: slack i is variable i, structural k is variable rows + k.
        self.basis = np.arange(self.rows)
        self.binv = np.eye(self.rows)
        self.xb = self.b.copy()

    def add_column(self, col: np.ndarray, obj: float) -> int:
        if self.ncols == self._cap:
            self._cap *= 2
            grown = np.zeros((self.rows, self._cap))
            grown[:, : self.ncols] = self.cols[:, : self.ncols]
            self.cols = grown
            self.obj = np.resize(self.obj, self._cap)
        self.cols[:, self.ncols] = col
        self.obj[self.ncols] = obj
        self.ncols += 1
        return self.rows + self.ncols - 1

    def _column(self, var: int) -> np.ndarray:
        if var < self.rows:
            e = np.zeros(self.rows)
            e[var] = 1.0
            return e
        return self.cols[:, var - self.rows]

    def _objective(self, var: int) -> float:
        return 0.0 if var < self.rows else float(self.obj[var - self.rows])

    def _refactor(self) -> None:
        basis_cols = np.column_stack([self._column(v) for v in self.basis])
        self.binv = np.linalg.inv(basis_cols)
        self.xb = self.binv @ self.b
        np.clip(self.xb, 0.0, None, out=self.xb)

    def solve(self, tol: float = 1e-9, max_pivots: int = 200_000) -> LpResult:
        """Pivot from the current basis to optimality and return value/x/duals."""
        nstruct = self.ncols
        basic_mask = np.zeros(self.rows + nstruct, dtype=bool)
        basic_mask[self.basis] = True
        cb = np.array([self._objective(v) for v in self.basis])
        degenerate = 0
        bland = False
        for pivot_count in range(max_pivots):
            y = cb @ self.binv
            reduced = np.concatenate([-y, self.obj[:nstruct] - y @ self.cols[:, :nstruct]])
            reduced[basic_mask] = -np.inf
            if bland:
                improving = np.nonzero(reduced > tol)[0]
                if improving.size == 0:
                    break
                enter = int(improving[0])
            else:
                best = float(np.max(reduced))
                if best <= tol:
                    break
                near = np.nonzero(reduced >= best - tol)[0]
                enter = int(near[0])
            direction = self.binv @ self._column(enter)
            positive = np.nonzero(direction > _PIVOT_TOL)[0]
            if positive.size == 0:
                raise SimplexError("LP is unbounded")
            ratios = self.xb[positive] / direction[positive]
            rmin = float(np.min(ratios))
            tied = positive[ratios <= rmin + 1e-12]
            leave_row = int(tied[np.argmin(self.basis[tied])])
            if rmin <= 1e-12:
                degenerate += 1
                if degenerate >= _DEGENERATE_STREAK:
                    bland = True
            else:
                degenerate = 0
                bland = False
            # Pivot: replace basis[leave_row] by the entering variable.
            piv = direction[leave_row]
            theta = self.xb[leave_row] / piv
            self.xb -= theta * direction
            self.xb[leave_row] = theta
            np.clip(self.xb, 0.0, None, out=self.xb)
            self.binv[leave_row] /= piv
            other = direction.copy()
            other[leave_row] = 0.0
            self.binv -= np.outer(other, self.binv[leave_row])
            basic_mask[self.basis[leave_row]] = False
            basic_mask[enter] = True
            self.basis[leave_row] = enter
            cb[leave_row] = self._objective(enter)
            if (pivot_count + 1) % _REFACTOR_EVERY == 0:
                self._refactor()
        else:
            raise SimplexError(f"no convergence within {max_pivots} pivots")
        y = cb @ self.binv
        x = np.zeros(nstruct)
        for row, var in enumerate(self.basis):
            if var >= self.rows:
                x[var - self.rows] = self.xb[row]
        np.clip(x, 0.0, None, out=x)
        duals = np.where(y > 0.0, y, 0.0)
        return LpResult(value=float(cb @ self.xb), x=x, duals=duals)
