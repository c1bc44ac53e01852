"""Bounded-variable primal simplex for small dense LPs.

Solves ``min c @ x  s.t.  A_eq @ x == b_eq,  lo <= x <= hi`` with every bound
finite. Entering and leaving variables follow Bland's rule (lowest index), so
degenerate problems terminate and repeated solves pick the same vertex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


class LPError(RuntimeError):
    """Internal solver failure (iteration limit, failed optimality certificate)."""


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    basis: tuple[int, ...] = field(default=())

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Dense tableau ``B^-1 [A | I]`` with nonbasic variables parked on a bound."""

    def __init__(self, T, xb, basis, lo, hi, at_upper, tol):
        self.T = T
        self.xb = xb
        self.basis = basis
        self.lo = lo
        self.hi = hi
        self.at_upper = at_upper
        self.tol = tol
        self.iterations = 0

    def nonbasic_values(self) -> np.ndarray:
        return np.where(self.at_upper, self.hi, self.lo)

    def values(self) -> np.ndarray:
        x = self.nonbasic_values()
        x[self.basis] = self.xb
        return x

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int) -> None:
        tol = self.tol
        n = self.T.shape[1]
        is_basic = np.zeros(n, dtype=bool)
        movable = allowed & (self.hi - self.lo > tol)
        while True:
            if self.iterations >= max_iter:
                raise LPError(f"simplex iteration limit ({max_iter}) reached")
            is_basic[:] = False
            is_basic[self.basis] = True
            d = cost - cost[self.basis] @ self.T
            scale = 1.0 + np.abs(cost).max(initial=0.0)
            dtol = tol * scale
            improving = movable & ~is_basic & (
                (~self.at_upper & (d < -dtol)) | (self.at_upper & (d > dtol)))
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return
            j = int(cand[0])
            s = -1.0 if self.at_upper[j] else 1.0
            delta = -s * self.T[:, j]
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            steps = np.full(delta.shape, np.inf)
            down = delta < -tol
            up = delta > tol
            steps[down] = (self.xb[down] - lo_b[down]) / -delta[down]
            steps[up] = (hi_b[up] - self.xb[up]) / delta[up]
            steps = np.maximum(steps, 0.0)
            flip = self.hi[j] - self.lo[j]
            t_row = steps.min(initial=np.inf)
            self.iterations += 1
            if flip <= t_row + tol:
                self.xb += flip * delta
                self.at_upper[j] = not self.at_upper[j]
            else:
                ties = np.flatnonzero(steps <= t_row + tol)
                r = int(ties[np.argmin(self.basis[ties])])
                t = steps[r]
                start = self.hi[j] if self.at_upper[j] else self.lo[j]
                leaving = self.basis[r]
                self.xb += t * delta
                self.at_upper[leaving] = delta[r] > 0
                self.pivot(r, j)
                self.xb[r] = start + s * t
                self.at_upper[j] = False
            np.clip(self.xb, self.lo[self.basis], self.hi[self.basis], out=self.xb)


def _bounds_arrays(bounds, n: int) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(bounds, dtype=float)
    if arr.shape == (n, 2):
        lo, hi = arr[:, 0].copy(), arr[:, 1].copy()
    elif arr.shape == (2, n):
        lo, hi = arr[0].copy(), arr[1].copy()
    else:
        raise ValueError(f"bounds must have shape ({n}, 2), got {arr.shape}")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("every variable needs finite bounds")
    if np.any(lo > hi):
        raise ValueError(f"empty bound interval for variable {int(np.argmax(lo > hi))}")
    return lo, hi


def solve_lp(c, A_eq, b_eq, bounds, *, tol: float = 1e-9,
             feas_tol: float = 1e-7, max_iter: int | None = None) -> LPResult:
    """Minimize ``c @ x`` over ``A_eq x = b_eq`` and box ``bounds``.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs. Returns an :class:`LPResult`
    whose status is ``"optimal"`` or ``"infeasible"``.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A = np.asarray(A_eq, dtype=float).reshape(-1, n)
    b = np.asarray(b_eq, dtype=float).ravel()
    m = A.shape[0]
    if b.size != m:
        raise ValueError(f"A_eq has {m} rows but b_eq has {b.size} entries")
    lo, hi = _bounds_arrays(bounds, n)
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    if m == 0:
        x = np.where(c > 0, lo, np.where(c < 0, hi, lo))
        return LPResult(x, float(c @ x), OPTIMAL)

    # phase 1: artificial per row, nonbasic structurals at their lower bound
    resid = b - A @ lo
    sign = np.where(resid < 0, -1.0, 1.0)
    T = np.hstack([A * sign[:, None], np.eye(m)])
    lo1 = np.concatenate([lo, np.zeros(m)])
    hi1 = np.concatenate([hi, np.full(m, np.inf)])
    tab = _Tableau(T, np.abs(resid), np.arange(n, n + m), lo1, hi1,
                   np.zeros(n + m, dtype=bool), tol)
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    tab.run(cost1, np.ones(n + m, dtype=bool), max_iter)
    infeas = float(tab.xb[tab.basis >= n].sum())
    bscale = 1.0 + np.abs(b).max(initial=0.0)
    if infeas > feas_tol * bscale:
        return LPResult(tab.values()[:n], float("nan"), INFEASIBLE, tab.iterations)

    # drive zero-valued artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if tab.basis[r] < n:
            continue
        row = tab.T[r, :n].copy()
        row[tab.basis[tab.basis < n]] = 0.0
        cols = np.flatnonzero(np.abs(row) > 1e-7)
        if cols.size:
            # degenerate pivot: the entering column keeps its bound value
            j = int(cols[0])
            value = tab.hi[j] if tab.at_upper[j] else tab.lo[j]
            tab.pivot(r, j)
            tab.xb[r] = value
            tab.at_upper[j] = False
        else:
            keep[r] = False
    tab.T = tab.T[keep][:, :n]
    tab.xb = tab.xb[keep]
    tab.basis = tab.basis[keep]
    tab.lo, tab.hi = lo, hi
    tab.at_upper = tab.at_upper[:n]
    A_k, b_k = A[keep], b[keep]

    # phase 2
    tab.run(c, np.ones(n, dtype=bool), max_iter)
    x = _refine(tab, A_k, b_k, lo, hi)
    _certify(x, tab, A, b, A_k, c, lo, hi, feas_tol, tol)
    return LPResult(x, float(c @ x), OPTIMAL, tab.iterations, tuple(int(j) for j in tab.basis))


def _refine(tab: _Tableau, A, b, lo, hi) -> np.ndarray:
    """Recompute basic values from the original rows to shed pivot round-off."""
    x = tab.nonbasic_values()
    basis = tab.basis
    x[basis] = 0.0
    if basis.size:
        B = A[:, basis]
        try:
            xb = np.linalg.solve(B, b - A @ x)
        except np.linalg.LinAlgError:
            xb = tab.xb
        x[basis] = xb
    return np.clip(x, lo, hi)


def _certify(x, tab: _Tableau, A, b, A_k, c, lo, hi, feas_tol, tol) -> None:
    scale = 1.0 + np.abs(b).max(initial=0.0)
    resid = np.abs(A @ x - b).max(initial=0.0)
    if resid > feas_tol * scale:
        raise LPError(f"primal residual {resid:.3g} exceeds tolerance")
    basis = tab.basis
    if basis.size:
        y = np.linalg.lstsq(A_k[:, basis].T, c[basis], rcond=None)[0]
        d = c - A_k.T @ y
    else:
        d = c.copy()
    nonbasic = np.ones(c.size, dtype=bool)
    nonbasic[basis] = False
    slack = 1e-6 * (1.0 + np.abs(c).max(initial=0.0))
    at_lo = nonbasic & (x <= lo + feas_tol)
    at_hi = nonbasic & (x >= hi - feas_tol)
    bad = nonbasic & ((at_lo & ~at_hi & (d < -slack)) | (at_hi & ~at_lo & (d > slack)))
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise LPError(f"optimality certificate failed: reduced cost {d[j]:.3g} on variable {j}")
