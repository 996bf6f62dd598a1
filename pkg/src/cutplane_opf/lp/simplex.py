"""Bundled LP backend: bounded-variable revised primal simplex.

Every row gets a logical column (``a x + s = b``) whose bounds encode the row
sense, so the initial basis is the identity. Rows whose logical would start
out of bounds receive an artificial column and Phase I minimises the sum of
artificials. The basis inverse is kept explicitly, updated in product form
and refactorised periodically.

Pricing is Dantzig's rule; after ``degenerate_limit`` consecutive degenerate
pivots it switches to Bland's smallest-index rule until progress resumes.
The ratio test is Harris' two-pass test.

Infeasibility is only reported when the Phase I duals verify as a Farkas
certificate; otherwise the result is ``NumericTrouble``.
"""

from __future__ import annotations

import math
import time
from typing import Callable, Optional

import numpy as np

from .model import LinearModel, Limits, Sense, Solution, SolveStatus, Tolerances

_BASIC, _LOWER, _UPPER, _FREE, _FIXED = 0, 1, 2, 3, 4


def farkas_gap(y: np.ndarray, A: np.ndarray, b: np.ndarray, lb: np.ndarray,
               ub: np.ndarray, zero_tol: float = 1e-11) -> float:
    """Certificate strength of ``y`` for ``{A x = b, lb <= x <= ub}``.

    Returns ``y.b - max_{lb<=x<=ub} (y A) x`` (``-inf`` if the maximum is
    unbounded). A positive value proves the system empty.
    """
    g = y @ A
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    g = np.where(np.abs(g) <= zero_tol * scale * max(1.0, float(np.max(np.abs(A), initial=0.0))), 0.0, g)
    pos, neg = g > 0, g < 0
    if np.any(pos & ~np.isfinite(ub)) or np.any(neg & ~np.isfinite(lb)):
        return -math.inf
    support = float(np.sum(g[pos] * ub[pos]) + np.sum(g[neg] * lb[neg]))
    return float(y @ b) - support


class SimplexBackend:
    name = "simplex"
    supports_quadratic = False

    def __init__(self, refactor_every: int = 50, degenerate_limit: int = 40,
                 pivot_tol: float = 1e-9, primal_tol: float = 1e-9, dual_tol: float = 1e-9,
                 clock: Callable[[], float] = time.perf_counter):
        self.refactor_every = refactor_every
        self.degenerate_limit = degenerate_limit
        self.pivot_tol = pivot_tol
        self.primal_tol = primal_tol
        self.dual_tol = dual_tol
        self.clock = clock

    def solve(self, model: LinearModel, limits: Limits, tolerances: Tolerances) -> Solution:
        if model.has_quadratic:
            raise ValueError("simplex backend has no quadratic support; convexify the objective")
        c, A, senses, b, lb, ub = model.arrays()
        run = _Run(self, c, A, senses, b, lb, ub, limits)
        sol = run.solve()
        if sol.x is not None:
            sol.objective = model.objective_value(sol.x)
        return sol


class _Run:
    def __init__(self, cfg: SimplexBackend, c, A, senses, b, lb, ub, limits: Limits):
        self.cfg = cfg
        m, n = A.shape
        self.m, self.n = m, n
        self.b = b
        llb = np.array([0.0 if s is Sense.LE or s is Sense.EQ else -math.inf for s in senses])
        lub = np.array([0.0 if s is Sense.GE or s is Sense.EQ else math.inf for s in senses])
        self.A0 = np.hstack([A, np.eye(m)])
        self.lb0 = np.concatenate([lb, llb])
        self.ub0 = np.concatenate([ub, lub])
        self.c0 = np.concatenate([c, np.zeros(m)])
        start = cfg.clock()
        self.deadline = math.inf if limits.time is None else start + limits.time
        self.max_iter = limits.iterations if limits.iterations is not None else 50 * (m + n) + 1000
        self.iters = 0

    # -- setup ---------------------------------------------------------------
    def _initial_basis(self):
        m, n = self.m, self.n
        lb, ub = self.lb0, self.ub0
        x = np.zeros(n + m)
        xs = np.where(np.isfinite(lb[:n]), lb[:n], np.where(np.isfinite(ub[:n]), ub[:n], 0.0))
        x[:n] = xs
        need = self.b - self.A0[:, :n] @ xs
        tol = self.cfg.primal_tol
        art_cols, art_rows = [], []
        basis = np.empty(m, dtype=int)
        for i in range(m):
            lo, hi = lb[n + i], ub[n + i]
            if lo - tol <= need[i] <= hi + tol:
                basis[i] = n + i
                x[n + i] = need[i]
            else:
                clamp = min(max(need[i], lo), hi)
                x[n + i] = clamp
                r = need[i] - clamp
                art_rows.append(i)
                art_cols.append(math.copysign(1.0, r))
        k = len(art_rows)
        art = np.zeros((m, k))
        for j, (i, sgn) in enumerate(zip(art_rows, art_cols)):
            art[i, j] = sgn
            basis[i] = n + m + j
        self.A = np.hstack([self.A0, art])
        self.lb = np.concatenate([lb, np.zeros(k)])
        self.ub = np.concatenate([ub, np.full(k, math.inf)])
        self.nart = k
        x = np.concatenate([x, np.zeros(k)])
        for j, i in enumerate(art_rows):
            x[n + m + j] = abs(need[i] - x[n + i])
        self.x = x
        self.basis = basis
        state = np.empty(len(x), dtype=int)
        for j in range(len(x)):
            state[j] = self._nonbasic_state(j)
        state[basis] = _BASIC
        self.state = state
        self._refactor()

    def _nonbasic_state(self, j: int) -> int:
        lo, hi, v = self.lb[j], self.ub[j], self.x[j]
        if lo == hi:
            return _FIXED
        if math.isinf(lo) and math.isinf(hi):
            return _FREE
        if math.isfinite(lo) and v == lo:
            return _LOWER
        if math.isfinite(hi) and v == hi:
            return _UPPER
        return _LOWER if math.isfinite(lo) else _UPPER

    def _refactor(self) -> None:
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B)
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self.A @ xn)
        self.since_refactor = 0

    # -- iterations ------------------------------------------------------------
    def _phase(self, cost: np.ndarray) -> str:
        cfg = self.cfg
        dual_tol = cfg.dual_tol * max(1.0, float(np.max(np.abs(cost), initial=0.0)))
        ptol = cfg.primal_tol
        degenerate = 0
        bland = False
        while True:
            if self.iters >= self.max_iter or cfg.clock() > self.deadline:
                return "limit"
            if self.since_refactor >= cfg.refactor_every:
                self._refactor()
            basis = self.basis
            y = cost[basis] @ self.Binv
            d = cost - y @ self.A
            st = self.state
            score = np.zeros_like(d)
            lo = st == _LOWER
            up = st == _UPPER
            fr = st == _FREE
            score[lo] = -d[lo]
            score[up] = d[up]
            score[fr] = np.abs(d[fr])
            cand = score > dual_tol
            if not cand.any():
                return "optimal"
            q = int(np.flatnonzero(cand)[0]) if bland else int(np.argmax(score))
            direction = 1.0 if (st[q] == _LOWER or (st[q] == _FREE and d[q] < 0)) else -1.0
            alpha = self.Binv @ self.A[:, q]
            delta = direction * alpha
            xB = self.x[basis]
            lbB = self.lb[basis]
            ubB = self.ub[basis]
            dec = delta > cfg.pivot_tol
            inc = delta < -cfg.pivot_tol
            relaxed = np.full(self.m, math.inf)
            exact = np.full(self.m, math.inf)
            with np.errstate(invalid="ignore", divide="ignore"):
                relaxed[dec] = (xB[dec] - lbB[dec] + ptol) / delta[dec]
                relaxed[inc] = (ubB[inc] - xB[inc] + ptol) / -delta[inc]
                exact[dec] = (xB[dec] - lbB[dec]) / delta[dec]
                exact[inc] = (ubB[inc] - xB[inc]) / -delta[inc]
            relaxed = np.nan_to_num(relaxed, nan=math.inf, posinf=math.inf)
            exact = np.nan_to_num(exact, nan=math.inf, posinf=math.inf)
            theta_max = float(np.min(relaxed)) if self.m else math.inf
            flip = self.ub[q] - self.lb[q]
            if math.isinf(theta_max) and not flip < math.inf:
                return "unbounded"
            self.iters += 1
            if flip <= theta_max:
                self.x[q] += direction * flip
                self.x[basis] -= flip * delta
                st[q] = _UPPER if direction > 0 else _LOWER
                degenerate = 0
                bland = False
                continue
            elig = exact <= theta_max
            if bland:
                tmin = np.min(exact[elig])
                ties = np.flatnonzero(elig & (exact <= tmin))
                r = int(ties[np.argmin(basis[ties])])
            else:
                r = int(np.argmax(np.where(elig, np.abs(delta), -1.0)))
            theta = max(float(exact[r]), 0.0)
            self.x[q] += direction * theta
            self.x[basis] -= theta * delta
            leaving = int(basis[r])
            if delta[r] > 0:
                self.x[leaving] = self.lb[leaving]
            else:
                self.x[leaving] = self.ub[leaving]
            st[leaving] = _FIXED if self.lb[leaving] == self.ub[leaving] else (
                _LOWER if delta[r] > 0 else _UPPER)
            basis[r] = q
            st[q] = _BASIC
            piv = alpha[r]
            row_r = self.Binv[r] / piv
            self.Binv -= np.outer(alpha, row_r)
            self.Binv[r] = row_r
            self.since_refactor += 1
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= cfg.degenerate_limit:
                    bland = True
            else:
                degenerate = 0
                bland = False

    def _primal_infeasibility(self) -> float:
        x, lb, ub = self.x, self.lb, self.ub
        return float(max(np.max(lb - x, initial=0.0), np.max(x - ub, initial=0.0)))

    def solve(self) -> Solution:
        try:
            self._initial_basis()
        except np.linalg.LinAlgError:
            return Solution(SolveStatus.NUMERIC_TROUBLE, message="singular initial basis")
        n, m, k = self.n, self.m, self.nart
        try:
            if k:
                cost1 = np.zeros(n + m + k)
                cost1[n + m:] = 1.0
                outcome = self._phase(cost1)
                if outcome == "limit":
                    return Solution(SolveStatus.TIME_LIMIT, iterations=self.iters)
                if outcome != "optimal":
                    return Solution(SolveStatus.NUMERIC_TROUBLE, iterations=self.iters,
                                    message=f"phase I {outcome}")
                self._refactor()
                infeas = float(np.sum(self.x[n + m:]))
                if infeas > 1e2 * self.cfg.primal_tol * max(1.0, float(np.max(np.abs(self.b), initial=0.0))):
                    y = cost1[self.basis] @ self.Binv
                    for cand in (y, -y):
                        if farkas_gap(cand, self.A0, self.b, self.lb0, self.ub0) > 1e-9:
                            return Solution(SolveStatus.INFEASIBLE, iterations=self.iters,
                                            certificate=cand)
                    return Solution(SolveStatus.NUMERIC_TROUBLE, iterations=self.iters,
                                    message="phase I stalled without a Farkas certificate")
                # Lock artificials at zero for phase II.
                self.ub[n + m:] = 0.0
                for j in range(n + m, n + m + k):
                    if self.state[j] != _BASIC:
                        self.x[j] = 0.0
                        self.state[j] = _FIXED
            cost2 = np.concatenate([self.c0, np.zeros(k)])
            outcome = self._phase(cost2)
            self._refactor()
        except np.linalg.LinAlgError:
            return Solution(SolveStatus.NUMERIC_TROUBLE, iterations=self.iters,
                            message="singular basis")
        if outcome == "unbounded":
            return Solution(SolveStatus.UNBOUNDED, iterations=self.iters)
        bad = self._primal_infeasibility()
        if bad > 1e3 * self.cfg.primal_tol:
            return Solution(SolveStatus.NUMERIC_TROUBLE, iterations=self.iters,
                            message=f"basic solution drifted out of bounds by {bad:.3g}")
        x = np.clip(self.x[:n], self.lb0[:n], self.ub0[:n])
        status = SolveStatus.OPTIMAL if outcome == "optimal" else SolveStatus.SUBOPTIMAL_FEASIBLE
        return Solution(status, x=x, iterations=self.iters)
