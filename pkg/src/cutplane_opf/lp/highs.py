"""Alternative oracle backed by HiGHS through :func:`scipy.optimize.linprog`."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .model import LinearModel, Limits, Sense, Solution, SolveStatus, Tolerances


class HighsBackend:
    name = "highs"
    supports_quadratic = False

    def solve(self, model: LinearModel, limits: Limits, tolerances: Tolerances) -> Solution:
        if model.has_quadratic:
            raise ValueError("highs backend is used for LPs only; convexify the objective")
        c, A, senses, b, lb, ub = model.arrays()
        le = np.array([s is Sense.LE for s in senses], dtype=bool)
        ge = np.array([s is Sense.GE for s in senses], dtype=bool)
        eq = ~(le | ge)
        A_ub = np.vstack([A[le], -A[ge]])
        b_ub = np.concatenate([b[le], -b[ge]])
        options = {"primal_feasibility_tolerance": min(1e-9, tolerances.feas),
                   "dual_feasibility_tolerance": min(1e-9, tolerances.opt)}
        if limits.time is not None:
            options["time_limit"] = max(float(limits.time), 1e-3)
        if limits.iterations is not None:
            options["maxiter"] = int(limits.iterations)
        res = linprog(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                      A_eq=A[eq] if eq.any() else None, b_eq=b[eq] if eq.any() else None,
                      bounds=list(zip(np.where(np.isfinite(lb), lb, None),
                                      np.where(np.isfinite(ub), ub, None))),
                      method="highs", options=options)
        if res.status == 0:
            x = np.asarray(res.x)
            return Solution(SolveStatus.OPTIMAL, x=x, objective=model.objective_value(x),
                            iterations=int(getattr(res, "nit", 0)))
        if res.status == 1:
            if res.x is not None:
                x = np.asarray(res.x)
                return Solution(SolveStatus.SUBOPTIMAL_FEASIBLE, x=x,
                                objective=model.objective_value(x))
            return Solution(SolveStatus.TIME_LIMIT, message=res.message)
        if res.status == 2:
            # HiGHS only reports infeasibility after a presolve or dual-ray proof.
            return Solution(SolveStatus.INFEASIBLE, message=res.message)
        if res.status == 3:
            return Solution(SolveStatus.UNBOUNDED, message=res.message)
        return Solution(SolveStatus.NUMERIC_TROUBLE, message=res.message)
