"""Linear model, solver oracles and model exchange."""

from __future__ import annotations

from typing import Optional, Union

from .epigraph import CostTerms, convexify_objective, tangent_points
from .highs import HighsBackend
from .lpformat import read_solution, write_lp
from .model import (ConRef, LinearModel, Limits, Sense, Solution, SolveStatus,
                    StaleHandleError, Tolerances, VarRef)
from .simplex import SimplexBackend, farkas_gap

BACKENDS = {"simplex": SimplexBackend, "highs": HighsBackend}


def get_backend(backend: Union[str, object, None] = None):
    if backend is None:
        return SimplexBackend()
    if isinstance(backend, str):
        try:
            return BACKENDS[backend]()
        except KeyError:
            raise ValueError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return backend


def solve(model: LinearModel, limits: Optional[Limits] = None,
          tolerances: Optional[Tolerances] = None, backend=None) -> Solution:
    """Solve ``model`` and re-check any returned point against the stored rows.

    A point that violates the model by more than ``tolerances.feas`` is
    downgraded to ``NumericTrouble`` whatever the backend claimed.
    """
    limits = limits or Limits()
    tolerances = tolerances or Tolerances()
    sol = get_backend(backend).solve(model, limits, tolerances)
    if sol.status.has_point:
        worst = model.max_violation(sol.x)
        if worst > tolerances.feas:
            sol.message = f"point violates the model by {worst:.3g}"
            sol.status = SolveStatus.NUMERIC_TROUBLE
    return sol


__all__ = [
    "BACKENDS", "ConRef", "CostTerms", "HighsBackend", "LinearModel", "Limits", "Sense",
    "SimplexBackend", "Solution", "SolveStatus", "StaleHandleError", "Tolerances", "VarRef",
    "convexify_objective", "farkas_gap", "get_backend", "read_solution", "solve",
    "tangent_points", "write_lp",
]
