"""Linear reformulation of convex generator costs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..network import CostFunction


@dataclass(frozen=True)
class CostTerms:
    """Objective contribution of one generator.

    The cost is ``constant + linear * P + quadratic * P^2`` plus, when
    ``pieces`` is non-empty, an epigraph variable ``t >= slope * P + intercept``
    for every ``(slope, intercept)`` piece.
    """

    linear: float = 0.0
    constant: float = 0.0
    quadratic: float = 0.0
    pieces: tuple[tuple[float, float], ...] = ()

    def __call__(self, p: float) -> float:
        val = self.constant + self.linear * p + self.quadratic * p * p
        if self.pieces:
            val += max(s * p + c for s, c in self.pieces)
        return val


def tangent_points(pmin: float, pmax: float, segments: int) -> list[float]:
    """Midpoints of ``segments`` equal slices of ``[pmin, pmax]``."""
    h = (pmax - pmin) / segments
    return [pmin + (i + 0.5) * h for i in range(segments)]


def convexify_objective(costs: Sequence[tuple[CostFunction, float, float]], segments: int = 10,
                        quadratic: bool = False) -> list[CostTerms]:
    """Turn each ``(cost, Pmin, Pmax)`` into linear objective data.

    Quadratic costs become ``segments`` tangent lines at uniformly spaced
    points of ``[Pmin, Pmax]`` unless ``quadratic`` is set, in which case the
    curvature is passed through untouched for a backend that handles it.
    The tangents underestimate the cost everywhere, so bounds stay valid.
    """
    if segments < 1:
        raise ValueError("need at least one segment")
    out = []
    for f, pmin, pmax in costs:
        if f.kind == "pwl":
            pieces = tuple((m, y0 - m * x0) for (x0, y0), m in zip(f.points, f.slopes))
            out.append(CostTerms(pieces=pieces))
        elif f.c2 == 0.0:
            out.append(CostTerms(linear=f.c1, constant=f.c0))
        elif quadratic:
            out.append(CostTerms(linear=f.c1, constant=f.c0, quadratic=f.c2))
        else:
            pts = sorted(set(tangent_points(pmin, pmax, segments)))
            pieces = tuple((2 * f.c2 * p + f.c1, f.c0 - f.c2 * p * p) for p in pts)
            out.append(CostTerms(pieces=pieces))
    return out
