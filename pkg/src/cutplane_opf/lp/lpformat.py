"""Model exchange: CPLEX-LP writer and a plain ``name value`` solution reader."""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from .model import LinearModel, Sense, Solution, SolveStatus

_SENSE = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}


def _g(x: float) -> str:
    return f"{x:.17g}"


def _terms(coeffs: Mapping[int, float], names: list[str]) -> str:
    if not coeffs:
        return "0 " + names[0] if names else "0"
    parts = []
    for j, a in coeffs.items():
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {_g(abs(a))} {names[j]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(model: LinearModel) -> str:
    names = [v.name for v in model.variables]
    lines = [f"\\ Problem: {model.name}", "Minimize"]
    obj = " obj: " + _terms(model.obj_linear, names)
    if model.obj_quadratic:
        quad = " + ".join(f"{_g(2 * q)} {names[j]} ^ 2" for j, q in model.obj_quadratic.items())
        obj += f" + [ {quad} ] / 2"
    if model.obj_constant:
        obj += f" + {_g(model.obj_constant)} const@obj"
    lines.append(obj)
    lines.append("Subject To")
    for ref, row in model.constraints():
        lines.append(f" {row.name}: {_terms(row.coeffs, names)} {_SENSE[row.sense]} {_g(row.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        lo, hi = model.bounds(v)
        if math.isinf(lo) and math.isinf(hi):
            lines.append(f" {v.name} free")
        elif lo == hi:
            lines.append(f" {v.name} = {_g(lo)}")
        else:
            left = "-inf" if math.isinf(lo) else _g(lo)
            right = "+inf" if math.isinf(hi) else _g(hi)
            lines.append(f" {left} <= {v.name} <= {right}")
    if model.obj_constant:
        lines.append(" const@obj = 1")
    lines.append("End")
    return "\n".join(lines) + "\n"


def read_solution(text: str, model: LinearModel) -> Solution:
    """Read ``name value`` lines produced by an external solver.

    An optional ``status <word>`` line sets the status; otherwise the point is
    taken as merely feasible. Unknown names are ignored, missing ones are an
    error.
    """
    values: dict[str, float] = {}
    status = SolveStatus.SUBOPTIMAL_FEASIBLE
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0].lower() == "status" and len(parts) == 2:
            lookup = {s.value.lower(): s for s in SolveStatus}
            try:
                status = lookup[parts[1].lower()]
            except KeyError:
                raise ValueError(f"line {lineno}: unknown status {parts[1]!r}") from None
            continue
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'name value'")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: bad number {parts[1]!r}") from None
    if not status.has_point:
        return Solution(status)
    x = np.empty(model.num_variables)
    for v in model.variables:
        if v.name not in values:
            raise ValueError(f"solution lacks variable {v.name}")
        x[v.index] = values[v.name]
    return Solution(status, x=x, objective=model.objective_value(x))
