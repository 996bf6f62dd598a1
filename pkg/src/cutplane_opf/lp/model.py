"""Mutable linear model with addressable rows and a backend-neutral solve."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

import numpy as np


class StaleHandleError(KeyError):
    """A constraint handle that was already removed (or never existed)."""


class Sense(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    SUBOPTIMAL_FEASIBLE = "SuboptimalFeasible"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERIC_TROUBLE = "NumericTrouble"
    TIME_LIMIT = "TimeLimit"

    @property
    def has_point(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.SUBOPTIMAL_FEASIBLE)


@dataclass(frozen=True)
class VarRef:
    """Handle of a model variable; ``name`` is ``"<role>@<entity>"``."""

    index: int
    name: str

    @property
    def role(self) -> str:
        return self.name.split("@", 1)[0]

    @property
    def entity(self) -> str:
        return self.name.split("@", 1)[1] if "@" in self.name else ""


@dataclass(frozen=True)
class ConRef:
    id: int
    name: str


@dataclass
class Row:
    coeffs: dict[int, float]
    sense: Sense
    rhs: float
    name: str


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-6
    opt: float = 1e-6


@dataclass(frozen=True)
class Limits:
    time: Optional[float] = None
    iterations: Optional[int] = None


@dataclass
class Solution:
    status: SolveStatus
    x: Optional[np.ndarray] = None
    objective: float = math.nan
    iterations: int = 0
    # Farkas multipliers over the model rows (in row order) for Infeasible.
    certificate: Optional[np.ndarray] = None
    message: str = ""

    def value(self, var: VarRef) -> float:
        if self.x is None:
            raise ValueError(f"no point available (status {self.status.value})")
        return float(self.x[var.index])

    def __getitem__(self, var: VarRef) -> float:
        return self.value(var)


def _check_finite(value: float, what: str) -> float:
    value = float(value)
    if math.isnan(value):
        raise ValueError(f"{what} is NaN")
    return value


class LinearModel:
    """Variables with bounds, linear rows, and a separable convex objective.

    Rows are addressable by :class:`ConRef` handles and can be removed; a
    removed handle becomes stale and any further use raises
    :class:`StaleHandleError`.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self._names: list[str] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._by_name: dict[str, VarRef] = {}
        self._rows: dict[int, Row] = {}
        self._next_row = 0
        self.obj_linear: dict[int, float] = {}
        self.obj_quadratic: dict[int, float] = {}
        self.obj_constant = 0.0

    # -- variables ---------------------------------------------------------
    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf) -> VarRef:
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if " " in name or not name:
            raise ValueError(f"invalid variable name {name!r}")
        lb, ub = _check_finite(lb, "lower bound"), _check_finite(ub, "upper bound")
        if lb > ub:
            raise ValueError(f"empty bounds for {name}: [{lb}, {ub}]")
        ref = VarRef(len(self._names), name)
        self._names.append(name)
        self._lb.append(lb)
        self._ub.append(ub)
        self._by_name[name] = ref
        return ref

    def set_bounds(self, var: VarRef, lb: float, ub: float) -> None:
        self._check_var(var)
        lb, ub = _check_finite(lb, "lower bound"), _check_finite(ub, "upper bound")
        if lb > ub:
            raise ValueError(f"empty bounds for {var.name}: [{lb}, {ub}]")
        self._lb[var.index] = lb
        self._ub[var.index] = ub

    def bounds(self, var: VarRef) -> tuple[float, float]:
        self._check_var(var)
        return self._lb[var.index], self._ub[var.index]

    def variable(self, name: str) -> VarRef:
        return self._by_name[name]

    @property
    def variables(self) -> list[VarRef]:
        return [VarRef(i, n) for i, n in enumerate(self._names)]

    @property
    def num_variables(self) -> int:
        return len(self._names)

    def _check_var(self, var: VarRef) -> None:
        if not (0 <= var.index < len(self._names)) or self._names[var.index] != var.name:
            raise StaleHandleError(f"unknown variable {var!r}")

    # -- rows --------------------------------------------------------------
    def add_constraint(self, coeffs: Mapping[VarRef, float], sense, rhs: float,
                       name: Optional[str] = None) -> ConRef:
        sense = Sense(sense)
        rhs = _check_finite(rhs, "right-hand side")
        if math.isinf(rhs):
            raise ValueError("right-hand side must be finite")
        row: dict[int, float] = {}
        for var, a in coeffs.items():
            self._check_var(var)
            a = _check_finite(a, f"coefficient of {var.name}")
            if math.isinf(a):
                raise ValueError(f"coefficient of {var.name} is infinite")
            if a != 0.0:
                row[var.index] = row.get(var.index, 0.0) + a
        rid = self._next_row
        self._next_row += 1
        name = name or f"r{rid}"
        self._rows[rid] = Row(row, sense, rhs, name)
        return ConRef(rid, name)

    def remove_constraint(self, ref: ConRef) -> None:
        if ref.id not in self._rows:
            raise StaleHandleError(f"stale constraint handle {ref.name!r}")
        del self._rows[ref.id]

    def row(self, ref: ConRef) -> Row:
        try:
            return self._rows[ref.id]
        except KeyError:
            raise StaleHandleError(f"stale constraint handle {ref.name!r}") from None

    def constraints(self) -> Iterator[tuple[ConRef, Row]]:
        for rid, row in self._rows.items():
            yield ConRef(rid, row.name), row

    @property
    def num_constraints(self) -> int:
        return len(self._rows)

    # -- objective ----------------------------------------------------------
    def set_objective(self, linear: Mapping[VarRef, float], constant: float = 0.0,
                      quadratic: Optional[Mapping[VarRef, float]] = None) -> None:
        self.obj_linear = {}
        self.obj_quadratic = {}
        for var, a in linear.items():
            self._check_var(var)
            self.obj_linear[var.index] = self.obj_linear.get(var.index, 0.0) + _check_finite(a, "cost")
        for var, q in (quadratic or {}).items():
            self._check_var(var)
            q = _check_finite(q, "curvature")
            if q < 0:
                raise ValueError(f"negative curvature on {var.name}")
            if q:
                self.obj_quadratic[var.index] = q
        self.obj_constant = _check_finite(constant, "objective constant")

    @property
    def has_quadratic(self) -> bool:
        return bool(self.obj_quadratic)

    # -- array views ---------------------------------------------------------
    def arrays(self):
        """Dense arrays ``(c, A, senses, b, lb, ub)`` in current row order."""
        n = self.num_variables
        rows = list(self._rows.values())
        A = np.zeros((len(rows), n))
        b = np.empty(len(rows))
        senses = []
        for i, row in enumerate(rows):
            for j, a in row.coeffs.items():
                A[i, j] = a
            b[i] = row.rhs
            senses.append(row.sense)
        c = np.zeros(n)
        for j, a in self.obj_linear.items():
            c[j] = a
        return c, A, senses, b, np.array(self._lb, dtype=float), np.array(self._ub, dtype=float)

    def objective_value(self, x: np.ndarray) -> float:
        val = self.obj_constant
        for j, a in self.obj_linear.items():
            val += a * x[j]
        for j, q in self.obj_quadratic.items():
            val += q * x[j] * x[j]
        return float(val)

    def row_activity(self, ref: ConRef, x: np.ndarray) -> float:
        row = self.row(ref)
        return float(sum(a * x[j] for j, a in row.coeffs.items()))

    def max_violation(self, x: np.ndarray) -> float:
        """Largest scaled violation of any row or bound at ``x``.

        Row violations are divided by ``max(1, max_j |a_ij|)`` so that rows
        with large coefficients are judged on the same footing as unit rows.
        """
        worst = 0.0
        lb = np.array(self._lb)
        ub = np.array(self._ub)
        if len(x):
            worst = max(worst, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        for row in self._rows.values():
            act = sum(a * x[j] for j, a in row.coeffs.items())
            scale = max([1.0] + [abs(a) for a in row.coeffs.values()])
            if row.sense is Sense.LE:
                v = act - row.rhs
            elif row.sense is Sense.GE:
                v = row.rhs - act
            else:
                v = abs(act - row.rhs)
            worst = max(worst, v / scale)
        return worst
