"""Closed-form separation of cone and thermal-limit cuts, and cut management.

Cone families share the rotated cone ``x^2 + y^2 <= w z`` with ``w, z >= 0``:

* ``jabr``: ``(x, y, w, z) = (c, s, v2f, v2t)``
* ``i2``: ``(x, y, w, z) = (Pf, Qf, v2f, i2)``

Thermal-limit cuts (family ``limit``) act on ``(Pf, Qf)`` or ``(Pt, Qt)``.
Every cut is stored as ``normal . x <= rhs`` with a unit-norm normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .network import BranchKey

FAMILIES = ("jabr", "i2", "limit")
CONE_ROLES = {"jabr": ("c", "s", "v2f", "v2t"), "i2": ("Pf", "Qf", "v2f", "i2")}
LIMIT_ROLES = {"f": ("Pf", "Qf"), "t": ("Pt", "Qt")}


class OutsideCutDomain(ValueError):
    """A violated cone point with ``w + z <= 0``; no projection cut exists."""


@dataclass
class Cut:
    family: str
    branch: BranchKey
    normal: dict[str, float]
    rhs: float
    birth_round: int = 0
    last_tight_round: int = 0
    # Violation normal . x - rhs at the point that produced the cut.
    violation: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown cut family {self.family!r}")
        if not any(self.normal.values()):
            raise ValueError("cut normal is all zero")

    @property
    def side(self) -> str:
        """``t`` for to-side limit cuts, ``f`` otherwise."""
        return "t" if "Pt" in self.normal or "Qt" in self.normal else "f"

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(a * values[r] for r, a in self.normal.items())

    def slack(self, values: Mapping[str, float]) -> float:
        return self.rhs - self.activity(values)


def _unit(normal: dict[str, float], rhs: float) -> tuple[dict[str, float], float]:
    n = math.sqrt(sum(a * a for a in normal.values()))
    return {r: a / n for r, a in normal.items()}, rhs / n


def rotated_cone_violation(x: float, y: float, w: float, z: float) -> float:
    return max(x * x + y * y - w * z, 0.0)


def separate_rotated_cone(x: float, y: float, w: float, z: float, eps: float = 1e-5,
                          roles: Sequence[str] = ("x", "y", "w", "z")) -> Optional[tuple[dict[str, float], float]]:
    """Maximum-violation cut for ``x^2 + y^2 <= w z`` at a point, or ``None``.

    Returns ``(normal, rhs)`` keyed by ``roles``, normalised to a unit normal.
    Raises :class:`OutsideCutDomain` when the point is violated but
    ``w + z <= 0``.
    """
    if rotated_cone_violation(x, y, w, z) <= eps:
        return None
    if w + z <= 0:
        raise OutsideCutDomain(f"violated point with w + z = {w + z:g}")
    d = w - z
    n0 = math.sqrt(4 * x * x + 4 * y * y + d * d)
    raw = dict(zip(roles, (4 * x, 4 * y, d - n0, -d - n0)))
    return _unit(raw, 0.0)


def envelope_cut(lam: Sequence[float], roles: Sequence[str] = ("x", "y", "w", "z")):
    """Outer-envelope cut ``lam . (2x, 2y, w - z) <= w + z`` for unit ``lam``."""
    l1, l2, l3 = lam
    raw = dict(zip(roles, (2 * l1, 2 * l2, l3 - 1, -l3 - 1)))
    return _unit(raw, 0.0)


def separate_thermal(p: float, q: float, U: float, eps: float = 1e-5,
                     roles: Sequence[str] = ("P", "Q")) -> Optional[tuple[dict[str, float], float]]:
    """Maximum-violation cut for the disk ``P^2 + Q^2 <= U^2``, or ``None``."""
    if not U > 0:
        raise ValueError("thermal limit must be positive")
    if p * p + q * q <= U * U + eps:
        return None
    n = math.hypot(p, q)
    return dict(zip(roles, (p / n, q / n))), U


def is_parallel(a: Mapping[str, float], b: Mapping[str, float], eps_parallel: float = 5e-6) -> bool:
    """Whether two normals (role -> coefficient maps) are eps-parallel."""
    if isinstance(a, Cut):
        a = a.normal
    if isinstance(b, Cut):
        b = b.normal
    dot = sum(v * b.get(r, 0.0) for r, v in a.items())
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0 or nb == 0:
        return False
    return dot / (na * nb) > 1 - eps_parallel


@dataclass(frozen=True)
class CutPolicy:
    eps_violation: float = 1e-5
    p_jabr: float = 0.55
    p_i2: float = 0.15
    p_limit: float = 1.0
    T_age: int = 5
    eps_parallel: float = 5e-6
    eps_slack: float = 1e-5

    def __post_init__(self):
        for name in ("p_jabr", "p_i2", "p_limit"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("eps_violation", "eps_parallel", "eps_slack"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.T_age < 1:
            raise ValueError("T_age must be at least 1")

    def fraction(self, family: str) -> float:
        return {"jabr": self.p_jabr, "i2": self.p_i2, "limit": self.p_limit}[family]


@dataclass(frozen=True, order=True)
class Candidate:
    family: str
    branch: BranchKey
    side: str
    violation: float = field(compare=False)


def select_candidates(violations: Iterable[Candidate], policy: CutPolicy) -> list[Candidate]:
    """Top fraction of violated candidates per family, in descending violation.

    Families come out in the order ``jabr, i2, limit``; ties are broken by
    branch label and side.
    """
    by_family: dict[str, list[Candidate]] = {f: [] for f in FAMILIES}
    for cand in violations:
        if cand.violation > policy.eps_violation:
            by_family[cand.family].append(cand)
    out = []
    for fam in FAMILIES:
        items = sorted(by_family[fam], key=lambda c: (-c.violation, c.branch, c.side))
        # round() keeps e.g. 0.55 * 20 from landing a hair above 11.
        k = math.ceil(round(policy.fraction(fam) * len(items), 9))
        out.extend(items[:k])
    return out


def age_and_expire(cuts: Iterable[Cut], values: Mapping[BranchKey, Mapping[str, float]],
                   policy: CutPolicy, current_round: int) -> list[Cut]:
    """Cuts old enough to expire whose slack at ``values`` exceeds ``eps_slack``."""
    out = []
    for cut in cuts:
        if current_round - cut.birth_round < policy.T_age:
            continue
        if cut.slack(values[cut.branch]) > policy.eps_slack:
            out.append(cut)
    return out


def branch_candidates(key: BranchKey, vals: Mapping[str, float], U: Optional[float],
                      families: Sequence[str] = FAMILIES) -> list[Candidate]:
    """Raw violations ``f(x)`` of every cut family on one branch."""
    out = []
    for fam in families:
        if fam == "limit":
            if U is None:
                continue
            for side, (pr, qr) in LIMIT_ROLES.items():
                f = vals[pr] ** 2 + vals[qr] ** 2 - U * U
                out.append(Candidate("limit", key, side, max(f, 0.0)))
        elif fam in CONE_ROLES and all(r in vals for r in CONE_ROLES[fam]):
            x, y, w, z = (vals[r] for r in CONE_ROLES[fam])
            out.append(Candidate(fam, key, "f", rotated_cone_violation(x, y, w, z)))
    return out


def build_cut(cand: Candidate, vals: Mapping[str, float], U: Optional[float],
              policy: CutPolicy, current_round: int) -> Optional[Cut]:
    """Separate one candidate at the point ``vals``.

    A violated cone point outside the projection domain (``w = z = 0``) gets
    the envelope cut along ``(x, y, 0)`` instead.
    """
    if cand.family == "limit":
        roles = LIMIT_ROLES[cand.side]
        res = separate_thermal(vals[roles[0]], vals[roles[1]], U, policy.eps_violation, roles)
    else:
        roles = CONE_ROLES[cand.family]
        x, y, w, z = (vals[r] for r in roles)
        try:
            res = separate_rotated_cone(x, y, w, z, policy.eps_violation, roles)
        except OutsideCutDomain:
            rho = math.hypot(x, y)
            res = envelope_cut((x / rho, y / rho, 0.0), roles)
    if res is None:
        return None
    normal, rhs = res
    cut = Cut(cand.family, cand.branch, normal, rhs, current_round, current_round)
    cut.violation = -cut.slack(vals)
    return cut
