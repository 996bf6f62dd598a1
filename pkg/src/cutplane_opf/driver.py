"""Cutting-plane loop over the base relaxation, with warm-start cut exchange."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .cuts import (FAMILIES, Candidate, Cut, CutPolicy, age_and_expire, branch_candidates,
                   build_cut, is_parallel, select_candidates)
from .lp import ConRef, SolveStatus, Tolerances, solve
from .network import BranchKey, NetworkCase
from .relaxation import ModelBundle, seed_envelopes
from .store import CutStore


@dataclass
class DriverParams:
    time_limit: float = 1000.0
    stall_limit: int = 5
    rel_improve: float = 1e-5
    policy: CutPolicy = field(default_factory=CutPolicy)
    max_rounds: Optional[int] = None
    backend: str = "simplex"
    seed_envelopes: bool = False
    clock: Callable[[], float] = time.perf_counter

    def __post_init__(self):
        if self.time_limit < 0:
            raise ValueError("time_limit must be nonnegative")
        if self.stall_limit < 1:
            raise ValueError("stall_limit must be at least 1")
        if not self.rel_improve > 0:
            raise ValueError("rel_improve must be positive")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")


@dataclass(frozen=True)
class CutEvent:
    kind: str  # "add" or "drop"
    family: str
    branch: BranchKey
    side: str
    violation: float = 0.0
    age: int = 0
    slack: float = 0.0


@dataclass
class RoundLog:
    index: int
    objective: float
    computed: int = 0
    added: int = 0
    dropped: int = 0
    rejected: int = 0
    solve_time: float = 0.0
    separation_time: float = 0.0
    max_violation: dict[str, float] = field(default_factory=dict)
    status: str = "Optimal"
    events: list[CutEvent] = field(default_factory=list)

    @property
    def time(self) -> float:
        return self.solve_time + self.separation_time

    def to_line(self) -> str:
        return (f"round {self.index} obj {self.objective:.17g} computed {self.computed} "
                f"added {self.added} dropped {self.dropped} rejected {self.rejected} "
                f"time {self.time:.6f}")


@dataclass
class RunResult:
    status: str
    bound: float
    rounds: list[RoundLog]
    cuts: list[Cut]
    case: NetworkCase
    params: DriverParams

    @property
    def m0_bound(self) -> float:
        return self.rounds[0].objective if self.rounds else -math.inf

    @property
    def log_text(self) -> str:
        return "".join(r.to_line() + "\n" for r in self.rounds)


class _ActiveSet:
    def __init__(self, bundle: ModelBundle):
        self.bundle = bundle
        self.rows: dict[int, tuple[Cut, ConRef]] = {}
        self._n = 0

    def add(self, cut: Cut) -> None:
        coeffs = {self.bundle.cut_var(cut.branch, r): a for r, a in cut.normal.items()}
        self._n += 1
        ref = self.bundle.model.add_constraint(
            coeffs, "<=", cut.rhs, f"cut@{cut.family}.{cut.branch}.{cut.side}.{self._n}")
        self.rows[id(cut)] = (cut, ref)

    def remove(self, cut: Cut) -> None:
        _, ref = self.rows.pop(id(cut))
        self.bundle.model.remove_constraint(ref)

    @property
    def cuts(self) -> list[Cut]:
        return [c for c, _ in self.rows.values()]

    def peers(self, cut: Cut) -> list[Cut]:
        return [c for c, _ in self.rows.values()
                if c.branch == cut.branch and c.family == cut.family and c.side == cut.side]


def _families(bundle: ModelBundle) -> tuple[str, ...]:
    return tuple(f for f in FAMILIES if f != "i2" or bundle.options.include_i2)


def run(bundle: ModelBundle, warm: Optional[list[Cut]] = None,
        params: Optional[DriverParams] = None) -> RunResult:
    """Iterate solve / separate / add / expire until a termination rule fires.

    Statuses: ``Converged`` (no violation above tolerance), ``Stalled``
    (too little progress, or a round that leaves the model unchanged),
    ``TimeLimit``, ``RoundLimit``, ``Infeasible`` and ``NumericTrouble``.
    """
    params = params or DriverParams()
    policy = params.policy
    clock = params.clock
    t_start = clock()
    active = _ActiveSet(bundle)
    for cut in warm or []:
        try:
            active.add(replace(cut, birth_round=0, last_tight_round=0))
        except KeyError:
            # Role absent from this bundle (e.g. i2 cuts without i2 variables).
            continue
    if params.seed_envelopes:
        for cut in seed_envelopes(bundle):
            active.add(cut)

    families = _families(bundle)
    limits = {br.key: br.U for br in bundle.branches}
    tol = Tolerances()
    logs: list[RoundLog] = []
    bound = -math.inf
    z0 = math.inf
    stall = 0
    k = 0
    status = None
    while status is None:
        k += 1
        t0 = clock()
        sol = solve(bundle.model, tolerances=tol, backend=params.backend)
        t1 = clock()
        if sol.status is SolveStatus.INFEASIBLE:
            logs.append(RoundLog(k, math.inf, solve_time=t1 - t0, status="Infeasible"))
            bound = math.inf
            status = "Infeasible"
            break
        if sol.status is not SolveStatus.OPTIMAL:
            logs.append(RoundLog(k, bound, solve_time=t1 - t0, status="NumericTrouble"))
            status = "NumericTrouble"
            break
        z = sol.objective
        bound = z
        log = RoundLog(k, z, solve_time=t1 - t0)
        logs.append(log)
        if t1 - t_start >= params.time_limit:
            status = "TimeLimit"
            break

        values = bundle.branch_values(sol.x)
        cands: list[Candidate] = []
        for key in sorted(values):
            cands.extend(branch_candidates(key, values[key], limits[key], families))
        for fam in families:
            log.max_violation[fam] = max((c.violation for c in cands if c.family == fam),
                                         default=0.0)
        violated = [c for c in cands if c.violation > policy.eps_violation]
        chosen = select_candidates(cands, policy)
        new: list[Cut] = []
        for cand in chosen:
            cut = build_cut(cand, values[cand.branch], limits[cand.branch], policy, k)
            if cut is None:
                continue
            log.computed += 1
            peers = active.peers(cut) + [c for c in new if c.branch == cut.branch
                                         and c.family == cut.family and c.side == cut.side]
            if any(is_parallel(cut.normal, p.normal, policy.eps_parallel) for p in peers):
                log.rejected += 1
                continue
            new.append(cut)
        for cut in active.cuts:
            if cut.slack(values[cut.branch]) <= policy.eps_slack:
                cut.last_tight_round = k
        drops = age_and_expire(active.cuts, values, policy, k)
        for cut in drops:
            log.events.append(CutEvent("drop", cut.family, cut.branch, cut.side,
                                       age=k - cut.birth_round,
                                       slack=cut.slack(values[cut.branch])))
            active.remove(cut)
        for cut in new:
            log.events.append(CutEvent("add", cut.family, cut.branch, cut.side,
                                       violation=cut.violation))
            active.add(cut)
        log.added = len(new)
        log.dropped = len(drops)
        log.separation_time = clock() - t1

        if not violated:
            status = "Converged"
        elif not new and not drops:
            status = "Stalled"
        else:
            improved = (z - z0 >= z0 * params.rel_improve) if z0 > 0 else (z - z0 >= params.rel_improve)
            stall = 0 if improved else stall + 1
            z0 = z
            if stall >= params.stall_limit:
                status = "Stalled"
            elif params.max_rounds is not None and k >= params.max_rounds:
                status = "RoundLimit"
            elif clock() - t_start >= params.time_limit:
                status = "TimeLimit"
    return RunResult(status, bound, logs, active.cuts, bundle.case, params)


def export_cuts(result: RunResult, case: Optional[NetworkCase] = None) -> CutStore:
    case = case or result.case
    p = result.params
    params = {"stall_limit": str(p.stall_limit), "rel_improve": repr(p.rel_improve),
              "status": result.status, "rounds": str(len(result.rounds))}
    return CutStore(case.id, case.name, list(result.cuts), params)


def import_cuts(store: CutStore, case: NetworkCase) -> tuple[list[Cut], int]:
    """Cuts of ``store`` whose branch exists and is in service in ``case``."""
    if store.digest != case.id:
        warnings.warn(f"cut store digest {store.digest} differs from case {case.id}",
                      stacklevel=2)
    live = {br.key for br in case.active_branches}
    kept = [c for c in store.cuts if c.branch in live]
    return kept, len(store.cuts) - len(kept)
