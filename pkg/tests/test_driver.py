import math
from dataclasses import replace

import pytest

from cutplane_opf import fixture_path
from cutplane_opf.cuts import Cut, CutPolicy
from cutplane_opf.driver import DriverParams, export_cuts, import_cuts, run
from cutplane_opf.lp import HighsBackend, Solution, SolveStatus
from cutplane_opf.network import BranchKey
from cutplane_opf.perturb import perturb_loads
from cutplane_opf.relaxation import acopf_residuals, build_base_model, read_primal_point
from cutplane_opf.store import CutStore, dumps, loads

from oracles import two_bus_grid_optimum


def fixed_clock():
    return 0.0


def params(**kw):
    kw.setdefault("clock", fixed_clock)
    kw.setdefault("backend", "highs")
    return DriverParams(**kw)


def test_zero_case_converges_immediately(case_zero):
    res = run(build_base_model(case_zero), params=params(backend="simplex"))
    assert res.status == "Converged"
    assert len(res.rounds) == 1
    assert res.bound == pytest.approx(0.0, abs=1e-12)
    assert res.cuts == []


def test_two_bus_matches_grid_oracle(case2):
    res = run(build_base_model(case2), params=params(backend="simplex"))
    want = two_bus_grid_optimum(case2)
    assert abs(res.bound - want) <= 1e-4 * abs(want)


def test_zero_time_limit_returns_m0(case9):
    res = run(build_base_model(case9), params=DriverParams(time_limit=0, backend="highs"))
    assert res.status == "TimeLimit"
    assert len(res.rounds) == 1
    assert res.rounds[0].computed == 0 and res.cuts == []
    assert res.bound == res.m0_bound


def test_round_limit(case9):
    res = run(build_base_model(case9), params=params(max_rounds=2))
    assert res.status == "RoundLimit" and len(res.rounds) == 2


def test_literal_stall_counter(case9):
    # Every round counts as stalled, round 1 included (z0 starts at +inf).
    res = run(build_base_model(case9), params=params(rel_improve=1.0, stall_limit=3))
    assert res.status == "Stalled"
    assert len(res.rounds) == 3


def check_bookkeeping(res, policy):
    zs = [r.objective for r in res.rounds if r.status == "Optimal"]
    for a, b in zip(zs, zs[1:]):
        assert b >= a - 1e-6 * abs(a)
    for r in res.rounds:
        assert r.added <= r.computed
        assert r.added + r.rejected == r.computed
        for ev in r.events:
            if ev.kind == "add":
                assert ev.violation > 0
            else:
                assert ev.age >= policy.T_age and ev.slack > policy.eps_slack


@pytest.mark.parametrize("backend", ["simplex", "highs"])
def test_bookkeeping_on_case9(case9, backend):
    res = run(build_base_model(case9), params=params(backend=backend))
    check_bookkeeping(res, CutPolicy())
    assert any(ev.kind == "drop" for r in res.rounds for ev in r.events)


def test_soundness_against_certified_primal(case9):
    pt = read_primal_point(open(fixture_path("case9.primal")).read())
    rep = acopf_residuals(case9, pt)
    assert rep.max_violation <= 1e-9
    res = run(build_base_model(case9), params=params())
    assert res.bound <= rep.objective + 1e-6


def test_determinism(case9):
    a = run(build_base_model(case9), params=params(backend="simplex"))
    b = run(build_base_model(case9), params=params(backend="simplex"))
    assert a.log_text == b.log_text
    assert dumps(export_cuts(a)) == dumps(export_cuts(b))


def test_seed_envelopes_start_active(case9):
    res = run(build_base_model(case9), params=params(seed_envelopes=True, max_rounds=1))
    cold = run(build_base_model(case9), params=params(max_rounds=1))
    assert res.m0_bound >= cold.m0_bound - 1e-9


def test_export_import_round_trip(case9):
    res = run(build_base_model(case9), params=params())
    store = export_cuts(res)
    assert len(store.cuts) == len(res.cuts)
    again = loads(dumps(store))
    assert dumps(again) == dumps(store)
    for a, b in zip(again.cuts, store.cuts):
        assert (a.family, a.branch, a.normal, a.rhs, a.birth_round) == \
            (b.family, b.branch, b.normal, b.rhs, b.birth_round)
    warm, skipped = import_cuts(again, case9)
    assert skipped == 0
    hot = run(build_base_model(case9), warm, params(max_rounds=1))
    assert hot.m0_bound >= res.m0_bound - 1e-9


def test_empty_export_has_header(case_zero):
    res = run(build_base_model(case_zero), params=params())
    text = dumps(export_cuts(res))
    assert text.startswith("CSTORE 1\ncase ")
    assert loads(text).cuts == []


def test_import_filters_inactive_branches(case2):
    cut = Cut("jabr", BranchKey(1, 2), {"c": 1.0, "v2f": -0.5, "v2t": -0.5}, 0.0)
    store = CutStore(case2.id, case2.name, [cut])
    off = case2.with_branch_status(BranchKey(1, 2), False)
    with pytest.warns(UserWarning, match="digest"):
        kept, skipped = import_cuts(store, off)
    assert (kept, skipped) == ([], 1)
    assert import_cuts(CutStore(case2.id, case2.name), case2) == ([], 0)


def test_perturbed_twin_keeps_all_cuts(case9):
    res = run(build_base_model(case9), params=params())
    twin = perturb_loads(case9, 0)
    with pytest.warns(UserWarning):
        kept, skipped = import_cuts(export_cuts(res), twin)
    assert skipped == 0 and len(kept) == len(res.cuts)


class FlakyBackend:
    """HiGHS, except that solve number ``fail_at`` reports ``status``."""

    def __init__(self, fail_at, status):
        self.inner = HighsBackend()
        self.n = 0
        self.fail_at = fail_at
        self.status = status

    def solve(self, model, limits, tolerances):
        self.n += 1
        if self.n == self.fail_at:
            return Solution(self.status)
        return self.inner.solve(model, limits, tolerances)


def test_numeric_trouble_keeps_previous_bound(case9):
    res = run(build_base_model(case9), params=params(backend=FlakyBackend(3, SolveStatus.NUMERIC_TROUBLE)))
    assert res.status == "NumericTrouble"
    assert res.bound == res.rounds[1].objective
    assert res.rounds[-1].status == "NumericTrouble"


def test_infeasible_stops_immediately(case9):
    res = run(build_base_model(case9), params=params(backend=FlakyBackend(2, SolveStatus.INFEASIBLE)))
    assert res.status == "Infeasible"
    assert len(res.rounds) == 2
    assert res.bound == math.inf


def test_certified_infeasible_instance(case2):
    heavy = replace(case2, buses=tuple(replace(b, Pd=b.Pd * 10) for b in case2.buses))
    res = run(build_base_model(heavy), params=params(backend="simplex"))
    assert res.status == "Infeasible"


def test_params_validation():
    with pytest.raises(ValueError):
        DriverParams(stall_limit=0)
    with pytest.raises(ValueError):
        DriverParams(rel_improve=0)
    with pytest.raises(ValueError):
        CutPolicy(p_i2=1.5)
