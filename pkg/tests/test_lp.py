import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutplane_opf.lp import (HighsBackend, LinearModel, Limits, SimplexBackend, SolveStatus,
                             StaleHandleError, Tolerances, convexify_objective, farkas_gap,
                             read_solution, solve, tangent_points, write_lp)
from cutplane_opf.network import CostFunction

BACKENDS = ["simplex", "highs"]


def small_model():
    m = LinearModel("small")
    x = m.add_variable("x@a")
    y = m.add_variable("y@a")
    m.add_constraint({x: 1, y: 2}, ">=", 2, "r1")
    m.add_constraint({x: 2, y: 1}, ">=", 2, "r2")
    m.set_objective({x: 1, y: 1})
    return m, x, y


@pytest.mark.parametrize("backend", BACKENDS)
def test_small_lp(backend):
    m, x, y = small_model()
    sol = solve(m, backend=backend)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(4 / 3, abs=1e-9)
    assert sol[x] == pytest.approx(2 / 3, abs=1e-9)
    assert sol[y] == pytest.approx(2 / 3, abs=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible_then_repaired(backend):
    m = LinearModel()
    x = m.add_variable("x@a", 0, 10)
    m.add_constraint({x: 1}, ">=", 1, "lo")
    bad = m.add_constraint({x: 1}, "<=", 0, "hi")
    m.set_objective({x: 1})
    sol = solve(m, backend=backend)
    assert sol.status is SolveStatus.INFEASIBLE
    if sol.certificate is not None:
        c, A, senses, b, lb, ub = m.arrays()
        assert farkas_gap(sol.certificate, A, b, lb, ub) > 0
    m.remove_constraint(bad)
    with pytest.raises(StaleHandleError):
        m.remove_constraint(bad)
    assert solve(m, backend=backend).objective == pytest.approx(1.0)


def test_simplex_certificate_is_farkas():
    m = LinearModel()
    x = m.add_variable("x@a", 0, 10)
    m.add_constraint({x: 1}, ">=", 1)
    m.add_constraint({x: 1}, "<=", 0)
    sol = solve(m, backend="simplex")
    y = sol.certificate
    assert y is not None
    c, A, senses, b, lb, ub = m.arrays()
    assert farkas_gap(y, A, b, lb, ub) > 1e-9


@pytest.mark.parametrize("backend", BACKENDS)
def test_unbounded(backend):
    m = LinearModel()
    x = m.add_variable("x@a", -math.inf, math.inf)
    y = m.add_variable("y@a")
    m.add_constraint({x: 1, y: -1}, "<=", 1)
    m.set_objective({x: -1, y: 0.5})
    assert solve(m, backend=backend).status is SolveStatus.UNBOUNDED


def test_iteration_limit_reports_time_limit_or_suboptimal():
    m = LinearModel()
    xs = [m.add_variable(f"x@{i}", 0, 1) for i in range(30)]
    for i in range(29):
        m.add_constraint({xs[i]: 1, xs[i + 1]: 1}, ">=", 1)
    m.set_objective({v: 1 + 0.01 * i for i, v in enumerate(xs)})
    sol = SimplexBackend().solve(m, Limits(iterations=2), Tolerances())
    assert sol.status in (SolveStatus.TIME_LIMIT, SolveStatus.SUBOPTIMAL_FEASIBLE)


def test_model_rejects_bad_input():
    m = LinearModel()
    x = m.add_variable("x@a")
    with pytest.raises(ValueError):
        m.add_variable("x@a")
    with pytest.raises(ValueError):
        m.add_constraint({x: float("nan")}, "<=", 1)
    with pytest.raises(ValueError):
        m.add_constraint({x: 1}, "<=", math.inf)
    with pytest.raises(ValueError):
        m.set_bounds(x, 2, 1)
    with pytest.raises(ValueError, match="quadratic"):
        m.set_objective({x: 1}, quadratic={x: 1.0})
        SimplexBackend().solve(m, Limits(), Tolerances())


def test_lp_writer_and_solution_reader_round_trip():
    m, x, y = small_model()
    m.set_objective({x: 1, y: 1}, constant=3.0)
    text = write_lp(m)
    assert "Minimize" in text and "Subject To" in text and "End" in text
    assert "const@obj" in text
    sol = read_solution("status Optimal\nx@a 0.5\ny@a 0.75\n", m)
    assert sol.objective == pytest.approx(4.25)
    with pytest.raises(ValueError, match="line 1"):
        read_solution("x@a\n", m)


def test_tangent_points_and_convexify():
    assert tangent_points(0, 10, 5) == pytest.approx([1, 3, 5, 7, 9])
    q = CostFunction("poly", c2=2.0, c1=1.0, c0=0.5)
    (terms,) = convexify_objective([(q, 0.0, 1.0)], segments=4)
    assert len(terms.pieces) == 4
    for p in np.linspace(0, 1, 101):
        assert terms(p) <= q(p) + 1e-12
    for t in tangent_points(0.0, 1.0, 4):
        assert terms(t) == pytest.approx(q(t), abs=1e-12)
    (lin,) = convexify_objective([(CostFunction("poly", c1=3.0, c0=1.0), 0, 1)])
    assert (lin.linear, lin.constant, lin.pieces) == (3.0, 1.0, ())
    (fixed,) = convexify_objective([(q, 0.5, 0.5)], segments=10)
    assert len(fixed.pieces) == 1
    pwl = CostFunction("pwl", points=((0, 0), (1, 1), (2, 3)))
    (pw,) = convexify_objective([(pwl, 0, 2)])
    assert [pw(p) for p in (0, 0.5, 1, 1.5, 2)] == pytest.approx([0, 0.5, 1, 2, 3])
    (passthru,) = convexify_objective([(q, 0, 1)], quadratic=True)
    assert passthru.quadratic == 2.0 and passthru.pieces == ()


@st.composite
def random_lp(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    mrows = int(rng.integers(1, 7))
    m = LinearModel()
    vs = []
    for j in range(n):
        lb = float(rng.choice([0.0, -1.0, -math.inf]))
        ub = float(rng.choice([1.0, 5.0, math.inf]))
        vs.append(m.add_variable(f"x@{j}", lb, ub))
    # Keep rows degenerate-prone: small integer data.
    for i in range(mrows):
        coeffs = {v: float(rng.integers(-3, 4)) for v in vs}
        m.add_constraint(coeffs, str(rng.choice(["<=", ">=", "="])), float(rng.integers(-3, 4)))
    m.set_objective({v: float(rng.integers(-3, 4)) for v in vs})
    return m


@settings(max_examples=300, deadline=None)
@given(random_lp())
def test_simplex_agrees_with_highs(m):
    a = solve(m, backend="simplex")
    b = solve(m, backend="highs")
    if (a.status, b.status) == (SolveStatus.UNBOUNDED, SolveStatus.INFEASIBLE):
        # HiGHS presolve may report "infeasible or unbounded" as infeasible.
        m.set_objective({})
        feas = solve(m, backend="simplex")
        assert feas.status is SolveStatus.OPTIMAL and m.max_violation(feas.x) <= 1e-9
        return
    assert a.status == b.status
    if a.status is SolveStatus.OPTIMAL:
        assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-7)
        assert m.max_violation(a.x) <= 1e-6


def test_degenerate_assignment_lp():
    n = 6
    rng = np.random.default_rng(3)
    cost = rng.integers(1, 4, size=(n, n))
    m = LinearModel()
    x = {(i, j): m.add_variable(f"x@{i}_{j}", 0, 1) for i in range(n) for j in range(n)}
    for i in range(n):
        m.add_constraint({x[i, j]: 1 for j in range(n)}, "=", 1)
        m.add_constraint({x[j, i]: 1 for j in range(n)}, "=", 1)
    m.set_objective({x[i, j]: float(cost[i, j]) for i in range(n) for j in range(n)})
    from scipy.optimize import linear_sum_assignment

    r, c = linear_sum_assignment(cost)
    assert solve(m, backend="simplex").objective == pytest.approx(cost[r, c].sum())
