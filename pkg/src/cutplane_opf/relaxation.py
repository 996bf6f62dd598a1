"""Linearly constrained base relaxation over the (v2, c, s, P, Q, i2) space.

The base model holds power balance, the linearised branch flows, the linear
definition of the squared from-side current ``i2``, generator and voltage
bounds, and box bounds on flows. The cone and disk inequalities are left out
and arrive later as cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .lp import CostTerms, LinearModel, VarRef, convexify_objective
from .network import Branch, BranchKey, NetworkCase, branch_admittance


@dataclass(frozen=True)
class I2Coefficients:
    """``i2 = alpha v2_k + beta v2_m + gamma c + zeta s`` for one branch."""

    alpha: float
    beta: float
    gamma: float
    zeta: float

    def evaluate(self, vk2: float, vm2: float, c: float, s: float) -> float:
        return self.alpha * vk2 + self.beta * vm2 + self.gamma * c + self.zeta * s


def i2_coefficients(p: Branch) -> I2Coefficients:
    y = p.series_admittance
    g, b = y.real, y.imag
    gsh, bsh = p.g_sh, p.b_sh
    tau, sigma = p.tau, p.sigma
    mag = g * g + b * b
    cross = g * gsh + b * bsh
    skew = b * gsh - g * bsh
    cs, sn = math.cos(sigma), math.sin(sigma)
    alpha = (mag + cross + (gsh * gsh + bsh * bsh) / 4) / tau ** 4
    beta = mag / tau ** 2
    gamma = (cs * (-2 * mag - cross) + sn * skew) / tau ** 3
    zeta = (sn * (-2 * mag - cross) - cs * skew) / tau ** 3
    return I2Coefficients(alpha, beta, gamma, zeta)


def interval_minimum(coeffs: Sequence[float], lower: Sequence[float],
                     upper: Sequence[float]) -> float:
    """Minimum of ``sum coeffs[i] * x[i]`` over the box ``lower <= x <= upper``."""
    total = 0.0
    for a, lo, hi in zip(coeffs, lower, upper):
        if a == 0:
            continue
        end = lo if a > 0 else hi
        if math.isinf(end):
            return -math.inf
        total += a * end
    return total


def bus_entity(label: int) -> str:
    return f"b{label}"


def branch_entity(key: BranchKey) -> str:
    base = f"br{key.from_bus}_{key.to_bus}"
    return base if key.circuit == 1 else f"{base}_{key.circuit}"


def gen_entity(gid: int) -> str:
    return f"g{gid}"


# Cut roles -> (variable role, which end supplies the entity).
CUT_ROLES = {
    "c": ("c", None), "s": ("s", None), "i2": ("i2", None),
    "v2f": ("v2", "from"), "v2t": ("v2", "to"),
    "Pf": ("P", "f"), "Qf": ("Q", "f"), "Pt": ("P", "t"), "Qt": ("Q", "t"),
}


@dataclass
class RelaxationOptions:
    cost_segments: int = 10
    quadratic_objective: bool = False
    bus_shunts: bool = True
    flow_box_bounds: bool = True
    include_i2: bool = True


@dataclass
class ModelBundle:
    model: LinearModel
    index: dict[tuple[str, str], VarRef]
    case: NetworkCase
    options: RelaxationOptions
    branches: list[Branch] = field(default_factory=list)
    cost_terms: dict[int, CostTerms] = field(default_factory=dict)

    def var(self, role: str, entity: str) -> VarRef:
        return self.index[(role, entity)]

    def cut_var(self, key: BranchKey, role: str) -> VarRef:
        """Variable playing cut role ``role`` (``c``, ``v2f``, ``Pt`` ...) on a branch."""
        vrole, where = CUT_ROLES[role]
        if where == "from":
            return self.index[("v2", bus_entity(key.from_bus))]
        if where == "to":
            return self.index[("v2", bus_entity(key.to_bus))]
        ent = branch_entity(key)
        if where in ("f", "t"):
            ent = f"{ent}.{where}"
        return self.index[(vrole, ent)]

    def branch_values(self, x: np.ndarray) -> dict[BranchKey, dict[str, float]]:
        """Cut-role values of every modelled branch at the point ``x``."""
        roles = [r for r in CUT_ROLES if self.options.include_i2 or r != "i2"]
        out = {}
        for br in self.branches:
            out[br.key] = {r: float(x[self.cut_var(br.key, r).index]) for r in roles}
        return out


def build_base_model(c: NetworkCase, opts: Optional[RelaxationOptions] = None) -> ModelBundle:
    opts = opts or RelaxationOptions()
    m = LinearModel(name=c.name)
    index: dict[tuple[str, str], VarRef] = {}

    def add(role: str, ent: str, lb: float, ub: float) -> VarRef:
        ref = m.add_variable(f"{role}@{ent}", lb, ub)
        index[(role, ent)] = ref
        return ref

    for bus in c.buses:
        add("v2", bus_entity(bus.id), bus.Vmin ** 2, bus.Vmax ** 2)

    branches = [br for br in c.branches if br.status]
    for br in branches:
        if br.r == 0 and br.x == 0:
            raise ValueError(f"zero-impedance in-service branch {br.key}")
    flow_in: dict[int, list[tuple[VarRef, VarRef]]] = {b.id: [] for b in c.buses}
    for br in branches:
        bk, bm = c.bus(br.from_bus), c.bus(br.to_bus)
        ent = branch_entity(br.key)
        vv = bk.Vmax * bm.Vmax
        cv = add("c", ent, 0.0, vv)
        sv = add("s", ent, -vv, vv)
        lim = br.U if (br.U is not None and opts.flow_box_bounds) else math.inf
        pf = add("P", ent + ".f", -lim, lim)
        pt = add("P", ent + ".t", -lim, lim)
        qf = add("Q", ent + ".f", -lim, lim)
        qt = add("Q", ent + ".t", -lim, lim)
        flow_in[br.from_bus].append((pf, qf))
        flow_in[br.to_bus].append((pt, qt))
        vk = index[("v2", bus_entity(br.from_bus))]
        vm = index[("v2", bus_entity(br.to_bus))]
        Y = branch_admittance(br)
        # Flows in terms of v2, c = |Vk||Vm|cos(th_km), s = |Vk||Vm|sin(th_km).
        m.add_constraint({pf: 1.0, vk: -Y.Gkk, cv: -Y.Gkm, sv: -Y.Bkm}, "=", 0.0, f"Pdef@{ent}.f")
        m.add_constraint({pt: 1.0, vm: -Y.Gmm, cv: -Y.Gmk, sv: Y.Bmk}, "=", 0.0, f"Pdef@{ent}.t")
        m.add_constraint({qf: 1.0, vk: Y.Bkk, cv: Y.Bkm, sv: -Y.Gkm}, "=", 0.0, f"Qdef@{ent}.f")
        m.add_constraint({qt: 1.0, vm: Y.Bmm, cv: Y.Bmk, sv: Y.Gmk}, "=", 0.0, f"Qdef@{ent}.t")
        if opts.include_i2:
            if br.U is not None and bk.Vmin > 0:
                h = br.U ** 2 / bk.Vmin ** 2
            else:
                h = math.inf
            iv = add("i2", ent, 0.0, h)
            k = i2_coefficients(br)
            m.add_constraint({iv: 1.0, vk: -k.alpha, vm: -k.beta, cv: -k.gamma, sv: -k.zeta},
                             "=", 0.0, f"i2def@{ent}")

    gens_at: dict[int, list[tuple[VarRef, VarRef]]] = {b.id: [] for b in c.buses}
    gen_p: dict[int, VarRef] = {}
    for gid, g in c.active_generators:
        ent = gen_entity(gid)
        pg = add("Pg", ent, g.Pmin, g.Pmax)
        qg = add("Qg", ent, g.Qmin, g.Qmax)
        gens_at[g.bus].append((pg, qg))
        gen_p[gid] = pg

    for bus in c.buses:
        ent = bus_entity(bus.id)
        v = index[("v2", ent)]
        prow: dict[VarRef, float] = {}
        qrow: dict[VarRef, float] = {}
        for pv, qv in flow_in[bus.id]:
            prow[pv] = prow.get(pv, 0.0) + 1.0
            qrow[qv] = qrow.get(qv, 0.0) + 1.0
        for pv, qv in gens_at[bus.id]:
            prow[pv] = -1.0
            qrow[qv] = -1.0
        if opts.bus_shunts:
            if bus.Gs:
                prow[v] = bus.Gs
            if bus.Bs:
                qrow[v] = -bus.Bs
        m.add_constraint(prow, "=", -bus.Pd, f"Pbal@{ent}")
        m.add_constraint(qrow, "=", -bus.Qd, f"Qbal@{ent}")

    gens = c.active_generators
    terms = convexify_objective([(g.cost, g.Pmin, g.Pmax) for _, g in gens],
                                opts.cost_segments, quadratic=opts.quadratic_objective)
    linear: dict[VarRef, float] = {}
    quad: dict[VarRef, float] = {}
    constant = 0.0
    cost_terms = {}
    for (gid, g), t in zip(gens, terms):
        pg = gen_p[gid]
        cost_terms[gid] = t
        constant += t.constant
        if t.linear:
            linear[pg] = linear.get(pg, 0.0) + t.linear
        if t.quadratic:
            quad[pg] = t.quadratic
        if t.pieces:
            tv = add("t", gen_entity(gid), -math.inf, math.inf)
            linear[tv] = 1.0
            for j, (slope, icpt) in enumerate(t.pieces):
                m.add_constraint({tv: 1.0, pg: -slope}, ">=", icpt, f"epi@{gen_entity(gid)}.{j}")
    m.set_objective(linear, constant, quad)
    return ModelBundle(m, index, c, opts, branches, cost_terms)


def seed_envelopes(bundle: ModelBundle):
    """One loss envelope ``v2_k + v2_m - 2c >= 0`` per modelled branch."""
    from .cuts import Cut

    norm = math.sqrt(6.0)
    return [Cut("jabr", br.key, {"c": 2 / norm, "v2f": -1 / norm, "v2t": -1 / norm}, 0.0,
                birth_round=0, last_tight_round=0)
            for br in bundle.branches]


# --------------------------------------------------------------------------
# ACOPF residuals of a polar point
# --------------------------------------------------------------------------

@dataclass
class PrimalPoint:
    """Bus voltages (magnitude, angle in rad) and generator outputs, p.u."""

    vm: dict[int, float]
    va: dict[int, float]
    pg: dict[int, float]
    qg: dict[int, float]


@dataclass
class ResidualReport:
    objective: float
    violations: dict[str, float]
    flows: dict[BranchKey, tuple[float, float, float, float]]

    @property
    def max_violation(self) -> float:
        return max(self.violations.values(), default=0.0)

    def by_kind(self, kind: str) -> float:
        return max((v for k, v in self.violations.items() if k.startswith(kind + "@")),
                   default=0.0)


def polar_flows(br: Branch, vk: float, vm: float, thk: float, thm: float):
    """(P_km, P_mk, Q_km, Q_mk) of a branch from polar bus voltages."""
    Y = branch_admittance(br)
    c = vk * vm * math.cos(thk - thm)
    s = vk * vm * math.sin(thk - thm)
    pkm = Y.Gkk * vk * vk + Y.Gkm * c + Y.Bkm * s
    pmk = Y.Gmm * vm * vm + Y.Gmk * c - Y.Bmk * s
    qkm = -Y.Bkk * vk * vk - Y.Bkm * c + Y.Gkm * s
    qmk = -Y.Bmm * vm * vm - Y.Bmk * c - Y.Gmk * s
    return pkm, pmk, qkm, qmk


def acopf_residuals(c: NetworkCase, point: PrimalPoint) -> ResidualReport:
    """Violations of every ACOPF constraint at a polar point, plus its cost.

    Angle-difference limits are not checked; note that the relaxation assumes
    ``|theta_k - theta_m| <= pi/2`` through ``c >= 0``.
    """
    for b in c.buses:
        if b.id not in point.vm or b.id not in point.va:
            raise KeyError(f"point lacks voltage for bus {b.id}")
    gens = c.active_generators
    for gid, _ in gens:
        if gid not in point.pg or gid not in point.qg:
            raise KeyError(f"point lacks output for generator {gid}")
    viol: dict[str, float] = {}
    inj_p = {b.id: 0.0 for b in c.buses}
    inj_q = {b.id: 0.0 for b in c.buses}
    flows = {}
    for br in c.active_branches:
        f, t = br.from_bus, br.to_bus
        pkm, pmk, qkm, qmk = polar_flows(br, point.vm[f], point.vm[t], point.va[f], point.va[t])
        flows[br.key] = (pkm, pmk, qkm, qmk)
        inj_p[f] += pkm
        inj_q[f] += qkm
        inj_p[t] += pmk
        inj_q[t] += qmk
        if br.U is not None:
            worst = max(math.hypot(pkm, qkm), math.hypot(pmk, qmk))
            viol[f"thermal@{br.key}"] = max(worst - br.U, 0.0)
    gen_p = {b.id: 0.0 for b in c.buses}
    gen_q = {b.id: 0.0 for b in c.buses}
    cost = 0.0
    for gid, g in gens:
        p, q = point.pg[gid], point.qg[gid]
        gen_p[g.bus] += p
        gen_q[g.bus] += q
        cost += g.cost(p)
        viol[f"pgen@{gid}"] = max(g.Pmin - p, p - g.Pmax, 0.0)
        viol[f"qgen@{gid}"] = max(g.Qmin - q, q - g.Qmax, 0.0)
    for b in c.buses:
        v2 = point.vm[b.id] ** 2
        p_out = inj_p[b.id] + b.Gs * v2
        q_out = inj_q[b.id] - b.Bs * v2
        viol[f"pbal@{b.id}"] = abs(p_out - (gen_p[b.id] - b.Pd))
        viol[f"qbal@{b.id}"] = abs(q_out - (gen_q[b.id] - b.Qd))
        vm = point.vm[b.id]
        viol[f"vm@{b.id}"] = max(b.Vmin - vm, vm - b.Vmax, 0.0)
    return ResidualReport(cost, viol, flows)


def read_primal_point(text: str) -> PrimalPoint:
    """Parse ``bus <id> vm <v> va <rad>`` / ``gen <id> pg <p> qg <q>`` lines."""
    pt = PrimalPoint({}, {}, {}, {})
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "bus" and len(tok) == 6 and tok[2] == "vm" and tok[4] == "va":
                bid = int(tok[1])
                pt.vm[bid] = float(tok[3])
                pt.va[bid] = float(tok[5])
            elif tok[0] == "gen" and len(tok) == 6 and tok[2] == "pg" and tok[4] == "qg":
                gid = int(tok[1])
                pt.pg[gid] = float(tok[3])
                pt.qg[gid] = float(tok[5])
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {lineno}: malformed primal point record") from None
    return pt


def write_primal_point(pt: PrimalPoint) -> str:
    lines = [f"bus {b} vm {pt.vm[b]:.17g} va {pt.va[b]:.17g}" for b in sorted(pt.vm)]
    lines += [f"gen {g} pg {pt.pg[g]:.17g} qg {pt.qg[g]:.17g}" for g in sorted(pt.pg)]
    return "\n".join(lines) + "\n"
