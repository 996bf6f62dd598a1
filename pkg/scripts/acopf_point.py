"""Compute a local ACOPF solution of a case file and write it as a primal point.

Used offline to produce the bundled ``*.primal`` fixtures; the package itself
never solves the nonconvex problem.

    python3 scripts/acopf_point.py src/cutplane_opf/data/case9.m > case9.primal
"""

import sys

import numpy as np
from scipy.optimize import minimize

from cutplane_opf import load_case
from cutplane_opf.relaxation import PrimalPoint, acopf_residuals, polar_flows, write_primal_point


def main(path):
    c = load_case(path)
    buses = [b.id for b in c.buses]
    n = len(buses)
    gens = c.active_generators
    ng = len(gens)
    ref = next((b.id for b in c.buses if b.bus_type == 3), buses[0])

    def unpack(z):
        vm = dict(zip(buses, z[:n]))
        va = dict(zip(buses, z[n:2 * n]))
        pg = {gid: z[2 * n + j] for j, (gid, _) in enumerate(gens)}
        qg = {gid: z[2 * n + ng + j] for j, (gid, _) in enumerate(gens)}
        return PrimalPoint(vm, va, pg, qg)

    def balance(z):
        pt = unpack(z)
        p = {b: 0.0 for b in buses}
        q = {b: 0.0 for b in buses}
        for br in c.active_branches:
            f, t = br.from_bus, br.to_bus
            pkm, pmk, qkm, qmk = polar_flows(br, pt.vm[f], pt.vm[t], pt.va[f], pt.va[t])
            p[f] += pkm
            q[f] += qkm
            p[t] += pmk
            q[t] += qmk
        for gid, g in gens:
            p[g.bus] -= pt.pg[gid]
            q[g.bus] -= pt.qg[gid]
        out = []
        for b in c.buses:
            v2 = pt.vm[b.id] ** 2
            out.append(p[b.id] + b.Gs * v2 + b.Pd)
            out.append(q[b.id] - b.Bs * v2 + b.Qd)
        out.append(pt.va[ref])
        return np.array(out)

    def thermal(z):
        pt = unpack(z)
        out = []
        for br in c.active_branches:
            if br.U is None:
                continue
            f, t = br.from_bus, br.to_bus
            pkm, pmk, qkm, qmk = polar_flows(br, pt.vm[f], pt.vm[t], pt.va[f], pt.va[t])
            # Margin keeps the polished point inside binding limits.
            u2 = (br.U * (1 - 1e-6)) ** 2
            out += [u2 - pkm ** 2 - qkm ** 2, u2 - pmk ** 2 - qmk ** 2]
        return np.array(out)

    def cost(z):
        pt = unpack(z)
        return sum(g.cost(pt.pg[gid]) for gid, g in gens)

    bounds = ([(b.Vmin, b.Vmax) for b in c.buses] + [(-np.pi / 2, np.pi / 2)] * n
              + [(g.Pmin, g.Pmax) for _, g in gens] + [(g.Qmin, g.Qmax) for _, g in gens])
    z0 = np.array([1.0] * n + [0.0] * n + [(g.Pmin + g.Pmax) / 2 for _, g in gens] + [0.0] * ng)
    cons = [{"type": "eq", "fun": balance}]
    if len(thermal(z0)):
        cons.append({"type": "ineq", "fun": thermal})
    res = minimize(cost, z0, method="SLSQP", bounds=bounds, constraints=cons,
                   options={"ftol": 1e-14, "maxiter": 2000})
    z = res.x
    # Polish: Newton steps on the balance with generator set points fixed
    # except the reactive outputs and the reference unit's active output.
    free = list(range(2 * n))
    free.remove(n + buses.index(ref))
    refgen = next(j for j, (_, g) in enumerate(gens) if g.bus == ref)
    free.append(2 * n + refgen)
    free += [2 * n + ng + j for j in range(ng)]
    for _ in range(20):
        r = balance(z)
        if np.max(np.abs(r)) < 1e-13:
            break
        J = np.empty((len(r), len(free)))
        for k, i in enumerate(free):
            dz = np.zeros_like(z)
            dz[i] = 1e-7
            J[:, k] = (balance(z + dz) - balance(z - dz)) / 2e-7
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        z[free] += step
    pt = unpack(z)
    rep = acopf_residuals(c, pt)
    print(f"# objective {rep.objective:.10g} max residual {rep.max_violation:.3g}", file=sys.stderr)
    sys.stdout.write(write_primal_point(pt))


if __name__ == "__main__":
    main(sys.argv[1])
