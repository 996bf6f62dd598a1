"""Independent reference computations used by the tests.

Nothing here imports the relaxation builder or the cut engine; the SOC
optimum is assembled directly from complex branch admittances.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def y_blocks(br):
    """Complex two-port admittances (Ykk, Ykm, Ymk, Ymm)."""
    y = 1 / complex(br.r, br.x)
    ysh = complex(br.g_sh, br.b_sh)
    t = br.tau * np.exp(1j * br.sigma)
    return ((y + ysh / 2) / abs(t) ** 2, -y / np.conj(t), -y / t, y + ysh / 2)


def complex_flows(br, vk2, vm2, c, s):
    """Complex power into each end from W-space values (W_km = c + j s)."""
    ykk, ykm, ymk, ymm = y_blocks(br)
    wkm = complex(c, s)
    skm = np.conj(ykk) * vk2 + np.conj(ykm) * wkm
    smk = np.conj(ymm) * vm2 + np.conj(ymk) * np.conj(wkm)
    return skm, smk


def tangent_cost(cost, pmin, pmax, K=10):
    """Max of K tangent lines of a quadratic at segment midpoints."""
    h = (pmax - pmin) / K
    pts = [pmin + (i + 0.5) * h for i in range(K)]
    return [(2 * cost.c2 * p + cost.c1, cost.c0 - cost.c2 * p * p) for p in pts]


def soc_optimum(case, K=10, i2=True):
    """Optimum of the Jabr + i2 SOC relaxation with tangent-line costs."""
    import cvxpy as cp

    buses = [b.id for b in case.buses]
    ix = {b: i for i, b in enumerate(buses)}
    n = len(buses)
    v = cp.Variable(n)
    brs = case.active_branches
    m = len(brs)
    c = cp.Variable(m)
    s = cp.Variable(m)
    gens = case.active_generators
    pg = cp.Variable(len(gens))
    qg = cp.Variable(len(gens))
    t = cp.Variable(len(gens))
    cons = []
    for b in case.buses:
        i = ix[b.id]
        cons += [v[i] >= b.Vmin ** 2, v[i] <= b.Vmax ** 2]
    pin = [0] * n
    qin = [0] * n
    for j, br in enumerate(brs):
        k, l = ix[br.from_bus], ix[br.to_bus]
        ykk, ykm, ymk, ymm = y_blocks(br)
        # S_km = conj(Ykk) v_k + conj(Ykm) (c + j s)
        a, bb = np.conj(ykk), np.conj(ykm)
        pkm = a.real * v[k] + bb.real * c[j] - bb.imag * s[j]
        qkm = a.imag * v[k] + bb.imag * c[j] + bb.real * s[j]
        a2, b2 = np.conj(ymm), np.conj(ymk)
        # S_mk = conj(Ymm) v_m + conj(Ymk) (c - j s)
        pmk = a2.real * v[l] + b2.real * c[j] + b2.imag * s[j]
        qmk = a2.imag * v[l] + b2.imag * c[j] - b2.real * s[j]
        vmax = case.bus(br.from_bus).Vmax * case.bus(br.to_bus).Vmax
        cons += [c[j] >= 0, c[j] <= vmax, s[j] <= vmax, s[j] >= -vmax]
        cons += [cp.norm(cp.hstack([2 * c[j], 2 * s[j], v[k] - v[l]])) <= v[k] + v[l]]
        if br.U is not None:
            cons += [cp.norm(cp.hstack([pkm, qkm])) <= br.U, cp.norm(cp.hstack([pmk, qmk])) <= br.U]
        if i2:
            # |I_k|^2 = |Ykk V_k + Ykm V_m|^2 expanded in W-space.
            aa = abs(ykk) ** 2
            bb2 = abs(ykm) ** 2
            cross = ykk * np.conj(ykm)
            i2e = aa * v[k] + bb2 * v[l] + 2 * (cross.real * c[j] - cross.imag * s[j])
            cons += [cp.norm(cp.hstack([2 * pkm, 2 * qkm, v[k] - i2e])) <= v[k] + i2e]
            if br.U is not None and case.bus(br.from_bus).Vmin > 0:
                cons += [i2e <= br.U ** 2 / case.bus(br.from_bus).Vmin ** 2]
        pin[k] = pin[k] + pkm
        qin[k] = qin[k] + qkm
        pin[l] = pin[l] + pmk
        qin[l] = qin[l] + qmk
    gp = [0] * n
    gq = [0] * n
    obj = 0
    for j, (gid, g) in enumerate(gens):
        i = ix[g.bus]
        gp[i] = gp[i] + pg[j]
        gq[i] = gq[i] + qg[j]
        cons += [pg[j] >= g.Pmin, pg[j] <= g.Pmax, qg[j] >= g.Qmin, qg[j] <= g.Qmax]
        if g.cost.c2:
            for sl, ic in tangent_cost(g.cost, g.Pmin, g.Pmax, K):
                cons += [t[j] >= sl * pg[j] + ic]
            obj = obj + t[j]
        else:
            obj = obj + g.cost.c1 * pg[j] + g.cost.c0
    for b in case.buses:
        i = ix[b.id]
        cons += [pin[i] + b.Gs * v[i] == gp[i] - b.Pd, qin[i] - b.Bs * v[i] == gq[i] - b.Qd]
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.value


def box_minimum_by_vertices(coeffs, lower, upper):
    """Minimum of a linear form over a box by enumerating its vertices."""
    best = math.inf
    for corner in itertools.product(*zip(lower, upper)):
        best = min(best, sum(a * x for a, x in zip(coeffs, corner)))
    return best


def two_bus_grid_optimum(case, K=10, n=201, zooms=12, shrink=0.25):
    """SOC optimum of a two-bus, one-line case with no generator at bus 2.

    For fixed squared magnitudes (v1, v2) the bus-2 balance fixes
    W = c + j s, so the relaxation reduces to a convex problem in two
    variables, searched on a grid that is repeatedly zoomed around the best
    feasible point.
    """
    (br,) = case.active_branches
    b1, b2 = case.bus(br.from_bus), case.bus(br.to_bus)
    (gid, gen), = case.active_generators
    assert gen.bus == b1.id
    ykk, ykm, ymk, ymm = y_blocks(br)
    sd2 = complex(b2.Pd, b2.Qd)
    sh1 = complex(b1.Gs, -b1.Bs)
    sh2 = complex(b2.Gs, -b2.Bs)
    lines = tangent_cost(gen.cost, gen.Pmin, gen.Pmax, K) if gen.cost.c2 else [(gen.cost.c1, gen.cost.c0)]
    vmax = b1.Vmax * b2.Vmax
    lo = np.array([b1.Vmin ** 2, b2.Vmin ** 2])
    hi = np.array([b1.Vmax ** 2, b2.Vmax ** 2])
    box_lo, box_hi = lo.copy(), hi.copy()
    best = (math.inf, None)
    for _ in range(zooms):
        g1, g2 = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n), indexing="ij")
        wc = (-sd2 - sh2 * g2 - np.conj(ymm) * g2) / np.conj(ymk)
        w = np.conj(wc)
        c, s = w.real, w.imag
        skm = np.conj(ykk) * g1 + np.conj(ykm) * w
        smk = np.conj(ymm) * g2 + np.conj(ymk) * wc
        i2 = abs(ykk) ** 2 * g1 + abs(ykm) ** 2 * g2 + 2 * (ykk * np.conj(ykm) * w).real
        pg = skm.real + sh1.real * g1 + b1.Pd
        qg = skm.imag + sh1.imag * g1 + b1.Qd
        ok = (c >= 0) & (c <= vmax) & (np.abs(s) <= vmax) & (c * c + s * s <= g1 * g2)
        ok &= abs(skm) ** 2 <= g1 * i2
        if br.U is not None:
            ok &= (abs(skm) <= br.U) & (abs(smk) <= br.U)
            if b1.Vmin > 0:
                ok &= i2 <= br.U ** 2 / b1.Vmin ** 2
        ok &= (pg >= gen.Pmin) & (pg <= gen.Pmax) & (qg >= gen.Qmin) & (qg <= gen.Qmax)
        if not ok.any():
            if best[1] is None:
                return math.inf
            break
        cost = np.max([a * pg + b for a, b in lines], axis=0)
        cost = np.where(ok, cost, math.inf)
        idx = np.unravel_index(np.argmin(cost), cost.shape)
        if cost[idx] < best[0]:
            best = (float(cost[idx]), (g1[idx], g2[idx]))
        centre = np.array(best[1])
        half = (hi - lo) * shrink
        lo = np.maximum(centre - half, box_lo)
        hi = np.minimum(centre + half, box_hi)
    return best[0]
