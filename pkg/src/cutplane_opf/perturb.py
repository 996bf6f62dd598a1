"""Related-instance generation: Gaussian load noise and single-branch outages."""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional

from .network import BranchKey, NetworkCase
from .relaxation import PrimalPoint, polar_flows

_MASK = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator; portable given the 64-bit seed."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        """Standard normal by Box-Muller, two uniforms per draw (cosine branch)."""
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def clamp_load(pd: float, delta: float) -> float:
    return max(pd + delta, 0.0)


def perturb_loads(c: NetworkCase, seed: int) -> NetworkCase:
    """Replace every ``Pd`` by ``max(Pd + d, 0)`` with ``d ~ N(0.01 Pd, (0.01 Pd)^2)``.

    One draw per bus in ascending bus-id order, including buses with no load.
    """
    rng = SplitMix64(seed)
    buses = []
    for bus in c.buses:
        mu = sigma = 0.01 * bus.Pd
        delta = mu + sigma * rng.normal()
        buses.append(replace(bus, Pd=clamp_load(bus.Pd, delta)))
    return replace(c, buses=tuple(buses), name=f"{c.name}_loads{seed}")


def branch_off(c: NetworkCase, key: BranchKey) -> NetworkCase:
    br = c.branch_by_key.get(key)
    if br is None:
        raise KeyError(f"no branch {key}")
    if not br.status:
        raise ValueError(f"branch {key} is already out of service")
    out = c.with_branch_status(key, False)
    return replace(out, name=f"{c.name}_off{key.from_bus}_{key.to_bus}")


def branch_flows(c: NetworkCase, point: PrimalPoint) -> dict[BranchKey, float]:
    """From-side active power of every in-service branch at a polar point."""
    out = {}
    for br in c.active_branches:
        f, t = br.from_bus, br.to_bus
        out[br.key] = polar_flows(br, point.vm[f], point.vm[t], point.va[f], point.va[t])[0]
    return out


def select_max_flow_branch(flows: dict[BranchKey, float]) -> Optional[BranchKey]:
    """Branch of largest ``|P|``; ties go to the lowest label."""
    if not flows:
        return None
    return min(flows, key=lambda k: (-abs(flows[k]), k))
