"""Per-unit network model, MATPOWER case parsing and branch admittances.

All quantities stored on a :class:`NetworkCase` are per-unit on the system
base ``baseMVA``; angles are radians. Buses are kept sorted by their external
label so that internal (dense) indices are deterministic.
"""

from __future__ import annotations

import cmath
import hashlib
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class CaseParseError(ValueError):
    """Raised when a case file cannot be turned into a valid network model."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        self.reason = message
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class BranchKey(NamedTuple):
    """Identity of a branch by its endpoint labels.

    ``circuit`` numbers parallel branches between the same ordered pair of
    buses in file order, starting at 1.
    """

    from_bus: int
    to_bus: int
    circuit: int = 1

    def __str__(self) -> str:
        base = f"{self.from_bus}-{self.to_bus}"
        return base if self.circuit == 1 else f"{base}#{self.circuit}"


@dataclass(frozen=True)
class Bus:
    id: int
    Pd: float = 0.0
    Qd: float = 0.0
    Gs: float = 0.0
    Bs: float = 0.0
    Vmin: float = 0.9
    Vmax: float = 1.1
    bus_type: int = 1
    base_kv: float = 0.0


@dataclass(frozen=True)
class Branch:
    """Series/shunt branch data (pi model with off-nominal transformer).

    ``U`` is the thermal limit in p.u.; ``None`` means unbounded.
    """

    from_bus: int
    to_bus: int
    r: float
    x: float
    b_sh: float = 0.0
    g_sh: float = 0.0
    tau: float = 1.0
    sigma: float = 0.0
    U: Optional[float] = None
    status: bool = True
    angmin: float = -2 * math.pi
    angmax: float = 2 * math.pi
    circuit: int = 1

    @property
    def key(self) -> BranchKey:
        return BranchKey(self.from_bus, self.to_bus, self.circuit)

    @property
    def series_admittance(self) -> complex:
        return 1.0 / complex(self.r, self.x)


# Alias used by the solver-facing modules.
BranchParams = Branch


@dataclass(frozen=True)
class CostFunction:
    """Convex generation cost in $/h as a function of p.u. output.

    ``kind`` is ``"poly"`` (``c2 p^2 + c1 p + c0``) or ``"pwl"`` (convex
    piecewise-linear through ``points``).
    """

    kind: str = "poly"
    c2: float = 0.0
    c1: float = 0.0
    c0: float = 0.0
    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "poly":
            if not self.c2 >= 0:
                raise ValueError("nonconvex cost")
        elif self.kind == "pwl":
            if len(self.points) < 2:
                raise ValueError("piecewise-linear cost needs at least two points")
            slopes = self.slopes
            if any(b < a - 1e-12 * max(1.0, abs(a)) for a, b in zip(slopes, slopes[1:])):
                raise ValueError("nonconvex cost")
        else:
            raise ValueError(f"unknown cost kind {self.kind!r}")

    @property
    def slopes(self) -> list[float]:
        pts = self.points
        out = []
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if not x1 > x0:
                raise ValueError("nonconvex cost")
            out.append((y1 - y0) / (x1 - x0))
        return out

    def __call__(self, p: float) -> float:
        if self.kind == "poly":
            return self.c2 * p * p + self.c1 * p + self.c0
        # Epigraph of the segment lines, i.e. the convex extension.
        xs = self.points
        return max(y0 + m * (p - x0) for (x0, y0), m in zip(xs, self.slopes))


@dataclass(frozen=True)
class Generator:
    bus: int
    Pmin: float
    Pmax: float
    Qmin: float
    Qmax: float
    cost: CostFunction = field(default_factory=CostFunction)
    status: bool = True


@dataclass(frozen=True)
class AdmittanceMatrix:
    Gkk: float
    Gkm: float
    Gmk: float
    Gmm: float
    Bkk: float
    Bkm: float
    Bmk: float
    Bmm: float


@dataclass(frozen=True)
class NetworkCase:
    baseMVA: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    name: str = "case"

    @cached_property
    def bus_index(self) -> dict[int, int]:
        """External bus label -> dense internal index."""
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def branch_by_key(self) -> dict[BranchKey, Branch]:
        return {br.key: br for br in self.branches}

    def bus(self, label: int) -> Bus:
        return self.buses[self.bus_index[label]]

    @property
    def active_branches(self) -> list[Branch]:
        return [br for br in self.branches if br.status]

    @property
    def active_generators(self) -> list[tuple[int, Generator]]:
        """(1-based generator id, generator) for in-service units."""
        return [(i + 1, g) for i, g in enumerate(self.generators) if g.status]

    @cached_property
    def id(self) -> str:
        """Content digest of the per-unit data, used to match cut stores."""
        h = hashlib.sha256()
        h.update(repr(self.baseMVA).encode())
        for b in self.buses:
            h.update(repr((b.id, b.Pd, b.Qd, b.Gs, b.Bs, b.Vmin, b.Vmax)).encode())
        for br in self.branches:
            h.update(repr((br.from_bus, br.to_bus, br.r, br.x, br.b_sh, br.g_sh,
                           br.tau, br.sigma, br.U, br.status, br.circuit)).encode())
        for g in self.generators:
            h.update(repr((g.bus, g.Pmin, g.Pmax, g.Qmin, g.Qmax, g.status,
                           g.cost)).encode())
        return h.hexdigest()[:16]

    def with_branch_status(self, key: BranchKey, status: bool) -> "NetworkCase":
        branches = tuple(replace(br, status=status) if br.key == key else br
                         for br in self.branches)
        return replace(self, branches=branches)


def branch_admittance(p: Branch) -> AdmittanceMatrix:
    """Two-port admittance matrix of a branch, split into real and imaginary parts.

    Uses ``Y = [[(y + ysh/2)/tau^2, -y/(tau e^{-j sigma})],
    [-y/(tau e^{j sigma}), y + ysh/2]]`` with ``y = 1/(r + jx)``.
    """
    if not p.tau > 0:
        raise ValueError("tap ratio must be positive")
    if p.r == 0 and p.x == 0:
        raise ValueError("zero-impedance branch")
    y = p.series_admittance
    ysh = complex(p.g_sh, p.b_sh)
    ykk = (y + ysh / 2) / p.tau ** 2
    ykm = -y / (p.tau * cmath.exp(-1j * p.sigma))
    ymk = -y / (p.tau * cmath.exp(1j * p.sigma))
    ymm = y + ysh / 2
    return AdmittanceMatrix(ykk.real, ykm.real, ymk.real, ymm.real,
                            ykk.imag, ykm.imag, ymk.imag, ymm.imag)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    severity: str = "warning"


def validate_case(c: NetworkCase) -> list[Diagnostic]:
    """Report modelling hazards without touching the case."""
    out: list[Diagnostic] = []
    n = len(c.buses)
    idx = c.bus_index
    live = c.active_branches
    if n > 1:
        rows = [idx[br.from_bus] for br in live]
        cols = [idx[br.to_bus] for br in live]
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        ncomp, _ = connected_components(graph, directed=False)
        if ncomp > 1:
            out.append(Diagnostic("island", f"island detected ({ncomp} components)"))
    for br in live:
        if br.r == 0 and br.x == 0:
            out.append(Diagnostic("zero-impedance", f"zero-impedance branch {br.key}",
                                  severity="error"))
        if br.U is None:
            out.append(Diagnostic("no-limit", f"missing thermal limit on branch {br.key}"))
    for b in c.buses:
        if b.Vmin == 0:
            out.append(Diagnostic("vmin-zero", f"zero lower voltage bound at bus {b.id}"))
    return out


# --------------------------------------------------------------------------
# MATPOWER subset reader / writer
# --------------------------------------------------------------------------

_MIN_COLS = {"bus": 13, "gen": 10, "branch": 11, "gencost": 4}
# Widths of the standard tables including solved-case result columns.
_KNOWN_COLS = {"bus": 17, "gen": 25, "branch": 21}

_BLOCK_RE = re.compile(r"mpc\.(\w+)\s*=\s*\[")
_SCALAR_RE = re.compile(r"mpc\.baseMVA\s*=\s*([-+0-9.eE]+)\s*;?")


def _strip_comments(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        cut = raw.find("%")
        lines.append(raw if cut < 0 else raw[:cut])
    return lines


def _read_tables(text: str) -> tuple[Optional[float], dict[str, list[tuple[int, list[float]]]]]:
    lines = _strip_comments(text)
    base = None
    tables: dict[str, list[tuple[int, list[float]]]] = {}
    i = 0
    while i < len(lines):
        line = lines[i]
        m = _SCALAR_RE.search(line)
        if m:
            try:
                base = float(m.group(1))
            except ValueError as exc:
                raise CaseParseError("malformed baseMVA", i + 1) from exc
        m = _BLOCK_RE.search(line)
        if not m:
            i += 1
            continue
        name = m.group(1)
        start_line = i + 1
        rows: list[tuple[int, list[float]]] = []
        rest = line[m.end():]
        closed = False
        while True:
            body = rest
            if "]" in body:
                body = body[: body.index("]")]
                closed = True
            for chunk in body.split(";"):
                tokens = chunk.replace(",", " ").split()
                if not tokens:
                    continue
                try:
                    rows.append((i + 1, [float(t) for t in tokens]))
                except ValueError as exc:
                    raise CaseParseError(f"malformed table mpc.{name}", i + 1) from exc
            if closed:
                break
            i += 1
            if i >= len(lines):
                raise CaseParseError(f"unterminated table mpc.{name}", start_line)
            rest = lines[i]
        if name in tables:
            raise CaseParseError(f"duplicate table mpc.{name}", start_line)
        tables[name] = rows
        i += 1
    return base, tables


def _check_width(name: str, rows: list[tuple[int, list[float]]]) -> None:
    for ln, vals in rows:
        if len(vals) < _MIN_COLS[name]:
            raise CaseParseError(
                f"malformed table mpc.{name}: expected at least "
                f"{_MIN_COLS[name]} columns, got {len(vals)}", ln)
    known = _KNOWN_COLS.get(name)
    if known is not None and any(len(v) > known for _, v in rows):
        warnings.warn(f"mpc.{name}: ignoring columns beyond {known}", stacklevel=3)


def _parse_cost(vals: list[float], base: float, ln: int) -> CostFunction:
    model = int(vals[0])
    ncost = int(vals[3])
    data = vals[4:]
    try:
        if model == 2:
            if len(data) < ncost:
                raise CaseParseError("malformed table mpc.gencost: too few coefficients", ln)
            coeffs = list(reversed(data[:ncost]))  # ascending powers
            if any(c != 0 for c in coeffs[3:]):
                raise CaseParseError("unsupported cost degree (> 2)", ln)
            coeffs += [0.0] * (3 - len(coeffs))
            c0, c1, c2 = coeffs[:3]
            return CostFunction("poly", c2=c2 * base ** 2, c1=c1 * base, c0=c0)
        if model == 1:
            if len(data) < 2 * ncost:
                raise CaseParseError("malformed table mpc.gencost: too few breakpoints", ln)
            pts = tuple((data[2 * j] / base, data[2 * j + 1]) for j in range(ncost))
            return CostFunction("pwl", points=pts)
    except ValueError as exc:
        if isinstance(exc, CaseParseError):
            raise
        raise CaseParseError(str(exc), ln) from exc
    raise CaseParseError(f"unknown cost model {model}", ln)


def parse_case(text: str, name: str = "case") -> NetworkCase:
    """Parse a MATPOWER ``.m`` case into a per-unit :class:`NetworkCase`."""
    base, tables = _read_tables(text)
    if base is None:
        raise CaseParseError("missing mpc.baseMVA")
    if not base > 0:
        raise CaseParseError("baseMVA must be positive")
    for req in ("bus", "gen", "branch"):
        if req not in tables:
            raise CaseParseError(f"missing table mpc.{req}")
        _check_width(req, tables[req])
    if "gencost" in tables:
        _check_width("gencost", tables["gencost"])

    buses = []
    seen: dict[int, int] = {}
    for ln, v in tables["bus"]:
        bid = int(v[0])
        if bid in seen:
            raise CaseParseError(f"duplicate bus id {bid}", ln)
        seen[bid] = ln
        pd = v[2] / base
        if pd < 0:
            raise CaseParseError(f"negative active load at bus {bid}", ln)
        vmax, vmin = v[11], v[12]
        if vmin < 0 or vmax < vmin:
            raise CaseParseError(f"invalid voltage bounds at bus {bid}", ln)
        buses.append(Bus(id=bid, Pd=pd, Qd=v[3] / base, Gs=v[4] / base, Bs=v[5] / base,
                         Vmin=vmin, Vmax=vmax, bus_type=int(v[1]), base_kv=v[9]))
    buses.sort(key=lambda b: b.id)

    branches = []
    circuits: dict[tuple[int, int], int] = {}
    for ln, v in tables["branch"]:
        f, t = int(v[0]), int(v[1])
        for end in (f, t):
            if end not in seen:
                raise CaseParseError(f"branch references unknown bus {end}", ln)
        tap = v[8] if v[8] != 0 else 1.0
        if tap < 0:
            raise CaseParseError("negative tap ratio", ln)
        rate = v[5]
        if rate < 0:
            raise CaseParseError("negative thermal limit", ln)
        ckt = circuits.get((f, t), 0) + 1
        circuits[(f, t)] = ckt
        angmin = math.radians(v[11]) if len(v) > 11 else -2 * math.pi
        angmax = math.radians(v[12]) if len(v) > 12 else 2 * math.pi
        branches.append(Branch(
            from_bus=f, to_bus=t, r=v[2], x=v[3], b_sh=v[4], tau=tap,
            sigma=math.radians(v[9]), U=None if rate == 0 else rate / base,
            status=v[10] != 0, angmin=angmin, angmax=angmax, circuit=ckt))

    gen_rows = tables["gen"]
    cost_rows = tables.get("gencost", [])
    if cost_rows and len(cost_rows) < len(gen_rows):
        raise CaseParseError("mpc.gencost has fewer rows than mpc.gen", cost_rows[0][0])
    if len(cost_rows) > len(gen_rows):
        warnings.warn("mpc.gencost: reactive cost rows ignored", stacklevel=2)
    gens = []
    for j, (ln, v) in enumerate(gen_rows):
        gbus = int(v[0])
        if gbus not in seen:
            raise CaseParseError(f"generator references unknown bus {gbus}", ln)
        pmax, pmin, qmax, qmin = v[8] / base, v[9] / base, v[3] / base, v[4] / base
        if pmin > pmax or qmin > qmax:
            raise CaseParseError(f"inconsistent output bounds for generator {j + 1}", ln)
        cost = _parse_cost(cost_rows[j][1], base, cost_rows[j][0]) if cost_rows else CostFunction()
        gens.append(Generator(bus=gbus, Pmin=pmin, Pmax=pmax, Qmin=qmin, Qmax=qmax,
                              cost=cost, status=v[7] > 0))
    if not any(g.status for g in gens):
        raise CaseParseError("no generator in service")
    return NetworkCase(baseMVA=base, buses=tuple(buses), branches=tuple(branches),
                       generators=tuple(gens), name=name)


def load_case(path) -> NetworkCase:
    """Read a case file from disk; the case name is the file stem."""
    from pathlib import Path

    p = Path(path)
    return parse_case(p.read_text(), name=p.stem)


def _num(x: float) -> str:
    return f"{x:.17g}"


def write_case(c: NetworkCase) -> str:
    """Serialize a case back to the MATPOWER subset read by :func:`parse_case`."""
    base = c.baseMVA
    out = [f"function mpc = {c.name}", "mpc.version = '2';", f"mpc.baseMVA = {_num(base)};", "",
           "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin", "mpc.bus = ["]
    for b in c.buses:
        out.append("\t" + " ".join([str(b.id), str(b.bus_type), _num(b.Pd * base), _num(b.Qd * base),
                                    _num(b.Gs * base), _num(b.Bs * base), "1", "1", "0",
                                    _num(b.base_kv), "1", _num(b.Vmax), _num(b.Vmin)]) + ";")
    out += ["];", "", "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin", "mpc.gen = ["]
    for g in c.generators:
        out.append("\t" + " ".join([str(g.bus), "0", "0", _num(g.Qmax * base), _num(g.Qmin * base),
                                    "1", _num(base), "1" if g.status else "0",
                                    _num(g.Pmax * base), _num(g.Pmin * base)]) + ";")
    out += ["];", "", "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax",
            "mpc.branch = ["]
    for br in c.branches:
        rate = 0.0 if br.U is None else br.U * base
        out.append("\t" + " ".join([str(br.from_bus), str(br.to_bus), _num(br.r), _num(br.x),
                                    _num(br.b_sh), _num(rate), _num(rate), _num(rate),
                                    _num(br.tau), _num(math.degrees(br.sigma)),
                                    "1" if br.status else "0",
                                    _num(math.degrees(br.angmin)),
                                    _num(math.degrees(br.angmax))]) + ";")
    out += ["];", "", "mpc.gencost = ["]
    for g in c.generators:
        f = g.cost
        if f.kind == "poly":
            vals = ["2", "0", "0", "3", _num(f.c2 / base ** 2), _num(f.c1 / base), _num(f.c0)]
        else:
            vals = ["1", "0", "0", str(len(f.points))]
            for x, y in f.points:
                vals += [_num(x * base), _num(y)]
        out.append("\t" + " ".join(vals) + ";")
    out += ["];", ""]
    return "\n".join(out)

