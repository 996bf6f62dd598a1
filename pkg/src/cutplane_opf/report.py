"""Round-log parsing and first/last-round summary tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class RoundRecord:
    index: int
    objective: float
    computed: int
    added: int
    dropped: int
    rejected: int
    time: float


@dataclass
class RunSummary:
    status: str
    bound: float
    rounds: list[RoundRecord] = field(default_factory=list)


def summarize(result) -> RunSummary:
    """:class:`RunSummary` of a driver result."""
    recs = [RoundRecord(r.index, r.objective, r.computed, r.added, r.dropped, r.rejected, r.time)
            for r in result.rounds]
    return RunSummary(result.status, result.bound, recs)


def format_log(result) -> str:
    """Round lines followed by a ``status <S> bound <z>`` trailer."""
    return result.log_text + f"status {result.status} bound {result.bound:.17g}\n"


_INT_FIELDS = ("round", "computed", "added", "dropped", "rejected")


def parse_log(text: str) -> RunSummary:
    recs = []
    status, bound = None, None
    for ln, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if not tok:
            continue
        if tok[0] == "status" and len(tok) == 4 and tok[2] == "bound":
            status, bound = tok[1], float(tok[3])
            continue
        if tok[0] != "round" or len(tok) != 14:
            raise ValueError(f"line {ln}: not a round record")
        kv = dict(zip(tok[0::2], tok[1::2]))
        try:
            recs.append(RoundRecord(int(kv["round"]), float(kv["obj"]), int(kv["computed"]),
                                    int(kv["added"]), int(kv["dropped"]), int(kv["rejected"]),
                                    float(kv["time"])))
        except (KeyError, ValueError):
            raise ValueError(f"line {ln}: malformed round record") from None
    if status is None:
        status = "Unknown"
        bound = recs[-1].objective if recs else -math.inf
    return RunSummary(status, bound, recs)


def gap(z_relax: float, z_primal: float) -> float:
    return (z_primal - z_relax) / z_primal


def _objective(z: float, status: str, last: bool) -> str:
    if status == "Infeasible" and (last or not math.isfinite(z)):
        return "INF"
    text = f"{z:.2f}" if math.isfinite(z) else "-"
    if status == "NumericTrouble" and last:
        text += "*"
    return text


def report(summary: RunSummary, primal: Optional[float] = None) -> str:
    """Table with a first-round and a last-round row.

    The last row carries totals of cuts computed and added and the round
    count; with ``primal`` each row shows the optimality gap in percent.
    """
    head = ["", "Objective"] + (["Gap"] if primal is not None else []) + \
        ["Time(s)", "Computed", "Added", "Rounds"]
    rows = [head]
    recs = summary.rounds
    if recs:
        first = recs[0]
        last_z = summary.bound if summary.status == "NumericTrouble" else recs[-1].objective
        rows_spec = [("First Round", first.objective, False, [first], 1),
                ("Last Round", last_z, True, recs, len(recs))]
        for label, z, is_last, span, n in rows_spec:
            row = [label, _objective(z, summary.status, is_last)]
            if primal is not None:
                infeasible = summary.status == "Infeasible" and is_last
                row.append("INF" if infeasible or not math.isfinite(z) else f"{100 * gap(z, primal):.2f}%")
            row += [f"{sum(r.time for r in span):.2f}", str(sum(r.computed for r in span)),
                    str(sum(r.added for r in span)), str(n)]
            rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                       for i, (cell, w) in enumerate(zip(r, widths))).rstrip() for r in rows]
    lines.append(f"status: {summary.status}")
    return "\n".join(lines) + "\n"
