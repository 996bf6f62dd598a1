"""Line-oriented text image of a set of cuts, tied to a case digest."""

from __future__ import annotations

from dataclasses import dataclass, field

from .cuts import CONE_ROLES, FAMILIES, LIMIT_ROLES, Cut
from .network import BranchKey

VERSION = "1"


class StoreFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class CutStore:
    digest: str
    name: str
    cuts: list[Cut] = field(default_factory=list)
    params: dict[str, str] = field(default_factory=dict)


def _num(x: float) -> str:
    return f"{x:.17g}"


def dumps(store: CutStore) -> str:
    lines = [f"CSTORE {VERSION}", f"case {store.digest} {store.name}"]
    for k in sorted(store.params):
        lines.append(f"param {k} {store.params[k]}")
    for cut in store.cuts:
        b = cut.branch
        head = f"cut {cut.family} {b.from_bus} {b.to_bus}"
        if b.circuit != 1:
            head += f" ckt {b.circuit}"
        coeffs = " ".join(f"{r}:{_num(a)}" for r, a in cut.normal.items())
        lines.append(f"{head} {coeffs} rhs {_num(cut.rhs)} round {cut.birth_round}")
    return "\n".join(lines) + "\n"


def _allowed_roles(family: str) -> set[str]:
    if family == "limit":
        return {r for pair in LIMIT_ROLES.values() for r in pair}
    return set(CONE_ROLES[family])


def _parse_cut(tok: list[str], ln: int) -> Cut:
    if len(tok) < 4:
        raise StoreFormatError("truncated cut record", ln)
    family = tok[1]
    if family not in FAMILIES:
        raise StoreFormatError(f"unknown cut family {family!r}", ln)
    try:
        f, t = int(tok[2]), int(tok[3])
    except ValueError:
        raise StoreFormatError("bad branch label", ln) from None
    i = 4
    circuit = 1
    if i < len(tok) and tok[i] == "ckt":
        try:
            circuit = int(tok[i + 1])
        except (IndexError, ValueError):
            raise StoreFormatError("bad circuit number", ln) from None
        i += 2
    normal: dict[str, float] = {}
    allowed = _allowed_roles(family)
    while i < len(tok) and ":" in tok[i]:
        role, _, val = tok[i].partition(":")
        if role not in allowed or role in normal:
            raise StoreFormatError(f"bad role {role!r} for family {family}", ln)
        try:
            normal[role] = float(val)
        except ValueError:
            raise StoreFormatError(f"bad coefficient {val!r}", ln) from None
        i += 1
    rest = tok[i:]
    if len(rest) != 4 or rest[0] != "rhs" or rest[2] != "round":
        raise StoreFormatError("expected 'rhs <value> round <n>'", ln)
    try:
        rhs = float(rest[1])
        birth = int(rest[3])
    except ValueError:
        raise StoreFormatError("bad rhs or round", ln) from None
    try:
        return Cut(family, BranchKey(f, t, circuit), normal, rhs, birth, birth)
    except ValueError as exc:
        raise StoreFormatError(str(exc), ln) from None


def loads(text: str) -> CutStore:
    lines = text.splitlines()
    if not lines or lines[0].split() != ["CSTORE", VERSION]:
        raise StoreFormatError("missing or unsupported 'CSTORE' header", 1)
    if len(lines) < 2:
        raise StoreFormatError("missing case line", 2)
    head = lines[1].split(maxsplit=2)
    if len(head) < 2 or head[0] != "case":
        raise StoreFormatError("expected 'case <digest> <name>'", 2)
    store = CutStore(head[1], head[2] if len(head) > 2 else "")
    for ln, raw in enumerate(lines[2:], 3):
        tok = raw.split()
        if not tok:
            continue
        if tok[0] == "param":
            if len(tok) != 3:
                raise StoreFormatError("expected 'param <key> <value>'", ln)
            store.params[tok[1]] = tok[2]
        elif tok[0] == "cut":
            store.cuts.append(_parse_cut(tok, ln))
        else:
            raise StoreFormatError(f"unknown record {tok[0]!r}", ln)
    return store


def read_store(path) -> CutStore:
    with open(path) as fh:
        return loads(fh.read())


def write_store(store: CutStore, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(store))
