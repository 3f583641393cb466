"""Multiversion schedules over concrete transactions and the RC/SI/SSI
allowed-under semantics."""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from ..model import RC, SSI, IsolationLevel

OP0 = "op0"
ALL = frozenset({"*"})


@dataclass(frozen=True)
class SOp:
    """One concrete operation; ``kind`` is R, W, U or C (commit)."""

    op_id: str
    txn: str
    kind: str
    obj: Optional[str] = None
    read_set: frozenset[str] = frozenset()
    write_set: frozenset[str] = frozenset()

    @property
    def is_read(self) -> bool:
        return self.kind in ("R", "U")

    @property
    def is_write(self) -> bool:
        return self.kind in ("W", "U")

    def __str__(self) -> str:
        if self.kind == "C":
            return f"C[{self.txn}]"
        return f"{self.kind}[{self.txn}:{self.obj}]"


def op(op_id: str, txn: str, kind: str, obj: Optional[str] = None,
       read_set: Iterable[str] | None = None, write_set: Iterable[str] | None = None) -> SOp:
    """Convenience constructor; omitted attribute sets mean "every attribute"."""
    rs = frozenset(read_set) if read_set is not None else (ALL if kind in ("R", "U") else frozenset())
    ws = frozenset(write_set) if write_set is not None else (ALL if kind in ("W", "U") else frozenset())
    return SOp(op_id, txn, kind, obj, rs, ws)


@dataclass(frozen=True)
class DependencyEdge:
    from_op: str
    to_op: str
    kind: str  # "ww", "wr" or "rw"


@dataclass
class MVSchedule:
    """``order`` excludes op0, which implicitly precedes everything and
    installs the first version of every object."""

    ops: dict[str, SOp]
    order: list[str]
    version_order: dict[str, list[str]]
    version_fn: dict[str, str]
    _pos: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._pos = {o: i for i, o in enumerate(self.order)}
        self._txns: dict[str, list[SOp]] = {}
        for o in self.order:
            s = self.ops[o]
            self._txns.setdefault(s.txn, []).append(s)
        self._vpos = {w: i for vo in self.version_order.values() for i, w in enumerate(vo)}
        self._deps: Optional[list[DependencyEdge]] = None

    @property
    def transactions(self) -> list[str]:
        return list(self._txns)

    def txn_ops(self, t: str) -> list[SOp]:
        return self._txns[t]

    def pos(self, op_id: str) -> int:
        return -1 if op_id == OP0 else self._pos[op_id]

    def before(self, a: str, b: str) -> bool:
        return self.pos(a) < self.pos(b)

    def first(self, t: str) -> str:
        return self._txns[t][0].op_id

    def commit(self, t: str) -> str:
        for s in self._txns[t]:
            if s.kind == "C":
                return s.op_id
        raise ValueError(f"transaction {t} has no commit")

    def vo_less(self, a: str, b: str) -> bool:
        """a ≪ b in the version order (op0 precedes every write)."""
        if a == b:
            return False
        if a == OP0:
            return b != OP0
        if b == OP0:
            return False
        return self._vpos[a] < self._vpos[b]

    def is_read_only(self, t: str) -> bool:
        return not any(s.is_write for s in self._txns[t])

    def writes_on(self, obj: str) -> list[SOp]:
        return [self.ops[w] for w in self.version_order.get(obj, [])]

    def check_well_formed(self) -> None:
        for t, ops in self._txns.items():
            if ops[-1].kind != "C" or sum(s.kind == "C" for s in ops) != 1:
                raise ValueError(f"transaction {t} must end with exactly one commit")
        for obj, vo in self.version_order.items():
            ws = {s.op_id for s in self.ops.values() if s.is_write and s.obj == obj}
            if set(vo) != ws or len(vo) != len(ws):
                raise ValueError(f"version order of {obj} must list every write exactly once")
        for s in self.ops.values():
            if s.is_write and s.obj not in self.version_order:
                raise ValueError(f"write {s.op_id} missing from version order")
            if s.is_read:
                v = self.version_fn.get(s.op_id)
                if v is None:
                    raise ValueError(f"read {s.op_id} has no version")
                if v != OP0 and (self.ops[v].obj != s.obj or not self.before(v, s.op_id)):
                    raise ValueError(f"read {s.op_id} observes an invalid version {v}")


def dependencies(s: MVSchedule) -> list[DependencyEdge]:
    if s._deps is None:
        s._deps = _dependencies(s)
    return list(s._deps)


def _dependencies(s: MVSchedule) -> list[DependencyEdge]:
    edges = []
    by_obj: dict[str, list[SOp]] = {}
    for o in s.order:
        if s.ops[o].kind != "C":
            by_obj.setdefault(s.ops[o].obj, []).append(s.ops[o])
    for b, a in ((b, a) for group in by_obj.values() for b in group for a in group):
        if a.txn == b.txn:
            continue
        if b.write_set & a.write_set and s.vo_less(b.op_id, a.op_id):
            edges.append(DependencyEdge(b.op_id, a.op_id, "ww"))
        if b.write_set & a.read_set:
            va = s.version_fn[a.op_id]
            if va == b.op_id or s.vo_less(b.op_id, va):
                edges.append(DependencyEdge(b.op_id, a.op_id, "wr"))
        if b.read_set & a.write_set and s.vo_less(s.version_fn[b.op_id], a.op_id):
            edges.append(DependencyEdge(b.op_id, a.op_id, "rw"))
    return edges


def serialization_graph(s: MVSchedule) -> dict[str, set[str]]:
    graph: dict[str, set[str]] = {t: set() for t in s.transactions}
    for e in dependencies(s):
        graph[s.ops[e.from_op].txn].add(s.ops[e.to_op].txn)
    return graph


def is_conflict_serializable(s: MVSchedule) -> bool:
    # TopologicalSorter expects predecessor sets, so feed it the reversed edges
    preds: dict[str, set[str]] = {t: set() for t in s.transactions}
    for src, dsts in serialization_graph(s).items():
        for d in dsts:
            preds[d].add(src)
    try:
        tuple(TopologicalSorter(preds).static_order())
    except CycleError:
        return False
    return True


def concurrent(s: MVSchedule, ti: str, tj: str) -> bool:
    return (s.before(s.first(ti), s.commit(tj)) and s.before(s.first(tj), s.commit(ti)))


def respects_commit_order(s: MVSchedule, w: SOp) -> bool:
    cj = s.commit(w.txn)
    for o in s.writes_on(w.obj):
        if o.txn == w.txn:
            continue
        if s.vo_less(w.op_id, o.op_id) != s.before(cj, s.commit(o.txn)):
            return False
    return True


def read_last_committed(s: MVSchedule, r: SOp, anchor: str) -> bool:
    v = s.version_fn[r.op_id]
    if v != OP0 and not s.before(s.commit(s.ops[v].txn), anchor):
        return False
    for o in s.writes_on(r.obj):
        if s.before(s.commit(o.txn), anchor) and s.vo_less(v, o.op_id):
            return False
    return True


def _overwrites(a: SOp, b: SOp, granularity: str) -> bool:
    """Do writes a and b collide?  At attribute granularity (the default) they
    must share a written attribute; at tuple granularity any two writes on
    the same object do, as with row locks."""
    if granularity == "tuple":
        return True
    if granularity != "attribute":
        raise ValueError(f"unknown write granularity {granularity!r}")
    return bool(a.write_set & b.write_set)


def exhibits_dirty_write(s: MVSchedule, t: str, granularity: str = "attribute") -> bool:
    for a in s.txn_ops(t):
        if not a.is_write:
            continue
        for b in s.writes_on(a.obj):
            if (b.txn != t and _overwrites(a, b, granularity)
                    and s.before(b.op_id, a.op_id) and s.before(a.op_id, s.commit(b.txn))):
                return True
    return False


def exhibits_concurrent_write(s: MVSchedule, t: str, granularity: str = "attribute") -> bool:
    first = s.first(t)
    for a in s.txn_ops(t):
        if not a.is_write:
            continue
        for b in s.writes_on(a.obj):
            if (b.txn != t and _overwrites(a, b, granularity)
                    and s.before(b.op_id, a.op_id) and s.before(first, s.commit(b.txn))):
                return True
    return False


def _rw_between(s: MVSchedule, deps: Sequence[DependencyEdge]) -> set[tuple[str, str]]:
    return {(s.ops[e.from_op].txn, s.ops[e.to_op].txn) for e in deps if e.kind == "rw"}


def dangerous_structures(s: MVSchedule, among: Optional[Iterable[str]] = None) -> list[tuple[str, str, str]]:
    """Triples T1 -> T2 -> T3 (T1 = T3 allowed) restricted to ``among``."""
    txns = list(among) if among is not None else s.transactions
    rw = _rw_between(s, dependencies(s))
    found = []
    for t1, t2, t3 in itertools.product(txns, repeat=3):
        if (t1, t2) not in rw or (t2, t3) not in rw:
            continue
        if not (concurrent(s, t1, t2) and concurrent(s, t2, t3)):
            continue
        c1, c2, c3 = s.commit(t1), s.commit(t2), s.commit(t3)
        if not (s.pos(c3) <= s.pos(c1) and s.before(c3, c2)):
            continue
        if s.is_read_only(t1) and not s.before(c3, s.first(t1)):
            continue
        found.append((t1, t2, t3))
    return found


def violations(s: MVSchedule, allocation: Mapping[str, IsolationLevel],
               granularity: str = "attribute") -> list[str]:
    """Human-readable reasons why ``s`` is not allowed (empty: allowed)."""
    return list(_violations(s, allocation, granularity))


def _violations(s: MVSchedule, allocation: Mapping[str, IsolationLevel], granularity: str):
    for t in s.transactions:
        level = allocation[t]
        first = s.first(t)
        for a in s.txn_ops(t):
            if a.is_write and not respects_commit_order(s, a):
                yield f"{a.op_id} does not respect the commit order"
            if a.is_read and not read_last_committed(s, a, a.op_id if level == RC else first):
                yield f"{a.op_id} is not read-last-committed under {level.name}"
        if level == RC and exhibits_dirty_write(s, t, granularity):
            yield f"{t} exhibits a dirty write"
        if level != RC and exhibits_concurrent_write(s, t, granularity):
            yield f"{t} exhibits a concurrent write"
    ssi = [t for t in s.transactions if allocation[t] == SSI]
    for d in dangerous_structures(s, ssi):
        yield "dangerous structure " + " -> ".join(d)


def allowed_under(s: MVSchedule, allocation: Mapping[str, IsolationLevel],
                  granularity: str = "attribute") -> bool:
    return next(_violations(s, allocation, granularity), None) is None


def to_json(s: MVSchedule) -> dict:
    return {
        "operations": [
            {"id": o.op_id, "txn": o.txn, "kind": o.kind, "object": o.obj,
             **({"read_set": sorted(o.read_set)} if o.kind in ("R", "U") else {}),
             **({"write_set": sorted(o.write_set)} if o.kind in ("W", "U") else {})}
            for o in (s.ops[i] for i in s.order)],
        "version_order": {k: list(v) for k, v in sorted(s.version_order.items())},
        "version_function": dict(sorted(s.version_fn.items())),
    }


def from_json(data: Mapping) -> MVSchedule:
    ops = {}
    order = []
    for d in data["operations"]:
        o = op(d["id"], d["txn"], d["kind"], d.get("object"), d.get("read_set"), d.get("write_set"))
        if o.op_id in ops:
            raise ValueError(f"duplicate operation id {o.op_id}")
        ops[o.op_id] = o
        order.append(o.op_id)
    s = MVSchedule(ops, order, {k: list(v) for k, v in data["version_order"].items()},
                   dict(data["version_function"]))
    s.check_well_formed()
    return s
