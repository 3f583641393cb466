"""Template robustness against a mixed RC/SI/SSI allocation.

The decision procedure enumerates a split point ``(τ1, o1, p1)`` and a
connectedness hypothesis ``h`` (1: var(o1) and var(p1) end up connected,
2: they do not), builds a labelled conflict graph over all template
operations, and asks whether a cycle of potentially conflicting quadruples
can be closed through it without violating the conditions under which a
split schedule exists.

Graph nodes are ``(template, op, label, dir)`` with label O/P/N recording
whether the operation's variable is connected to var(o1), var(p1) or
neither, and dir saying whether the operation is entered (in) or left (out)
by the cycle.  Everything is stored as numpy boolean matrices over a global
operation numbering, so reachability between any two endpoint operations is
a table lookup once the closure is known.
"""

from __future__ import annotations

import functools
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conflicts import Quadruple, potential_conflict
from .model import RC, SSI, IsolationLevel, Model, Operation, Template

LABELS = ("O", "P", "N")
_O, _P, _N = 0, 1, 2
_IN, _OUT = 0, 1

# in -> out label transitions between different variables of one template
_CROSS_VAR = {(_O, _P), (_O, _N), (_N, _N), (_N, _P)}


class InternalInconsistency(RuntimeError):
    """A firing combination produced a sequence that fails exact re-validation."""


@dataclass(frozen=True)
class GraphNode:
    template: Template
    op: Operation
    label: str
    dir: str

    def __str__(self) -> str:
        return f"({self.template.short_name}, {self.op}, {self.label}, {self.dir})"


class _Index:
    """Global operation numbering plus conflict matrices for a template set."""

    def __init__(self, templates: Sequence[Template]):
        self.templates = tuple(templates)
        self.ops: list[tuple[int, Operation]] = [
            (ti, op) for ti, t in enumerate(self.templates) for op in t.operations]
        self.gid = {(ti, op.op_id): g for g, (ti, op) in enumerate(self.ops)}
        self.tpl = np.array([ti for ti, _ in self.ops], dtype=int)
        self.pos = [self.templates[ti].position(op) for ti, op in self.ops]
        self.var = [op.var.name for _, op in self.ops]
        self.ops_of = [[g for g, (ti, _) in enumerate(self.ops) if ti == t] for t in range(len(self.templates))]
        n = len(self.ops)
        self.ww = np.zeros((n, n), dtype=bool)
        self.wr = np.zeros((n, n), dtype=bool)
        self.rw = np.zeros((n, n), dtype=bool)
        for a, (_, o) in enumerate(self.ops):
            for b, (_, p) in enumerate(self.ops):
                k = potential_conflict(o, p)
                self.ww[a, b], self.wr[a, b], self.rw[a, b] = k.ww, k.wr, k.rw
        self.conf = self.ww | self.wr | self.rw
        same_t = self.tpl[:, None] == self.tpl[None, :]
        var_arr = np.array(self.var, dtype=object)
        self.same_var = same_t & (var_arr[:, None] == var_arr[None, :])
        self.diff_var = same_t & ~self.same_var

    def __len__(self) -> int:
        return len(self.ops)

    def g(self, template: Template, op: Operation) -> int:
        return self.gid[(self.templates.index(template), op.op_id)]

    def conflicts_into(self, t1: int, var_names: Iterable[str]) -> np.ndarray:
        """Per operation g: some τ1 op over ``var_names`` conflicts with an op
        of g's template over var(g)."""
        var_names = set(var_names)
        src = [g for g in self.ops_of[t1] if self.var[g] in var_names]
        if not src:
            return np.zeros(len(self), dtype=bool)
        hit = self.conf[src].any(axis=0)
        return (self.same_var.astype(np.int32) @ hit.astype(np.int32)) > 0


def _node(g: int, c: int, k: int) -> int:
    return g * 6 + c * 2 + k


def _closure(adj: np.ndarray) -> np.ndarray:
    """Transitive (not reflexive) closure by repeated squaring."""
    reach = adj.copy()
    while True:
        r = reach.astype(np.float32)
        nxt = reach | ((r @ r) > 0)
        if np.array_equal(nxt, reach):
            return reach
        reach = nxt


class PtConflictGraph:
    """Labelled conflict graph for one ``(o1, p1, τ1, h)``.

    Nodes that violate the O/P admission rule are kept in the numbering but
    have no edges and report ``valid[node] = False``.
    """

    def __init__(self, index: _Index, t1: int, o1: Operation, p1: Operation, h: int):
        if h not in (1, 2):
            raise ValueError("h must be 1 or 2")
        if h == 2 and o1.var.name == p1.var.name:
            raise ValueError("h = 2 requires var(o1) != var(p1)")
        self.index = index
        self.t1 = t1
        self.tau1 = index.templates[t1]
        self.o1, self.p1, self.h = o1, p1, h
        self._build()

    def _build(self) -> None:
        ix = self.index
        n = len(ix)
        ok = np.ones((n, 3), dtype=bool)
        ok[:, _O] = ~ix.conflicts_into(self.t1, [self.o1.var.name])
        ok[:, _P] = ~ix.conflicts_into(self.t1, [self.p1.var.name])
        self.valid = np.repeat(ok, 2, axis=1).reshape(-1)

        adj = np.zeros((6 * n, 6 * n), dtype=bool)
        for c in range(3):
            # out -> in between potentially conflicting operations, same label
            adj[c * 2 + _OUT::6, c * 2 + _IN::6] = ix.conf
        for c in range(3):
            for c2 in range(3):
                block = np.zeros((n, n), dtype=bool)
                if (c, c2) in _CROSS_VAR:
                    block |= ix.diff_var
                if c == c2 or (self.h == 1 and (c, c2) == (_O, _P)):
                    block |= ix.same_var
                adj[c * 2 + _IN::6, c2 * 2 + _OUT::6] = block
        adj &= self.valid[:, None] & self.valid[None, :]
        self.adjacency = adj
        self._closure: Optional[np.ndarray] = None
        self._through: dict[tuple[int, int], np.ndarray] = {}

    @property
    def closure(self) -> np.ndarray:
        if self._closure is None:
            self._closure = _closure(self.adjacency)
        return self._closure

    def through(self, c_in: int, c_out: int) -> np.ndarray:
        """Op-level matrix M[a, b]: a conflicts with some in-node labelled
        ``c_in`` that reaches an out-node labelled ``c_out`` conflicting with b."""
        key = (c_in, c_out)
        if key not in self._through:
            tc = self.closure[c_in * 2 + _IN::6, c_out * 2 + _OUT::6].astype(np.float32)
            conf = self.index.conf.astype(np.float32)
            self._through[key] = ((conf @ tc) @ conf) > 0
        return self._through[key]

    def node(self, i: int) -> GraphNode:
        g, rest = divmod(i, 6)
        c, k = divmod(rest, 2)
        ti, op = self.index.ops[g]
        return GraphNode(self.index.templates[ti], op, LABELS[c], ("in", "out")[k])

    @property
    def nodes(self) -> list[GraphNode]:
        return [self.node(i) for i in np.flatnonzero(self.valid)]

    def edges(self) -> list[tuple[GraphNode, GraphNode]]:
        return [(self.node(a), self.node(b)) for a, b in zip(*np.nonzero(self.adjacency))]

    def has_edge(self, a: GraphNode, b: GraphNode) -> bool:
        return bool(self.adjacency[self._nid(a), self._nid(b)])

    def reaches(self, a: GraphNode, b: GraphNode) -> bool:
        return bool(self.closure[self._nid(a), self._nid(b)])

    def _nid(self, n: GraphNode) -> int:
        g = self.index.g(n.template, n.op)
        return _node(g, LABELS.index(n.label), 0 if n.dir == "in" else 1)


@functools.lru_cache(maxsize=64)
def _index_for(templates: tuple[Template, ...]) -> _Index:
    return _Index(templates)


def _templates_of(model_or_templates) -> tuple[Template, ...]:
    if isinstance(model_or_templates, Model):
        return model_or_templates.templates
    return tuple(model_or_templates)


def build_pt_conflict_graph(o1: Operation, p1: Operation, tau1: Template, h: int,
                            templates) -> PtConflictGraph:
    templates = _templates_of(templates)
    index = _index_for(templates)
    return PtConflictGraph(index, templates.index(tau1), o1, p1, h)


def _label(c) -> int:
    return LABELS.index(c) if isinstance(c, str) else c


def reachable(tau2: Template, o2: Operation, p2: Operation, c_o2,
              taun: Template, on: Operation, pn: Operation, c_pn,
              h: int, closure: PtConflictGraph) -> bool:
    """Can a cycle leaving τ2 at o2 re-enter τn at pn with the given labels?"""
    c_o2, c_pn = _label(c_o2), _label(c_pn)
    ix = closure.index
    # n = 2: τ2 and τn are the same occurrence
    if tau2 == taun and o2.op_id == on.op_id and p2.op_id == pn.op_id:
        if (c_o2, c_pn) == (_P, _O) or (h == 1 and (c_o2, c_pn) == (_O, _P)):
            return True
    g2, gn = ix.g(tau2, o2), ix.g(taun, pn)
    # n = 3: o2 feeds pn directly
    if ix.conf[g2, gn]:
        if c_o2 == c_pn or (h == 1 and (c_o2, c_pn) == (_O, _P)):
            return True
    return bool(closure.through(c_o2, c_pn)[g2, gn])


def _near(v: str, a: str, b: str, h: int) -> bool:
    """V ~ a: V is var a itself, or (h = 1) the other endpoint variable b."""
    return v == a or (h == 1 and v == b)


def _connected_tau2(v: str, x: str, o1: Operation, p1: Operation,
                    o2: Operation, p2: Operation, c_o2: int, h: int) -> bool:
    vo, vp = o1.var.name, p1.var.name
    if x == p2.var.name and _near(v, vo, vp, h):
        return True
    if x == o2.var.name:
        if c_o2 == _O:
            return _near(v, vo, vp, h)
        if c_o2 == _P:
            return _near(v, vp, vo, h)
    return False


def _connected_taun(v: str, x: str, o1: Operation, p1: Operation,
                    on: Operation, pn: Operation, c_pn: int, h: int) -> bool:
    vo, vp = o1.var.name, p1.var.name
    if x == on.var.name and _near(v, vp, vo, h):
        return True
    if x == pn.var.name:
        if c_pn == _O:
            return _near(v, vo, vp, h)
        if c_pn == _P:
            return _near(v, vp, vo, h)
    return False


def valid_schedule(tau1: Template, o1: Operation, p1: Operation,
                   tau2: Template, o2: Operation, p2: Operation, c_o2,
                   taun: Template, on: Operation, pn: Operation, c_pn,
                   h: int, allocation: Mapping[str, IsolationLevel]) -> bool:
    c_o2, c_pn = _label(c_o2), _label(c_pn)
    a1, a2, an = allocation[tau1.name], allocation[tau2.name], allocation[taun.name]

    # numbering follows oracle.conditions; 4, 5, 6 need no connectedness
    if not potential_conflict(o1, p2).rw:
        return False
    if not potential_conflict(on, p1).rw:
        if a1 != RC or not tau1.position(o1) < tau1.position(p1):
            return False
    if a1 == a2 == an == SSI:
        return False

    def conn2(o: Operation, p: Operation) -> bool:
        return _connected_tau2(o.var.name, p.var.name, o1, p1, o2, p2, c_o2, h)

    def connn(o: Operation, p: Operation) -> bool:
        return _connected_taun(o.var.name, p.var.name, o1, p1, on, pn, c_pn, h)

    # 2 and 3: no ww-conflict from τ1 into τ2/τn over connected variables
    split = tau1.position(o1) + 1
    writers = tau1.operations if a1 != RC else tau1.operations[:split]
    for o in writers:
        if not o.is_write:
            continue
        for p in tau2.operations:
            if potential_conflict(o, p).ww and conn2(o, p):
                return False
        for p in taun.operations:
            if potential_conflict(o, p).ww and connn(o, p):
                return False
    # 7
    if a1 == SSI and a2 == SSI:
        for o in tau1.operations:
            for p in tau2.operations:
                if potential_conflict(o, p).wr and conn2(o, p):
                    return False
    # 8
    if a1 == SSI and an == SSI:
        for o in tau1.operations:
            for p in taun.operations:
                if potential_conflict(o, p).rw and connn(o, p):
                    return False
    return True


@dataclass(frozen=True)
class Endpoints:
    """One firing combination of the decision loop."""

    tau1: Template
    o1: Operation
    p1: Operation
    h: int
    tau2: Template
    o2: Operation
    p2: Operation
    c_o2: str
    taun: Template
    on: Operation
    pn: Operation
    c_pn: str


@dataclass(frozen=True)
class WitnessSequence:
    quadruples: tuple[Quadruple, ...]
    h: int
    c_o2: str
    c_pn: str
    # per occurrence: variable name -> O/P/N under exact connectedness
    labels: tuple[tuple[tuple[str, str], ...], ...] = field(default=())

    def __len__(self) -> int:
        return len(self.quadruples)

    @property
    def tau1(self) -> Template:
        return self.quadruples[0].from_template

    @property
    def o1(self) -> Operation:
        return self.quadruples[0].out_op

    @property
    def p1(self) -> Operation:
        return self.quadruples[-1].in_op

    def templates(self) -> tuple[Template, ...]:
        return tuple(q.from_template for q in self.quadruples)


@dataclass(frozen=True)
class Verdict:
    robust: bool
    witness: Optional[WitnessSequence] = None
    endpoints: Optional[Endpoints] = None


def _sequence_for(graph: PtConflictGraph, e: Endpoints) -> list[Quadruple]:
    head = Quadruple(e.tau1, e.o1, e.p2, e.tau2)
    tail = Quadruple(e.taun, e.on, e.p1, e.tau1)
    c_o2, c_pn = _label(e.c_o2), _label(e.c_pn)
    if (e.tau2 == e.taun and e.o2.op_id == e.on.op_id and e.p2.op_id == e.pn.op_id
            and ((c_o2, c_pn) == (_P, _O) or (e.h == 1 and (c_o2, c_pn) == (_O, _P)))):
        return [head, tail]
    ix = graph.index
    g2, gn = ix.g(e.tau2, e.o2), ix.g(e.taun, e.pn)
    if ix.conf[g2, gn] and (c_o2 == c_pn or (e.h == 1 and (c_o2, c_pn) == (_O, _P))):
        return [head, Quadruple(e.tau2, e.o2, e.pn, e.taun), tail]

    # n > 3: shortest in -> ... -> out path, multi-source BFS in node order
    adj = graph.adjacency
    sources = [_node(g, c_o2, _IN) for g in np.flatnonzero(ix.conf[g2]) if graph.valid[_node(g, c_o2, _IN)]]
    targets = {_node(g, c_pn, _OUT) for g in np.flatnonzero(ix.conf[:, gn])}
    parent = {s: None for s in sources}
    queue = deque(sources)
    found = None
    while queue and found is None:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v in parent:
                continue
            parent[v] = u
            if v in targets:
                found = v
                break
            queue.append(v)
    if found is None:
        raise InternalInconsistency("closure reports reachability but no path exists")
    path = []
    v = found
    while v is not None:
        path.append(v)
        v = parent[v]
    path.reverse()
    mids = [(graph.node(path[i]), graph.node(path[i + 1])) for i in range(0, len(path), 2)]
    seq = [head]
    prev_t, prev_o = e.tau2, e.o2
    for nin, nout in mids:
        seq.append(Quadruple(prev_t, prev_o, nin.op, nin.template))
        prev_t, prev_o = nout.template, nout.op
    seq.append(Quadruple(prev_t, prev_o, e.pn, e.taun))
    seq.append(tail)
    return seq


def extract_witness(graph: PtConflictGraph, endpoints: Endpoints,
                    allocation: Optional[Mapping[str, IsolationLevel]] = None) -> WitnessSequence:
    """Rebuild a concrete quadruple sequence for a firing combination.

    With ``allocation`` given, the sequence is re-checked against the exact
    split-schedule conditions and a failure raises InternalInconsistency.
    """
    from .oracle.conditions import check_conditions, occurrence_labels

    seq = _sequence_for(graph, endpoints)
    if allocation is not None:
        failed = check_conditions(seq, allocation)
        if failed:
            raise InternalInconsistency(
                f"witness {' '.join(map(str, seq))} violates condition(s) {failed}")
    return WitnessSequence(tuple(seq), endpoints.h, endpoints.c_o2, endpoints.c_pn,
                           occurrence_labels(seq))


class Checker:
    """Decision procedure bound to one template set; graphs are reused across
    allocations since they do not depend on isolation levels."""

    def __init__(self, templates):
        self.templates = _templates_of(templates)
        self.index = _index_for(self.templates)
        self._graphs: dict[tuple[int, str, str, int], PtConflictGraph] = {}

    def graph(self, t1: int, o1: Operation, p1: Operation, h: int) -> PtConflictGraph:
        key = (t1, o1.var.name, p1.var.name, h)
        g = self._graphs.get(key)
        if g is None:
            g = self._graphs[key] = PtConflictGraph(self.index, t1, o1, p1, h)
        return g

    def firings(self, allocation: Mapping[str, IsolationLevel]):
        """Yield every (graph, Endpoints) passing Reachable and ValidSchedule,
        in the decision loop's deterministic order."""
        ix = self.index
        ts = self.templates
        for t1, tau1 in enumerate(ts):
            a1 = allocation[tau1.name]
            for o1 in tau1.operations:
                go1 = ix.g(tau1, o1)
                for p1 in tau1.operations:
                    gp1 = ix.g(tau1, p1)
                    H = (1,) if o1.var.name == p1.var.name else (1, 2)
                    escape = a1 == RC and tau1.position(o1) < tau1.position(p1)
                    for h in H:
                        graph = None
                        for tau2 in ts:
                            for o2 in tau2.operations:
                                for p2 in tau2.operations:
                                    gp2 = ix.g(tau2, p2)
                                    if not ix.rw[go1, gp2]:
                                        continue
                                    c_o2s = (_O,) if o2.var.name == p2.var.name else (_N, _P)
                                    for taun in ts:
                                        if a1 == allocation[tau2.name] == allocation[taun.name] == SSI:
                                            continue
                                        for on in taun.operations:
                                            gon = ix.g(taun, on)
                                            if not ix.conf[gon, gp1]:
                                                continue
                                            if not ix.rw[gon, gp1] and not escape:
                                                continue
                                            for pn in taun.operations:
                                                c_pns = (_P,) if on.var.name == pn.var.name else (_N, _O)
                                                for c_o2 in c_o2s:
                                                    for c_pn in c_pns:
                                                        if graph is None:
                                                            graph = self.graph(t1, o1, p1, h)
                                                        if not reachable(tau2, o2, p2, c_o2, taun, on, pn, c_pn, h, graph):
                                                            continue
                                                        if not valid_schedule(tau1, o1, p1, tau2, o2, p2, c_o2,
                                                                              taun, on, pn, c_pn, h, allocation):
                                                            continue
                                                        yield graph, Endpoints(
                                                            tau1, o1, p1, h, tau2, o2, p2, LABELS[c_o2],
                                                            taun, on, pn, LABELS[c_pn])

    def check(self, allocation: Mapping[str, IsolationLevel], witness: bool = True) -> Verdict:
        for graph, e in self.firings(allocation):
            if not witness:
                return Verdict(False)
            return Verdict(False, extract_witness(graph, e, allocation), e)
        return Verdict(True)


@functools.lru_cache(maxsize=32)
def checker_for(templates: tuple[Template, ...]) -> Checker:
    return Checker(templates)


def is_robust(model, allocation: Mapping[str, IsolationLevel], witness: bool = True) -> Verdict:
    return checker_for(_templates_of(model)).check(allocation, witness)
