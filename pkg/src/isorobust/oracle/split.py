"""Canonical instantiation over the four-tuples-per-relation database, split
schedule construction, and brute-force counterexample search."""

from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import Optional

from ..conflicts import Quadruple, all_quadruples, connectedness
from ..model import RC, IsolationLevel, Model, Template
from .schedule import OP0, MVSchedule, SOp, allowed_under, is_conflict_serializable


class BoundTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class ConcreteTransaction:
    txn_id: str
    template: Template
    occurrence: int
    assignment: tuple[tuple[str, str], ...]  # variable -> "Relation:i"
    operations: tuple[SOp, ...]  # commit last


def tuple_name(relation: str, i: int) -> str:
    return f"{relation}:{i}"


def _as_sequence(witness) -> Sequence[Quadruple]:
    return witness.quadruples if hasattr(witness, "quadruples") else witness


def instantiate_canonical(witness) -> list[ConcreteTransaction]:
    seq = _as_sequence(witness)
    uf = connectedness(seq)
    ro = uf[(0, seq[0].out_op.var.name)]
    rp = uf[(0, seq[-1].in_op.var.name)]
    txns = []
    for k, q in enumerate(seq):
        t = q.from_template
        tid = f"T{k + 1}"
        mu = {}
        for v in t.variables():
            r = uf[(k, v.name)]
            i = 1 if r == ro else 2 if r == rp else (4 if k == 0 else 3)
            mu[v.name] = tuple_name(v.relation, i)
        ops = tuple(
            SOp(f"{tid}.{o.op_id}", tid, o.kind, mu[o.var.name], o.read_set, o.write_set)
            for o in t.operations) + (SOp(f"{tid}.C", tid, "C"),)
        txns.append(ConcreteTransaction(tid, t, k, tuple(mu.items()), ops))
    return txns


def canonical_allocation(witness, allocation: Mapping[str, IsolationLevel]) -> dict[str, IsolationLevel]:
    seq = _as_sequence(witness)
    return {f"T{k + 1}": allocation[q.from_template.name] for k, q in enumerate(seq)}


def build_split_schedule(witness, allocation: Mapping[str, IsolationLevel]) -> MVSchedule:
    """prefix(T1, o1) T2 ... Tn postfix(T1, o1), with version order equal to
    commit order and every read observing the last version committed before
    its anchor (the read itself under RC, the transaction start otherwise)."""
    seq = _as_sequence(witness)
    txns = instantiate_canonical(seq)
    levels = canonical_allocation(seq, allocation)
    t1 = txns[0]
    split = seq[0].from_template.position(seq[0].out_op) + 1
    order_ops = list(t1.operations[:split])
    for t in txns[1:]:
        order_ops.extend(t.operations)
    order_ops.extend(t1.operations[split:])

    ops = {o.op_id: o for o in order_ops}
    order = [o.op_id for o in order_ops]
    pos = {o: i for i, o in enumerate(order)}
    commit_pos = {t.txn_id: pos[f"{t.txn_id}.C"] for t in txns}
    first_pos = {t.txn_id: pos[t.operations[0].op_id] for t in txns}

    version_order: dict[str, list[str]] = {}
    for o in order_ops:
        if o.is_write:
            version_order.setdefault(o.obj, []).append(o.op_id)
    for obj, ws in version_order.items():
        ws.sort(key=lambda w: (commit_pos[ops[w].txn], pos[w]))

    version_fn = {}
    for o in order_ops:
        if not o.is_read:
            continue
        anchor = pos[o.op_id] if levels[o.txn] == RC else first_pos[o.txn]
        v = OP0
        for w in version_order.get(o.obj, []):
            if commit_pos[ops[w].txn] < anchor:
                v = w
        version_fn[o.op_id] = v
    return MVSchedule(ops, order, version_order, version_fn)


def sequences(model_or_templates, max_quadruples: int, min_quadruples: int = 2) -> Iterator[tuple[Quadruple, ...]]:
    """Every closed cycle of potentially conflicting quadruples with length
    in [min, max], in a deterministic order (by length, then lexicographic
    over the quadruple enumeration order)."""
    templates = model_or_templates.templates if isinstance(model_or_templates, Model) else tuple(model_or_templates)
    quads = all_quadruples(templates)
    leaving: dict[str, list[Quadruple]] = {}
    for q in quads:
        leaving.setdefault(q.from_template.name, []).append(q)

    def extend(prefix: list[Quadruple], n: int):
        if len(prefix) == n:
            if prefix[-1].to_template == prefix[0].from_template:
                yield tuple(prefix)
            return
        for q in leaving.get(prefix[-1].to_template.name, []):
            prefix.append(q)
            yield from extend(prefix, n)
            prefix.pop()

    for n in range(min_quadruples, max_quadruples + 1):
        for q in quads:
            yield from extend([q], n)


@dataclass(frozen=True)
class Counterexample:
    quadruples: tuple[Quadruple, ...]
    schedule: MVSchedule
    allocation: dict[str, IsolationLevel]


def is_counterexample(seq, allocation: Mapping[str, IsolationLevel]) -> Optional[Counterexample]:
    s = build_split_schedule(seq, allocation)
    canon = canonical_allocation(seq, allocation)
    if not is_conflict_serializable(s) and allowed_under(s, canon):
        return Counterexample(tuple(seq), s, canon)
    return None


def iter_counterexamples(model_or_templates, allocation: Mapping[str, IsolationLevel],
                         max_quadruples: int) -> Iterator[Counterexample]:
    if max_quadruples < 2:
        raise BoundTooSmall("a cycle needs at least two quadruples")
    for seq in sequences(model_or_templates, max_quadruples):
        ce = is_counterexample(seq, allocation)
        if ce is not None:
            yield ce


def bounded_counterexample_search(model_or_templates, allocation: Mapping[str, IsolationLevel],
                                  max_quadruples: int) -> Optional[Counterexample]:
    """First allowed, non-serializable split schedule within the bound, or
    None.  None only means nothing was found up to that length."""
    return next(iter_counterexamples(model_or_templates, allocation, max_quadruples), None)
