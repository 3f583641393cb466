"""Potential conflicts between template operations and connectedness of
variables along a cyclic sequence of conflicting quadruples."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from networkx.utils import UnionFind

from .model import Operation, Template


@dataclass(frozen=True)
class ConflictKind:
    ww: bool = False
    wr: bool = False  # first writes, second reads
    rw: bool = False  # first reads, second writes

    def __bool__(self) -> bool:
        return self.ww or self.wr or self.rw

    def kinds(self) -> tuple[str, ...]:
        return tuple(k for k in ("ww", "wr", "rw") if getattr(self, k))


NO_CONFLICT = ConflictKind()


def potential_conflict(o: Operation, p: Operation) -> ConflictKind:
    if o.var.relation != p.var.relation:
        return NO_CONFLICT
    return ConflictKind(
        ww=bool(o.write_set & p.write_set),
        wr=bool(o.write_set & p.read_set),
        rw=bool(o.read_set & p.write_set),
    )


@dataclass(frozen=True)
class Quadruple:
    """(τi, o, p, τj): ``out_op`` of ``from_template`` conflicts with ``in_op``."""

    from_template: Template
    out_op: Operation
    in_op: Operation
    to_template: Template

    @property
    def kind(self) -> ConflictKind:
        return potential_conflict(self.out_op, self.in_op)

    def __str__(self) -> str:
        return (f"({self.from_template.short_name}, {self.out_op}, "
                f"{self.in_op}, {self.to_template.short_name})")


def all_quadruples(templates: Iterable[Template]) -> list[Quadruple]:
    templates = tuple(templates)
    out = []
    for ti in templates:
        for o in ti.operations:
            for tj in templates:
                for p in tj.operations:
                    if potential_conflict(o, p):
                        out.append(Quadruple(ti, o, p, tj))
    return out


class OccurrenceNotInSequence(KeyError):
    pass


# A variable occurrence is (position in the sequence, variable name); position
# k denotes the template occurrence that quadruple k leaves from.
Occurrence = tuple[int, str]


def connectedness(seq: Sequence[Quadruple]) -> UnionFind:
    """Union-find over all variable occurrences of ``seq``.

    Quadruple k links the outgoing variable of occurrence k to the incoming
    variable of occurrence k+1 (cyclically, so the last one returns to 0).
    """
    uf = UnionFind()
    n = len(seq)
    for k, q in enumerate(seq):
        for v in q.from_template.variables():
            uf[(k, v.name)]
    for k, q in enumerate(seq):
        uf.union((k, q.out_op.var.name), ((k + 1) % n, q.in_op.var.name))
    return uf


def _check_occurrence(seq: Sequence[Quadruple], occ: Occurrence) -> None:
    pos, var = occ
    if not 0 <= pos < len(seq) or var not in {v.name for v in seq[pos].from_template.variables()}:
        raise OccurrenceNotInSequence(f"variable occurrence {occ} not in sequence")


def variables_connected_in_sequence(seq: Sequence[Quadruple], v1: Occurrence, v2: Occurrence) -> bool:
    _check_occurrence(seq, v1)
    _check_occurrence(seq, v2)
    uf = connectedness(seq)
    return uf[v1] == uf[v2]


def is_cyclic_sequence(seq: Sequence[Quadruple]) -> bool:
    """Each quadruple enters the template the next one leaves from."""
    n = len(seq)
    return n >= 2 and all(seq[k].to_template == seq[(k + 1) % n].from_template for k in range(n))
