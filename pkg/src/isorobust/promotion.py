"""Read promotion: turning a read into an identity update, and tabulating the
lowest robust allocation for every subset of promotable reads."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .allocation import lowest_allocation
from .model import Allocation, Model, Operation, Template, validate


class NotPromotable(ValueError):
    pass


PromotionChoice = frozenset  # of (template name, op_id)


def _promotable(model: Model, op: Operation) -> bool:
    rel = model.schema[op.var.relation]
    return op.kind == "R" and not rel.workload_read_only and bool(op.read_set - rel.read_only)


def promotable_reads(model: Model) -> list[tuple[str, str]]:
    return [(t.name, op.op_id) for t in model.templates for op in t.operations if _promotable(model, op)]


def apply_promotion(model: Model, choice) -> Model:
    choice = frozenset(choice)
    remaining = set(choice)
    templates = []
    for t in model.templates:
        ops = []
        for op in t.operations:
            if (t.name, op.op_id) in choice:
                if not _promotable(model, op):
                    raise NotPromotable(f"{t.name} {op} cannot be promoted")
                rel = model.schema[op.var.relation]
                op = replace(op, kind="U", write_set=op.read_set - rel.read_only)
                remaining.discard((t.name, op.op_id))
            ops.append(op)
        templates.append(replace(t, operations=tuple(ops)))
    if remaining:
        raise NotPromotable(f"unknown operations in promotion choice: {sorted(remaining)}")
    return validate(model.schema, templates)


def choice_label(model: Model, choice) -> str:
    """'Bal: S,C, WC: C' style label (relation initials per template)."""
    if not choice:
        return "no promotion"
    parts = []
    for t in model.templates:
        initials = [op.var.relation[0] for op in t.operations if (t.name, op.op_id) in choice]
        if initials:
            parts.append(f"{t.short_name}: {','.join(initials)}")
    return ", ".join(parts)


@dataclass(frozen=True)
class PromotionRow:
    index: int
    choice: frozenset
    label: str
    allocation: Allocation
    group: str = ""


def subsets(candidates):
    for k in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, k):
            yield frozenset(combo)


def explore(model: Model) -> list[PromotionRow]:
    """One row per subset of promotable reads, in (size, lexicographic) order."""
    rows = []
    for i, choice in enumerate(subsets(promotable_reads(model)), start=1):
        alloc = lowest_allocation(apply_promotion(model, choice))
        rows.append(PromotionRow(i, choice, choice_label(model, choice), alloc))
    return rows


def group_rows(rows: list[PromotionRow]) -> list[PromotionRow]:
    """Letter distinct allocations A, B, ... by first appearance and sort
    rows by group, keeping enumeration order within a group."""
    allocs = []
    for r in rows:
        if r.allocation not in allocs:
            allocs.append(r.allocation)
    letters = {a: chr(ord("A") + i) for i, a in enumerate(allocs)}
    grouped = [replace(r, group=letters[r.allocation]) for r in rows]
    grouped.sort(key=lambda r: (r.group, r.index))
    return grouped
