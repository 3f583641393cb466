"""Lowest robust allocation."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from typing import Optional

from .checker import checker_for, _templates_of
from .model import RC, SI, SSI, Allocation, IsolationLevel


class NotRobustInput(ValueError):
    pass


def lowest_allocation(model, order: Optional[Iterable[str]] = None) -> Allocation:
    """Start from all-SSI and greedily lower each template to RC, else SI.

    ``order`` permutes the template iteration; the result does not depend on
    it, only the sequence of intermediate allocations does.
    """
    templates = _templates_of(model)
    checker = checker_for(templates)
    alloc = Allocation.uniform((t.name for t in templates), SSI)
    names = list(order) if order is not None else [t.name for t in templates]
    if sorted(names) != sorted(alloc):
        raise ValueError("iteration order must list every template exactly once")
    for name in names:
        for level in (RC, SI):
            candidate = alloc.updated(name, level)
            if checker.check(candidate, witness=False).robust:
                alloc = candidate
                break
    return alloc


def is_lowest(model, allocation: Mapping[str, IsolationLevel]) -> bool:
    checker = checker_for(_templates_of(model))
    allocation = Allocation(allocation)
    if not checker.check(allocation, witness=False).robust:
        raise NotRobustInput(f"{allocation.format()} is not robust")
    for name, level in allocation.items():
        for lower in IsolationLevel:
            if lower < level and checker.check(allocation.updated(name, lower), witness=False).robust:
                return False
    return True
