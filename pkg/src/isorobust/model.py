"""Relational schema, transaction templates and isolation-level allocations.

Everything downstream treats these objects as read-only values: they are
frozen dataclasses, hashable, and safe to share between worker processes.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from typing import Optional


class ModelError(ValueError):
    """Base class for schema/template validation failures.

    ``element`` names the offending relation, template or operation so the
    parser can map the failure back to a source line.
    """

    def __init__(self, message: str, element: tuple = ()):
        super().__init__(message)
        self.element = element
        self.line: Optional[int] = None

    def __str__(self) -> str:
        msg = super().__str__()
        return f"line {self.line}: {msg}" if self.line is not None else msg


class UnknownRelation(ModelError):
    pass


class AttributeNotInRelation(ModelError):
    pass


class WriteToReadOnlyAttribute(ModelError):
    pass


class DuplicateName(ModelError):
    pass


class InvalidOperation(ModelError):
    """Operation kind and attribute sets disagree (e.g. an R with a write set)."""


class ConflictingVariableType(ModelError):
    """The same variable is used with two relation types inside one template."""


class DomainMismatch(ValueError):
    pass


class IsolationLevel(enum.IntEnum):
    """PostgreSQL's multiversion levels, ordered RC < SI < SSI."""

    RC = 0
    SI = 1
    SSI = 2

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str) -> "IsolationLevel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown isolation level {text!r} (expected RC, SI or SSI)") from None


RC, SI, SSI = IsolationLevel.RC, IsolationLevel.SI, IsolationLevel.SSI


@dataclass(frozen=True)
class Relation:
    name: str
    attributes: tuple[str, ...]
    read_only: frozenset[str] = frozenset()
    workload_read_only: bool = False

    def order(self, attrs: Iterable[str]) -> tuple[str, ...]:
        """Attributes of ``attrs`` in declaration order."""
        attrs = set(attrs)
        return tuple(a for a in self.attributes if a in attrs)


@dataclass(frozen=True)
class Variable:
    name: str
    relation: str

    def __str__(self) -> str:
        return f"{self.name}:{self.relation}"


@dataclass(frozen=True)
class Operation:
    op_id: str
    kind: str  # "R", "W" or "U"
    var: Variable
    read_set: frozenset[str] = frozenset()
    write_set: frozenset[str] = frozenset()

    @property
    def is_read(self) -> bool:
        return self.kind in ("R", "U")

    @property
    def is_write(self) -> bool:
        return self.kind in ("W", "U")

    def describe(self, relation: Optional[Relation] = None) -> str:
        def fmt(s):
            items = relation.order(s) if relation is not None else sorted(s)
            return "{" + ",".join(items) + "}"

        sets = ""
        if self.kind in ("R", "U"):
            sets += fmt(self.read_set)
        if self.kind in ("W", "U"):
            sets += fmt(self.write_set)
        return f"{self.kind}[{self.var.name}:{self.var.relation}{sets}]"

    def __str__(self) -> str:
        return self.describe()


@dataclass(frozen=True)
class Template:
    name: str
    operations: tuple[Operation, ...]
    alias: Optional[str] = None

    @property
    def short_name(self) -> str:
        """Label used in reports, e.g. ``WC`` for WriteCheck."""
        if self.alias:
            return self.alias
        capitals = [c for c in self.name if c.isupper()]
        return "".join(capitals) if len(capitals) >= 2 else self.name

    def __len__(self) -> int:
        return len(self.operations)

    def __iter__(self) -> Iterator[Operation]:
        return iter(self.operations)

    def position(self, op: Operation) -> int:
        for i, o in enumerate(self.operations):
            if o.op_id == op.op_id:
                return i
        raise KeyError(f"{op.op_id} not in template {self.name}")

    def op(self, op_id: str) -> Operation:
        for o in self.operations:
            if o.op_id == op_id:
                return o
        raise KeyError(f"no operation {op_id!r} in template {self.name}")

    def prefix(self, op: Operation) -> tuple[Operation, ...]:
        """Operations up to and including ``op``."""
        return self.operations[: self.position(op) + 1]

    def postfix(self, op: Operation) -> tuple[Operation, ...]:
        """Operations strictly after ``op``."""
        return self.operations[self.position(op) + 1:]

    def variables(self) -> tuple[Variable, ...]:
        seen: dict[str, Variable] = {}
        for o in self.operations:
            seen.setdefault(o.var.name, o.var)
        return tuple(seen.values())

    def is_read_only(self) -> bool:
        return not any(o.is_write for o in self.operations)


@dataclass(frozen=True)
class Schema:
    relations: tuple[Relation, ...] = ()

    def __contains__(self, name: str) -> bool:
        return any(r.name == name for r in self.relations)

    def __getitem__(self, name: str) -> Relation:
        for r in self.relations:
            if r.name == name:
                return r
        raise UnknownRelation(f"unknown relation {name!r}", (name,))


@dataclass(frozen=True)
class Model:
    """A validated schema plus template set (declaration order is canonical)."""

    schema: Schema
    templates: tuple[Template, ...] = ()

    def template(self, name: str) -> Template:
        for t in self.templates:
            if t.name == name or t.alias == name:
                return t
        raise KeyError(f"unknown template {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.templates)

    def operation_count(self) -> int:
        return sum(len(t) for t in self.templates)


def validate(schema: Schema, templates: Iterable[Template]) -> Model:
    """Check every type invariant and return the immutable model."""
    templates = tuple(templates)
    rel_names: set[str] = set()
    for rel in schema.relations:
        if rel.name in rel_names:
            raise DuplicateName(f"duplicate relation {rel.name!r}", (rel.name,))
        rel_names.add(rel.name)
        if len(set(rel.attributes)) != len(rel.attributes):
            raise DuplicateName(f"duplicate attribute in relation {rel.name!r}", (rel.name,))
        extra = rel.read_only - set(rel.attributes)
        if extra:
            raise AttributeNotInRelation(
                f"read-only attribute(s) {sorted(extra)} not in relation {rel.name!r}", (rel.name,))

    tnames: set[str] = set()
    for t in templates:
        for n in {t.name, t.alias} - {None}:
            if n in tnames:
                raise DuplicateName(f"duplicate template name {n!r}", (t.name,))
            tnames.add(n)
        op_ids: set[str] = set()
        var_types: dict[str, str] = {}
        for op in t.operations:
            where = (t.name, op.op_id)
            if op.op_id in op_ids:
                raise DuplicateName(f"duplicate operation id {op.op_id!r} in {t.name}", where)
            op_ids.add(op.op_id)
            if op.kind not in ("R", "W", "U"):
                raise InvalidOperation(f"unknown operation kind {op.kind!r}", where)
            if op.kind == "R" and op.write_set:
                raise InvalidOperation(f"R operation in {t.name} has a write set", where)
            if op.kind == "W" and op.read_set:
                raise InvalidOperation(f"W operation in {t.name} has a read set", where)
            if op.var.relation not in rel_names:
                raise UnknownRelation(
                    f"variable {op.var.name} in {t.name} has unknown type {op.var.relation!r}", where)
            prev = var_types.setdefault(op.var.name, op.var.relation)
            if prev != op.var.relation:
                raise ConflictingVariableType(
                    f"variable {op.var.name} in {t.name} used as {prev} and {op.var.relation}", where)
            rel = schema[op.var.relation]
            missing = (op.read_set | op.write_set) - set(rel.attributes)
            if missing:
                raise AttributeNotInRelation(
                    f"attribute(s) {sorted(missing)} not in relation {rel.name} ({t.name} {op.op_id})", where)
            ro = op.write_set & rel.read_only
            if ro:
                raise WriteToReadOnlyAttribute(
                    f"{t.name} writes read-only attribute(s) {rel.order(ro)} of {rel.name}", where)
            if op.is_write and op.write_set and rel.workload_read_only:
                raise WriteToReadOnlyAttribute(
                    f"{t.name} writes relation {rel.name}, declared workload_readonly", where)
    return Model(schema, templates)


class Allocation(Mapping):
    """Total map template name -> IsolationLevel, kept in template order."""

    def __init__(self, levels: Mapping[str, IsolationLevel] | Iterable[tuple[str, IsolationLevel]] = ()):
        items = levels.items() if isinstance(levels, Mapping) else levels
        self._levels = {k: IsolationLevel(v) for k, v in items}

    @classmethod
    def uniform(cls, names: Iterable[str], level: IsolationLevel) -> "Allocation":
        return cls((n, level) for n in names)

    def __getitem__(self, name: str) -> IsolationLevel:
        return self._levels[name]

    def __iter__(self):
        return iter(self._levels)

    def __len__(self) -> int:
        return len(self._levels)

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._levels.items())))

    def __repr__(self) -> str:
        return f"Allocation({self.format()})"

    def updated(self, name: str, level: IsolationLevel) -> "Allocation":
        """Copy with ``name`` mapped to ``level`` (the A[τ ↦ I] notation)."""
        if name not in self._levels:
            raise KeyError(name)
        new = dict(self._levels)
        new[name] = IsolationLevel(level)
        return Allocation(new)

    def format(self) -> str:
        return ",".join(f"{k}={v.name}" for k, v in self._levels.items())


def _check_domain(a1: Allocation, a2: Allocation) -> None:
    if set(a1) != set(a2):
        raise DomainMismatch(f"allocations over different templates: {sorted(a1)} vs {sorted(a2)}")


def allocation_leq(a1: Allocation, a2: Allocation) -> bool:
    _check_domain(a1, a2)
    return all(a1[t] <= a2[t] for t in a1)


def allocation_lt(a1: Allocation, a2: Allocation) -> bool:
    return allocation_leq(a1, a2) and any(a1[t] < a2[t] for t in a1)


def parse_allocation(text: str, model: Model, default: IsolationLevel = SSI) -> Allocation:
    """Parse ``Name=LEVEL,...``; unnamed templates get ``default``.

    Template aliases are accepted as names, and ``*=LEVEL`` sets the default.
    """
    levels: dict[str, IsolationLevel] = {}
    text = text.strip()
    if text:
        for part in text.split(","):
            if "=" not in part:
                raise ValueError(f"malformed allocation entry {part!r} (expected Name=LEVEL)")
            name, _, lvl = part.partition("=")
            name = name.strip()
            level = IsolationLevel.parse(lvl)
            if name == "*":
                default = level
                continue
            try:
                t = model.template(name)
            except KeyError:
                raise ValueError(f"allocation names unknown template {name!r}") from None
            if t.name in levels:
                raise ValueError(f"template {t.name!r} allocated twice")
            levels[t.name] = level
    return Allocation((t.name, levels.get(t.name, default)) for t in model.templates)
