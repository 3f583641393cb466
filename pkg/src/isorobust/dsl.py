"""Line-oriented template language.

    # comment
    relation Account(N readonly, C readonly) workload_readonly
    relation Savings(C readonly, B)

    template Balance as Bal {
        R X:Account {N,C}
        R Y:Savings {C,B}
    }

``R`` takes a read set, ``W`` a write set and ``U`` a read set followed by a
write set.  Operations may share a line with the braces, separated by ``;``.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Optional

from .model import (
    Model,
    ModelError,
    Operation,
    Relation,
    Schema,
    Template,
    Variable,
    validate,
)


class DSLSyntaxError(ModelError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_RELATION = re.compile(rf"^relation\s+({_IDENT})\s*\((.*)\)\s*(workload_readonly)?\s*$")
_TEMPLATE = re.compile(rf"^template\s+({_IDENT})(?:\s+as\s+({_IDENT}))?\s*\{{\s*(.*)$")
_OP = re.compile(rf"^([RWU])\s+({_IDENT})\s*:\s*({_IDENT})\s*((?:\{{[^}}]*\}}\s*)*)$")
_SET = re.compile(r"\{([^}]*)\}")


def _attr_set(body: str, lineno: int) -> frozenset[str]:
    names = [a.strip() for a in body.split(",") if a.strip()]
    for a in names:
        if not re.fullmatch(_IDENT, a):
            raise DSLSyntaxError(f"bad attribute name {a!r}", lineno)
    return frozenset(names)


def _parse_op(text: str, index: int, lineno: int) -> Operation:
    m = _OP.match(text)
    if not m:
        raise DSLSyntaxError(f"cannot parse operation {text!r}", lineno)
    kind, var, rel, sets = m.groups()
    parsed = [_attr_set(s, lineno) for s in _SET.findall(sets)]
    expected = 2 if kind == "U" else 1
    if len(parsed) != expected:
        raise DSLSyntaxError(
            f"{kind} operation expects {expected} attribute set(s), got {len(parsed)}", lineno)
    read_set = parsed[0] if kind in ("R", "U") else frozenset()
    write_set = parsed[-1] if kind in ("W", "U") else frozenset()
    return Operation(f"o{index}", kind, Variable(var, rel), read_set, write_set)


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse(text: str) -> Model:
    """Parse and validate DSL source; errors carry 1-based line numbers."""
    relations: list[Relation] = []
    templates: list[Template] = []
    rel_lines: dict[str, int] = {}
    op_lines: dict[tuple[str, str], int] = {}
    tpl_lines: dict[str, int] = {}

    current: Optional[tuple[str, Optional[str], list[Operation]]] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if current is None:
            if line.startswith("relation"):
                m = _RELATION.match(line)
                if not m:
                    raise DSLSyntaxError(f"cannot parse relation declaration {line!r}", lineno)
                name, body, wro = m.groups()
                attrs, ro = [], set()
                for part in body.split(","):
                    words = part.split()
                    if not words:
                        raise DSLSyntaxError(f"empty attribute in relation {name}", lineno)
                    if len(words) > 2 or (len(words) == 2 and words[1] != "readonly"):
                        raise DSLSyntaxError(f"bad attribute declaration {part.strip()!r}", lineno)
                    attrs.append(words[0])
                    if len(words) == 2:
                        ro.add(words[0])
                relations.append(Relation(name, tuple(attrs), frozenset(ro), wro is not None))
                rel_lines.setdefault(name, lineno)
                continue
            m = _TEMPLATE.match(line)
            if not m:
                raise DSLSyntaxError(f"expected 'relation' or 'template', got {line!r}", lineno)
            name, alias, rest = m.groups()
            current = (name, alias, [])
            tpl_lines.setdefault(name, lineno)
            line = rest.strip()
            if not line:
                continue
        # one unmatched brace closes the template
        closing = line.endswith("}") and line.count("}") > line.count("{")
        if closing:
            line = line[:-1].strip()
        for chunk in filter(None, (c.strip() for c in line.split(";"))):
            ops = current[2]
            op = _parse_op(chunk, len(ops) + 1, lineno)
            ops.append(op)
            op_lines[(current[0], op.op_id)] = lineno
        if closing:
            templates.append(Template(current[0], tuple(current[2]), current[1]))
            current = None
    if current is not None:
        raise DSLSyntaxError(f"template {current[0]} is missing its closing brace", tpl_lines[current[0]])

    try:
        return validate(Schema(tuple(relations)), templates)
    except ModelError as exc:
        el = exc.element
        if len(el) == 2:
            exc.line = op_lines.get(el, tpl_lines.get(el[0]))
        elif len(el) == 1:
            exc.line = tpl_lines.get(el[0], rel_lines.get(el[0]))
        raise


def load(path: str | Path) -> Model:
    """Load a template file; ``builtin:NAME`` refers to a bundled workload."""
    path = str(path)
    if path.startswith("builtin:"):
        return parse(builtin_source(path.split(":", 1)[1]))
    return parse(Path(path).read_text(encoding="utf-8"))


def builtin_source(name: str) -> str:
    res = resources.files("isorobust") / "data" / f"{name}.tdsl"
    if not res.is_file():
        raise FileNotFoundError(f"no bundled workload named {name!r}")
    return res.read_text(encoding="utf-8")


def smallbank() -> Model:
    return parse(builtin_source("smallbank"))


def serialize(model: Model) -> str:
    out = []
    for rel in model.schema.relations:
        attrs = ", ".join(a + (" readonly" if a in rel.read_only else "") for a in rel.attributes)
        out.append(f"relation {rel.name}({attrs})" + (" workload_readonly" if rel.workload_read_only else ""))
    for t in model.templates:
        out.append("")
        out.append(f"template {t.name}" + (f" as {t.alias}" if t.alias else "") + " {")
        for op in t.operations:
            rel = model.schema[op.var.relation]
            sets = []
            if op.kind in ("R", "U"):
                sets.append("{" + ",".join(rel.order(op.read_set)) + "}")
            if op.kind in ("W", "U"):
                sets.append("{" + ",".join(rel.order(op.write_set)) + "}")
            out.append(f"    {op.kind} {op.var.name}:{op.var.relation} {' '.join(sets)}")
        out.append("}")
    return "\n".join(out) + "\n"
