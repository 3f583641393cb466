"""JSON and tab-delimited reports.

Witnesses are written self-contained: the relations and templates they
mention travel with them, so a report can be replayed by the oracle without
the original template file.
"""

from __future__ import annotations

import json
from collections.abc import Mapping

from .checker import WitnessSequence
from .conflicts import Quadruple
from .model import Allocation, IsolationLevel, Model, Operation, Relation, Schema, Template, Variable, validate
from .oracle import conditions, schedule as sched

SCHEMA_VERSION = 1


class ReportError(ValueError):
    pass


def allocation_json(alloc: Mapping[str, IsolationLevel]) -> dict:
    return {k: IsolationLevel(v).name for k, v in alloc.items()}


def _op_json(op: Operation) -> dict:
    d = {"id": op.op_id, "kind": op.kind, "var": op.var.name, "type": op.var.relation}
    if op.kind in ("R", "U"):
        d["read_set"] = sorted(op.read_set)
    if op.kind in ("W", "U"):
        d["write_set"] = sorted(op.write_set)
    return d


def template_json(t: Template) -> dict:
    d = {"name": t.name, "operations": [_op_json(o) for o in t.operations]}
    if t.alias:
        d["alias"] = t.alias
    return d


def relation_json(r: Relation) -> dict:
    return {"name": r.name, "attributes": list(r.attributes), "read_only": sorted(r.read_only),
            "workload_read_only": r.workload_read_only}


def witness_json(w: WitnessSequence, model: Model) -> dict:
    templates = []
    for q in w.quadruples:
        for t in (q.from_template, q.to_template):
            if t not in templates:
                templates.append(t)
    rels = [r for r in model.schema.relations
            if any(o.var.relation == r.name for t in templates for o in t.operations)]
    return {
        "relations": [relation_json(r) for r in rels],
        "templates": [template_json(t) for t in templates],
        "quadruples": [[q.from_template.name, q.out_op.op_id, q.in_op.op_id, q.to_template.name]
                       for q in w.quadruples],
        "display": [str(q) for q in w.quadruples],
        "h": w.h,
        "c_o2": w.c_o2,
        "c_pn": w.c_pn,
        "labels": [dict(row) for row in w.labels],
    }


def witness_from_json(data: Mapping) -> tuple[WitnessSequence, Model]:
    try:
        rels = tuple(Relation(r["name"], tuple(r["attributes"]), frozenset(r.get("read_only", ())),
                              bool(r.get("workload_read_only", False))) for r in data["relations"])
        templates = []
        for t in data["templates"]:
            ops = tuple(Operation(o["id"], o["kind"], Variable(o["var"], o["type"]),
                                  frozenset(o.get("read_set", ())), frozenset(o.get("write_set", ())))
                        for o in t["operations"])
            templates.append(Template(t["name"], ops, t.get("alias")))
        model = validate(Schema(rels), templates)
        quads = tuple(Quadruple(model.template(a), model.template(a).op(o), model.template(b).op(p),
                                model.template(b)) for a, o, p, b in data["quadruples"])
        w = WitnessSequence(quads, int(data["h"]), data["c_o2"], data["c_pn"],
                            conditions.occurrence_labels(quads))
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportError(f"malformed witness: {exc}") from exc
    return w, model


def load_witness(text: str) -> tuple[WitnessSequence, Model, Allocation | None]:
    """Accept either a bare witness object or a ``check`` report."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportError(f"witness file is not JSON: {exc}") from exc
    alloc = None
    if "witness" in data:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ReportError(f"unsupported schema_version {data.get('schema_version')!r}")
        if data["witness"] is None:
            raise ReportError("report contains no witness (verdict was robust)")
        if "allocation" in data:
            alloc = Allocation((k, IsolationLevel.parse(v)) for k, v in data["allocation"].items())
        data = data["witness"]
    w, model = witness_from_json(data)
    return w, model, alloc


def dumps(payload: Mapping) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def schedule_json(s: sched.MVSchedule) -> dict:
    return sched.to_json(s)


def tsv(rows) -> str:
    return "".join("\t".join(str(c) for c in row) + "\n" for row in rows)
