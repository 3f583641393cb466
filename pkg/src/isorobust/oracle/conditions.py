"""Direct evaluation of the split-schedule existence conditions on a concrete
quadruple sequence, using exact connectedness instead of labels."""

from __future__ import annotations

from collections.abc import Mapping, Sequence

from ..conflicts import Quadruple, connectedness, is_cyclic_sequence, potential_conflict
from ..model import RC, SSI, IsolationLevel


def occurrence_labels(seq: Sequence[Quadruple]) -> tuple[tuple[tuple[str, str], ...], ...]:
    uf = connectedness(seq)
    ro = uf[(0, seq[0].out_op.var.name)]
    rp = uf[(0, seq[-1].in_op.var.name)]
    out = []
    for k, q in enumerate(seq):
        row = []
        for v in q.from_template.variables():
            r = uf[(k, v.name)]
            row.append((v.name, "O" if r == ro else "P" if r == rp else "N"))
        out.append(tuple(row))
    return tuple(out)


def check_conditions(seq: Sequence[Quadruple], allocation: Mapping[str, IsolationLevel]) -> list[int]:
    """Numbers of the violated conditions (empty list: a split schedule exists).

    Writing τ1 for the template that is split at o1, τ2 and τn for its two
    neighbours in the cycle, and "connected" for connectedness in ``seq``:

    0. ``seq`` is a closed cycle of potentially conflicting quadruples;
    1. nothing in τ1 conflicts with a connected operation of τ3 .. τn-1;
    2. nothing in prefix(τ1, o1) ww-conflicts with a connected op of τ2 or τn;
    3. if τ1 is not RC, the same holds for postfix(τ1, o1);
    4. o1 is potentially rw-conflicting with p2;
    5. on is potentially rw-conflicting with p1, or τ1 is RC and o1 precedes p1;
    6. τ1, τ2 and τn are not all SSI;
    7. if τ1 and τ2 are SSI, nothing in τ1 wr-conflicts with a connected op of τ2;
    8. if τ1 and τn are SSI, nothing in τ1 rw-conflicts with a connected op of τn.
    """
    if not is_cyclic_sequence(seq) or not all(potential_conflict(q.out_op, q.in_op) for q in seq):
        return [0]
    n = len(seq)
    uf = connectedness(seq)
    tau1, o1, p1 = seq[0].from_template, seq[0].out_op, seq[-1].in_op
    p2, on = seq[0].in_op, seq[-1].out_op
    tau2, taun = seq[1].from_template, seq[-1].from_template
    a1, a2, an = allocation[tau1.name], allocation[tau2.name], allocation[taun.name]

    def conn(o, k, p) -> bool:
        return uf[(0, o.var.name)] == uf[(k, p.var.name)]

    failed = []
    if any(potential_conflict(o, p) and conn(o, k, p)
           for o in tau1.operations
           for k in range(2, n - 1)
           for p in seq[k].from_template.operations):
        failed.append(1)

    split = tau1.position(o1) + 1

    def ww_into_ends(ops) -> bool:
        return any(potential_conflict(o, p).ww and conn(o, k, p)
                   for o in ops
                   for k in {1, n - 1}
                   for p in seq[k].from_template.operations)

    if ww_into_ends(tau1.operations[:split]):
        failed.append(2)
    if a1 != RC and ww_into_ends(tau1.operations[split:]):
        failed.append(3)
    if not potential_conflict(o1, p2).rw:
        failed.append(4)
    if not (potential_conflict(on, p1).rw or (a1 == RC and tau1.position(o1) < tau1.position(p1))):
        failed.append(5)
    if a1 == a2 == an == SSI:
        failed.append(6)
    if a1 == SSI and a2 == SSI and any(
            potential_conflict(o, p).wr and conn(o, 1, p)
            for o in tau1.operations for p in tau2.operations):
        failed.append(7)
    if a1 == SSI and an == SSI and any(
            potential_conflict(o, p).rw and conn(o, n - 1, p)
            for o in tau1.operations for p in taun.operations):
        failed.append(8)
    return failed
