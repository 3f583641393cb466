import pytest

from isorobust import dsl
from isorobust.conflicts import (
    OccurrenceNotInSequence,
    Quadruple,
    all_quadruples,
    connectedness,
    is_cyclic_sequence,
    potential_conflict,
    variables_connected_in_sequence,
)


def _ops(smallbank):
    bal, ts, wc = (smallbank.template(n) for n in ("Bal", "TS", "WC"))
    return bal, ts, wc


def test_potential_conflict_kinds(smallbank):
    bal, ts, wc = _ops(smallbank)
    k = potential_conflict(bal.op("o2"), ts.op("o2"))
    assert k.rw and not k.wr and not k.ww and k.kinds() == ("rw",)
    k = potential_conflict(ts.op("o2"), wc.op("o2"))
    assert k.wr and not k.rw and not k.ww
    assert potential_conflict(ts.op("o2"), ts.op("o2")).kinds() == ("ww", "wr", "rw")
    # different relations, or overlapping only on untouched attributes
    assert not potential_conflict(bal.op("o2"), wc.op("o4"))
    assert not potential_conflict(bal.op("o1"), bal.op("o1"))


def test_attribute_disjoint_writes_do_not_conflict():
    m = dsl.parse("relation R(a, b)\ntemplate T {\n W X:R {a}\n}\ntemplate U {\n W X:R {b}\n R Y:R {b}\n}\n")
    t, u = m.templates
    assert not potential_conflict(t.op("o1"), u.op("o1"))
    assert not potential_conflict(t.op("o1"), u.op("o2"))


def test_all_quadruples_only_conflicting(smallbank):
    quads = all_quadruples(smallbank.templates)
    assert quads and all(q.kind for q in quads)
    assert len(set(quads)) == len(quads)


def _c1(smallbank):
    bal, ts, wc = _ops(smallbank)
    return [Quadruple(bal, bal.op("o2"), ts.op("o2"), ts),
            Quadruple(ts, ts.op("o2"), wc.op("o2"), wc),
            Quadruple(wc, wc.op("o4"), bal.op("o3"), bal)]


def test_connectedness_and_cycles(smallbank):
    seq = _c1(smallbank)
    assert is_cyclic_sequence(seq)
    assert not is_cyclic_sequence(seq[:2])
    assert variables_connected_in_sequence(seq, (0, "Y"), (1, "Y"))
    assert variables_connected_in_sequence(seq, (0, "Y"), (2, "Y"))
    assert variables_connected_in_sequence(seq, (2, "Z"), (0, "Z"))
    assert not variables_connected_in_sequence(seq, (0, "Y"), (0, "Z"))
    assert not variables_connected_in_sequence(seq, (0, "X"), (1, "X"))
    uf = connectedness(seq)
    assert uf[(0, "Y")] == uf[(2, "Y")]
    with pytest.raises(OccurrenceNotInSequence):
        variables_connected_in_sequence(seq, (0, "Y1"), (1, "Y"))
    assert "TS" in str(seq[0])
