import pytest

from conftest import fixture_schedule, load_fixture
from isorobust.conflicts import Quadruple
from isorobust.model import RC, SI, SSI, parse_allocation
from isorobust.oracle import (
    OP0,
    BoundTooSmall,
    MVSchedule,
    allowed_under,
    bounded_counterexample_search,
    build_split_schedule,
    canonical_allocation,
    concurrent,
    exhibits_concurrent_write,
    exhibits_dirty_write,
    from_json,
    instantiate_canonical,
    is_conflict_serializable,
    iter_counterexamples,
    read_last_committed,
    sequences,
    to_json,
    violations,
)
from isorobust.oracle.schedule import op


def _schedule(ops, version_order, version_fn):
    s = MVSchedule({o.op_id: o for o in ops}, [o.op_id for o in ops], version_order, version_fn)
    s.check_well_formed()
    return s


def test_concurrency_and_read_last_committed():
    s = fixture_schedule("four_transactions")
    assert concurrent(s, "T1", "T2") and concurrent(s, "T1", "T4")
    assert not concurrent(s, "T1", "T3")
    for a, b in (("T2", "T3"), ("T2", "T4"), ("T3", "T4")):
        assert concurrent(s, a, b)
    r4v, r2v = s.ops["R4v"], s.ops["R2v"]
    assert read_last_committed(s, r4v, "R4v")
    assert not read_last_committed(s, r4v, s.first("T4"))
    assert read_last_committed(s, r2v, s.first("T2"))
    assert not read_last_committed(s, r2v, "R2v")
    assert exhibits_concurrent_write(s, "T4")
    assert not any(exhibits_dirty_write(s, t) for t in s.transactions)


def test_dirty_write_and_granularity():
    ops = [op("W1a", "T1", "W", "x", write_set={"a"}), op("W2b", "T2", "W", "x", write_set={"b"}),
           op("C1", "T1", "C"), op("C2", "T2", "C")]
    s = _schedule(ops, {"x": ["W1a", "W2b"]}, {})
    assert not exhibits_dirty_write(s, "T2")
    assert exhibits_dirty_write(s, "T2", granularity="tuple")
    assert allowed_under(s, {"T1": RC, "T2": RC})
    assert not allowed_under(s, {"T1": RC, "T2": RC}, granularity="tuple")
    assert not allowed_under(s, {"T1": SI, "T2": SI}, granularity="tuple")
    with pytest.raises(ValueError):
        exhibits_dirty_write(s, "T2", granularity="page")


def test_version_order_must_follow_commits():
    ops = [op("W1", "T1", "W", "x"), op("W2", "T2", "W", "x"), op("C2", "T2", "C"), op("C1", "T1", "C")]
    s = _schedule(ops, {"x": ["W1", "W2"]}, {})
    assert any("commit order" in v for v in violations(s, {"T1": RC, "T2": RC}))


def test_serializable_schedule():
    ops = [op("R1", "T1", "R", "x"), op("C1", "T1", "C"), op("W2", "T2", "W", "x"), op("C2", "T2", "C")]
    s = _schedule(ops, {"x": ["W2"]}, {"R1": OP0})
    assert is_conflict_serializable(s)
    assert allowed_under(s, {"T1": SSI, "T2": SSI})


def test_json_round_trip_and_validation():
    data = load_fixture("four_transactions")["schedule"]
    s = from_json(data)
    assert to_json(s)["operations"][0]["id"] == "U2t"
    assert from_json(to_json(s)).order == s.order
    broken = dict(data, version_function={**data["version_function"], "R4v": "W4t"})
    with pytest.raises(ValueError):
        from_json(broken)
    missing = dict(data, version_order={"t": ["U2t"], "v": ["U3v"]})
    with pytest.raises(ValueError):
        from_json(missing)


def _c1(smallbank):
    bal, ts, wc = (smallbank.template(n) for n in ("Bal", "TS", "WC"))
    return (Quadruple(bal, bal.op("o2"), ts.op("o2"), ts),
            Quadruple(ts, ts.op("o2"), wc.op("o2"), wc),
            Quadruple(wc, wc.op("o4"), bal.op("o3"), bal))


def test_canonical_instantiation(smallbank):
    txns = instantiate_canonical(_c1(smallbank))
    assert [t.txn_id for t in txns] == ["T1", "T2", "T3"]
    assert dict(txns[0].assignment) == {"X": "Account:4", "Y": "Savings:1", "Z": "Checking:2"}
    assert dict(txns[1].assignment) == {"X": "Account:3", "Y": "Savings:1"}
    assert dict(txns[2].assignment) == {"X": "Account:3", "Y": "Savings:1", "Z": "Checking:2"}
    assert txns[0].operations[-1].kind == "C"


def test_split_schedule_depends_on_allocation(smallbank):
    seq = _c1(smallbank)
    rc = parse_allocation("Bal=RC,*=SI", smallbank)
    s = build_split_schedule(seq, rc)
    assert s.version_fn["T1.o3"] == "T3.o4"
    assert canonical_allocation(seq, rc) == {"T1": RC, "T2": SI, "T3": SI}
    si = parse_allocation("*=SI", smallbank)
    s = build_split_schedule(seq, si)
    assert s.version_fn["T1.o3"] == OP0
    assert is_conflict_serializable(s) or not allowed_under(s, canonical_allocation(seq, si))


def test_sequences_and_search(smallbank):
    two = list(sequences(smallbank, 2))
    assert two and all(len(s) == 2 for s in two)
    assert all(s[0].to_template == s[1].from_template and s[1].to_template == s[0].from_template for s in two)
    assert bounded_counterexample_search(smallbank, parse_allocation("*=SSI", smallbank), 2) is None
    alloc = parse_allocation("*=RC", smallbank)
    first = next(iter_counterexamples(smallbank, alloc, 2))
    assert not is_conflict_serializable(first.schedule)
    with pytest.raises(BoundTooSmall):
        bounded_counterexample_search(smallbank, alloc, 1)
