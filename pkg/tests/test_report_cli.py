import io
import json

import pytest

from isorobust import is_robust, report
from isorobust.cli import main
from isorobust.model import parse_allocation


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_witness_json_round_trip(smallbank):
    alloc = parse_allocation("Bal=RC,*=SI", smallbank)
    w = is_robust(smallbank, alloc).witness
    data = json.loads(json.dumps(report.witness_json(w, smallbank)))
    w2, model, embedded = report.load_witness(json.dumps(data))
    assert embedded is None
    assert [str(q) for q in w2.quadruples] == [str(q) for q in w.quadruples]
    assert (w2.h, w2.c_o2, w2.c_pn) == (w.h, w.c_o2, w.c_pn)
    assert {t.name for t in model.templates} <= set(smallbank.names)


@pytest.mark.parametrize("text, message", [
    ("not json", "not JSON"),
    ('{"schema_version": 9, "witness": {}}', "schema_version"),
    ('{"schema_version": 1, "witness": null}', "robust"),
    ('{"relations": []}', "malformed"),
])
def test_load_witness_errors(text, message):
    with pytest.raises(report.ReportError, match=message):
        report.load_witness(text)


def test_check_json_then_verify(tmp_path):
    code, out = run("--json", "check", "--alloc", "Bal=RC,*=SI")
    assert code == 1
    payload = json.loads(out)
    assert payload["schema_version"] == 1 and payload["robust"] is False
    assert payload["oracle_verified"] is True
    path = tmp_path / "report.json"
    path.write_text(out)
    code, out = run("oracle", "verify", "--witness", str(path), "--json", "--plot-dir", str(tmp_path / "figs"))
    assert code == 0
    verified = json.loads(out)
    assert verified["oracle_verified"] and not verified["serializable"] and verified["violations"] == []
    assert (tmp_path / "figs" / "verified_schedule.png").stat().st_size > 0
    # overriding with all-SSI makes the replayed schedule disallowed
    code, out = run("oracle", "verify", "--witness", str(path), "--alloc", "*=SSI")
    assert code == 1 and "oracle_verified\tfalse" in out


def test_check_robust_text():
    code, out = run("check", "--alloc", "DC=RC")
    assert code == 0
    assert "robust\ttrue" in out.splitlines()


def test_lowest_and_promotions(tmp_path):
    code, out = run("lowest", "--json")
    assert code == 0 and json.loads(out)["allocation"]["DepositChecking"] == "RC"
    code, out = run("--plot-dir", str(tmp_path), "promotions", "--group")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split("\t")[:3] == ["group", "row", "choice"]
    assert len(lines) == 17
    assert len({line.split("\t")[0] for line in lines[1:]}) == 6
    assert (tmp_path / "promotions.png").exists()


def test_oracle_search(tmp_path):
    code, out = run("oracle", "search", "--alloc", "Bal=RC,*=SI", "--plot-dir", str(tmp_path))
    assert code == 1 and "result\tcounterexample" in out
    assert (tmp_path / "search_schedule.png").exists()
    code, out = run("oracle", "search", "--alloc", "*=SSI", "--bound", "2", "--json")
    assert code == 0 and json.loads(out)["result"] == "none found within bound"


@pytest.mark.parametrize("argv", [
    ["check", "--alloc", "Nope=RC"],
    ["check", "--alloc", "Bal"],
    ["check", "--alloc", "*=RC", "--templates", "/does/not/exist"],
    ["oracle", "search", "--alloc", "*=RC", "--bound", "1"],
    ["oracle", "verify", "--witness", "/does/not/exist"],
    ["frobnicate"],
])
def test_input_errors_exit_2(argv, capsys):
    code, _ = run(*argv)
    assert code == 2


def test_template_file_errors_report_line(tmp_path, capsys):
    p = tmp_path / "bad.tdsl"
    p.write_text("relation R(a readonly)\ntemplate T {\n W X:R {a}\n}\n")
    code, _ = run("check", "--alloc", "*=RC", "--templates", str(p))
    assert code == 2
    assert "line 3" in capsys.readouterr().err
