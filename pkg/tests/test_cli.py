import csv
import io
import json
import math

import pytest
from click.testing import CliRunner

from wienerapprox.cli import cli, main, render
from wienerapprox.spectral import CoefficientField


def run(*args):
    return CliRunner().invoke(cli, list(args), standalone_mode=False, catch_exceptions=False)


def exit_code(*args):
    with pytest.raises(SystemExit) as e:
        main(list(args))
    return e.value.code


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_exact_example():
    res = run("exact", "--psi", "pow:s=1", "--d", "1", "--p", "inf", "--q", "inf", "--m", "3")
    rows = table(res.output)
    assert float(rows[0]["sigma"]) == 0.5
    assert rows[0]["m"] == "3"


def test_lattice_example():
    rows = table(run("lattice", "--r", "inf", "--d", "2", "--s", "0:2").output)
    assert [(r["s"], r["V"], r["nu"]) for r in rows] == [("0", "1", "1"), ("1", "9", "8"), ("2", "25", "16")]


def test_order_audit_passes(capsys):
    assert exit_code("order-audit", "--psi", "pow:s=2", "--d", "1", "--p", "2", "--q", "2",
                     "--m", "8:4096:2", "--format", "json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"]["result"] == "PASS"
    assert doc["config"]["regime"] == "power"
    assert set(doc["rows"][0]) == {"m", "value", "prediction", "ratio", "log_value", "log_prediction"}


def test_order_audit_fail_exit(capsys):
    # a tight spread bound cannot hold across the step pattern of the widths
    code = exit_code("order-audit", "--psi", "pow:s=2", "--d", "2", "--p", "2", "--q", "1",
                     "--quantity", "width", "--m", "8:4096:2", "--spread", "1.01")
    assert code == 2
    capsys.readouterr()


def test_lp_audit_passes(capsys):
    assert exit_code("lp-audit", "--psi", "pow:s=2", "--p", "4", "--q", "2", "--m", "8:128:2") == 0
    rows = table(capsys.readouterr().out)
    assert all(float(r["lower"]) <= float(r["upper"]) * (1 + 1e-9) for r in rows)


@pytest.mark.parametrize("args", [
    ("exact", "--psi", "bogus:s=1", "--p", "1", "--q", "1", "--m", "3"),
    ("exact", "--psi", "pow:s=1", "--p", "-1", "--q", "1", "--m", "3"),
    ("exact", "--psi", "pow:s=1", "--p", "1", "--q", "1", "--m", "5,3"),
    ("exact", "--psi", "pow:s=1", "--p", "1", "--q", "1"),
    ("order-audit", "--psi", "pow:s=2", "--p", "1", "--q", "2", "--d", "2", "--m", "8:64:2",
     "--regime", "fast-steep"),
    ("nosuch",),
])
def test_usage_errors(args, capsys):
    assert exit_code(*args) == 1
    capsys.readouterr()


def test_greedy_command(tmp_path):
    f = CoefficientField({(0,): 1, (1,): 0.5, (-1,): 0.5, (2,): 0.25})
    path = tmp_path / "f.json"
    path.write_text(f.to_json())
    rows = table(run("greedy", "--input", str(path), "--p", "1", "--m", "0:4").output)
    assert [float(r["residual"]) for r in rows] == [2.25, 1.25, 0.75, 0.25, 0.0]
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert exit_code("greedy", "--input", str(bad), "--p", "1", "--m", "1") == 1


def test_oracle_command(capsys):
    assert exit_code("oracle", "--psi", "pow:s=1", "--d", "1", "--m-max", "2", "--format", "json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"]["failed"] == 0 and doc["verdict"]["checks"] == len(doc["rows"])


def test_json_matches_csv():
    args = ["exact", "--psi", "exp:a=1,s=2", "--d", "2", "--p", "1", "--q", "inf", "--m", "1:12"]
    rows = table(run(*args).output)
    doc = json.loads(run(*args, "--format", "json").output)
    assert len(rows) == len(doc["rows"])
    for a, b in zip(rows, doc["rows"]):
        for key in ("sigma", "width", "log_sigma"):
            x, y = float(a[key]), float(b[key])
            assert x == y or abs(x - y) <= 1e-15 * abs(y)
    assert doc["config"]["q"] == "inf"


def test_out_file_and_determinism(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        run("order-audit", "--psi", "exp:a=1,s=1", "--p", "1", "--q", "2", "--m", "8:512:2",
            "--format", "json", "--out", str(path))
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["verdict"]["result"] == "PASS"


def test_inf_rendering():
    text = render(["m", "x"], [[1, math.inf], [2, 0.1]], {"q": math.inf}, None, "csv")
    assert text == "m,x\n1,inf\n2,0.1\n"
    doc = json.loads(render(["m", "x"], [[1, math.inf]], {"q": math.inf}, {"result": "PASS"}, "json"))
    assert doc == {"config": {"q": "inf"}, "rows": [{"m": 1, "x": "inf"}], "verdict": {"result": "PASS"}}


def test_divergent_series_is_reported(capsys):
    assert exit_code("exact", "--psi", "const:c=1", "--p", "1", "--q", "inf", "--m", "1") == 1
    assert "diverges" in capsys.readouterr().err
