import csv
import io
import json
from pathlib import Path

import pytest

from novlab.cli import main
from novlab.errors import NotInvertibleError, ParseError
from novlab.expr import evaluate, tokenize
from novlab.groupoid import GeneratorRecord, GroupoidGraph, ObjectRecord
from novlab.novikov import TruncationContext, render

SCEN = Path(__file__).resolve().parent.parent / "scenarios"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


# expressions


@pytest.fixture
def two_loops():
    g = GroupoidGraph(
        [ObjectRecord("p", 0), ObjectRecord("q", 0)],
        [GeneratorRecord("g", "p", "p", -1.0), GeneratorRecord("h", "q", "q", -1.0)],
    )
    return TruncationContext(5.0, g)


def test_expression_precedence(ctx5):
    assert render(evaluate("1 + g*g - -g", ctx5)) == "1_p + g + g^2"
    assert render(evaluate("(1 + g)^2", ctx5)) == "1_p + 2*g + g^2"
    assert render(evaluate("2*g^2", ctx5)) == "2*g^2"
    assert render(evaluate("1_p - 1", ctx5)) == "0"


@pytest.mark.parametrize(
    "text, pos",
    [("g +", 3), ("(g", 2), ("g )", 2), ("x", 0), ("g ^ g", 4), ("1 $", 2), ("", 0), ("1_z", 2)],
)
def test_parse_errors_carry_position(ctx5, text, pos):
    with pytest.raises(ParseError) as err:
        evaluate(text, ctx5)
    assert err.value.position == pos


def test_inv_of_non_unit(ctx5):
    with pytest.raises(NotInvertibleError):
        evaluate("inv(g)", ctx5)


def test_tokens():
    kinds = [t.kind for t in tokenize("inv(1_p - 2*g)")]
    assert kinds == ["name", "op", "ident1", "op", "int", "op", "name", "op", "end"]


# ring


def test_ring_unit_example(capsys):
    code, out, _ = run(capsys, "ring", "inv(1 - g) * (1 - g)", "--L", "5")
    assert code == 0 and body(out) == ["1_p"]


def test_ring_telescoping(capsys):
    code, out, _ = run(capsys, "ring", "(1+g)*(1-g)")
    assert body(out) == ["1_p - g^2"]


def test_ring_mismatched_ends(capsys):
    code, out, _ = run(capsys, "ring", "g*h", "--scenario", SCEN / "ring_two_loops.json")
    assert code == 0 and body(out) == ["0"]


def test_ring_csv_and_json(capsys):
    _, out, _ = run(capsys, "ring", "(1+g)*(1-g)", "--out", "csv")
    rows = list(csv.reader(io.StringIO("\n".join(body(out)))))
    assert rows == [["arrow", "coeff", "valuation"], ["1_p", "1", "0.0"], ["g^2", "-1", "-2.0"]]
    _, out, _ = run(capsys, "ring", "g", "--out", "json", "--seed", "7")
    doc = json.loads(out)
    assert doc["result"]["value"] == "g"
    assert doc["header"]["seed"] == 7 and doc["header"]["L"] == 5.0 and "tol" in doc["header"]


def test_ring_input_errors(capsys):
    code, _, err = run(capsys, "ring", "g +")
    assert code == 2 and "position 3" in err
    code, _, err = run(capsys, "ring", "inv(g)")
    assert code == 2
    code, _, _ = run(capsys, "ring", "g", "--scenario", "/nonexistent.json")
    assert code == 2
    code, _, _ = run(capsys, "bogus")
    assert code == 2


def test_header_lines(capsys):
    _, out, _ = run(capsys, "ring", "g", "--tol", "1e-8")
    head = [line for line in out.splitlines() if line.startswith("#")]
    assert "# L: 5.0" in head and "# seed: 0" in head and "# tol: 1e-08" in head


# complex


def test_complex_audit(capsys):
    code, out, _ = run(capsys, "complex", "audit", "--scenario", SCEN / "doubling_audit.json")
    assert code == 0 and body(out) == ["loop audit: pass; product = 1_p"]


def test_complex_apply(capsys):
    code, out, _ = run(capsys, "complex", "apply", "--scenario", SCEN / "slide_minus_positive.json", "--out", "json")
    doc = json.loads(out)
    inc = doc["result"]["complex"]["incidences"]
    assert code == 0 and len(inc) == 1
    terms = {t["arrow"]: t["coeff"] for t in inc[0]["element"]["terms"]}
    assert terms == {"e": 1, "g.e": 1}
    _, out, _ = run(capsys, "complex", "apply", "--scenario", SCEN / "slide_minus_positive.json")
    assert body(out)[0] == "<p,q> = e + g.e"


def test_complex_check(capsys):
    code, out, _ = run(capsys, "complex", "check", "--scenario", SCEN / "cancellation.json")
    assert code == 0 and body(out) == ["d^2 = 0: pass"]


def test_complex_check_failure_exit_code(capsys, tmp_path):
    doc = json.loads((SCEN / "cancellation.json").read_text())
    doc["complex"]["incidences"][3]["element"]["terms"][0]["coeff"] = 1
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "complex", "check", "--scenario", p)
    assert code == 1 and "FAIL" in out and "2*a1.b1" in out


def test_complex_field_errors(capsys, tmp_path):
    p = tmp_path / "broken.json"
    p.write_text(json.dumps({"groupoid": {"objects": [{"name": "p"}]}}))
    code, _, err = run(capsys, "complex", "check", "--scenario", p)
    assert code == 2 and "morse_index" in err
    code, _, err = run(capsys, "complex", "check", "--scenario", SCEN / "doubling_audit.json")
    assert code == 2 and "no complex" in err


# sim


def test_sim_invariants(capsys):
    code, out, _ = run(capsys, "sim", "invariants", "--scenario", SCEN / "chi_zero_minus.json", "--out", "json")
    doc = json.loads(out)
    assert code == 0 and doc["result"]["label"] == "S_g^{0,-}" and doc["result"]["marginal"] is False


def test_sim_incidence_csv(capsys):
    code, out, _ = run(capsys, "sim", "incidence", "--scenario", SCEN / "case_b1.json", "--out", "csv")
    rows = list(csv.DictReader(io.StringIO("\n".join(body(out)))))
    counts = {float(r["s"]): r["count"] for r in rows}
    assert code == 0
    assert counts == {-0.02: "G - g^2.G", -0.01: "G - g^2.G", 0.01: "G + g.G", 0.02: "G + g.G"}
    assert "# L: 3.75" in out


def test_sim_passages(capsys):
    code, out, _ = run(capsys, "sim", "passages", "--scenario", SCEN / "case_a1.json", "--out", "json")
    rows = json.loads(out)["result"]["passages"]
    nonempty = {(r["s"], r["k"]) for r in rows if r["nonempty"]}
    assert code == 0
    assert nonempty == {(-0.02, 1), (-0.01, 1)} | {(s, k) for s in (0.01, 0.02) for k in range(1, 5)}


def test_sim_doubling_half_line(capsys):
    code, out, _ = run(capsys, "sim", "doubling", "--scenario", SCEN / "chi_zero_plus.json", "--grid", "9", "--out", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["result"]["summary"]["half_line"] == "s>0"
    assert doc["result"]["summary"]["cells"]["g^3"] == 0
    assert len(doc["result"]["grid"]) == 64


def test_sim_needs_config(capsys):
    code, _, err = run(capsys, "sim", "invariants")
    assert code == 2 and "simulator" in err


def test_sim_unsupported_configuration(capsys, tmp_path):
    p = tmp_path / "zero.json"
    p.write_text(json.dumps({"simulator": {"omega_phi": 0.5, "omega_psi": 0.0}}))
    code, _, err = run(capsys, "sim", "invariants", "--scenario", p)
    assert code == 2 and "latitude" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("ring", "inv(1 - g)", "--out", "csv"),
        ("complex", "apply", "--scenario", SCEN / "slide_minus_positive.json", "--out", "json"),
        ("sim", "incidence", "--scenario", SCEN / "case_b1.json", "--out", "csv"),
        ("sim", "doubling", "--scenario", SCEN / "chi_zero_minus.json", "--grid", "5", "--out", "csv"),
    ],
)
def test_output_is_byte_identical(capsys, argv):
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second and first
