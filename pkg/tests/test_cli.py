import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import fixture_map
from sphereimm.cli import run
from sphereimm.errors import ParseError
from sphereimm.family import FamilySpec, scaled_family
from sphereimm.io import emit_map, parse_map
from sphereimm.polycore import Polynomial, PolynomialMap

FIXTURE_DOC = {
    "format_version": "1",
    "vars": ["x", "y", "z"],
    "components": [[{"coef": "1", "exps": [1, 0, 0]}], [{"coef": "1", "exps": [0, 1, 0]}],
                   [{"coef": "1", "exps": [1, 0, 1]}], [{"coef": "1", "exps": [0, 1, 1]}]],
}


def _write(tmp_path, doc, name="map.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def _run(argv, tmp_path):
    out = tmp_path / "report.json"
    code = run(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


def test_parse_fixture_document():
    g = parse_map(json.dumps(FIXTURE_DOC))
    assert isinstance(g, PolynomialMap)
    assert g == fixture_map()


@pytest.mark.parametrize("mutate,location", [
    (lambda d: d.update(components=[]), "components"),
    (lambda d: d["components"][0][0].update(coef="1/0"), "components[0][0].coef"),
    (lambda d: d["components"][0][0].update(coef="x"), "components[0][0].coef"),
    (lambda d: d["components"][1][0].update(exps=[1, 0]), "components[1][0].exps"),
    (lambda d: d.update(extra=1), "document"),
    (lambda d: d["components"][0][0].update(power=2), "components[0][0]"),
    (lambda d: d.update(format_version="9"), "format_version"),
    (lambda d: d.update(vars=["x", "x", "z"]), "vars"),
])
def test_parse_errors_carry_locations(mutate, location):
    doc = json.loads(json.dumps(FIXTURE_DOC))
    mutate(doc)
    with pytest.raises(ParseError) as info:
        parse_map(json.dumps(doc))
    assert info.value.location == location


def test_syntax_error_has_line():
    with pytest.raises(ParseError) as info:
        parse_map('{\n "format_version": "1",\n "vars": [}')
    assert info.value.location.startswith("line 3")


exps = st.lists(st.integers(0, 3), min_size=3, max_size=3).map(tuple)
coefs = st.fractions(min_value=-9, max_value=9, max_denominator=7).filter(lambda c: c != 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.dictionaries(exps, coefs, max_size=4), min_size=1, max_size=4))
def test_emit_parse_roundtrip(components):
    g = PolynomialMap(3, tuple(Polynomial(3, c) for c in components))
    assert parse_map(emit_map(g)) == g


def test_family_roundtrip():
    fam = scaled_family(fixture_map(), 1)
    back = parse_map(emit_map(fam))
    assert isinstance(back, FamilySpec)
    assert back.g == fam.g and back.lambda_names == ("s",)


def test_check_immersion_fold_exits_3(tmp_path):
    doc = json.loads(json.dumps(FIXTURE_DOC))
    doc["components"][2] = [{"coef": "1", "exps": [2, 0, 0]}]
    doc["components"][3] = [{"coef": "1", "exps": [0, 2, 0]}]
    code, rep = _run(["check-immersion", _write(tmp_path, doc)], tmp_path)
    cert = rep["result"]["certificate"]
    assert code == 3 and cert["verdict"] == "fail"
    assert abs(cert["witness"][2]) < 1e-3 * cert["radii_checked"][-1]


def test_input_error_is_structured(tmp_path):
    doc = json.loads(json.dumps(FIXTURE_DOC))
    doc["components"][0][0]["coef"] = "1/0"
    code, rep = _run(["check-immersion", _write(tmp_path, doc)], tmp_path)
    assert code == 1 and rep["error"]["type"] == "ParseError"
    code, rep = _run(["check-immersion", str(tmp_path / "missing.json")], tmp_path)
    assert code == 1 and rep["error"]["type"] == "ParseError"


def test_bad_radius_is_usage_error(tmp_path):
    code, rep = _run(["intersection", _write(tmp_path, FIXTURE_DOC), "--radius", "abc"],
                     tmp_path)
    assert code == 1 and rep["error"]["type"] == "UsageError"


def test_intersection_pairs_is_byte_deterministic(tmp_path):
    path = _write(tmp_path, FIXTURE_DOC)
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert run(["intersection", path, "--method", "pairs", "--radius", "0.1",
                    "--threads", "1", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["schema_version"] and rep["result"]["pairs"] == -1


def test_scan_pairs_command(tmp_path):
    fam = emit_map(scaled_family(fixture_map(), 1))
    code, rep = _run(["scan", _write(tmp_path, fam), "--grid", "s=-1,1/2", "--method", "pairs",
                      "--fit-degree", "1"], tmp_path)
    assert code == 0
    assert rep["result"]["table"] == [1, -1]
    assert rep["result"]["sign_fit"]["h"] == "-s"


def test_scan_grid_errors(tmp_path):
    fam = _write(tmp_path, emit_map(scaled_family(fixture_map(), 1)))
    code, rep = _run(["scan", fam, "--grid", "t=1,2"], tmp_path)
    assert code == 1 and "unknown parameter" in rep["error"]["message"]
    code, rep = _run(["scan", _write(tmp_path, FIXTURE_DOC, "m.json"), "--grid", "s=1"],
                     tmp_path)
    assert code == 1


def test_degree_command_on_sphere(tmp_path):
    doc = {"format_version": "1", "vars": ["x", "y"],
           "components": [[{"coef": "1", "exps": [2, 0]}, {"coef": "-1", "exps": [0, 2]}],
                          [{"coef": "2", "exps": [1, 1]}]]}
    code, rep = _run(["degree", _write(tmp_path, doc), "--radius", "1"], tmp_path)
    assert code == 0 and rep["result"]["degree"] == [2]
