import json
import subprocess
import sys

import pytest

from levyfactor.catalog import default_fixtures, make_gamma
from levyfactor.cli import (
    EXIT_CHECK_FAILED,
    EXIT_NOT_L,
    EXIT_NOT_LF,
    EXIT_OK,
    EXIT_PARSE,
    load_spec,
    main,
    parse_expression,
    parse_spec_document,
    spec_document,
)
from levyfactor.errors import SpecParseError


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_gamma(capsys):
    code, out, _ = run(["classify", "gamma:alpha=2,lam=1"], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK
    v = doc["result"]["verdicts"]
    assert v["U"] == v["L"] == v["Lf"] == "yes"
    assert v["L1"] == "no"
    assert doc["result"]["known_classes"]["L1"] == "no"


def test_inline_density_matches_catalog(tmp_path, capsys):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"triple": {"pos_density": "exp(-r)/r", "shift": 1 - 2.718281828459045**-1}}))
    _, inline, _ = run(["classify", str(path)], capsys)
    _, cat, _ = run(["classify", "gamma"], capsys)
    assert json.loads(inline)["result"]["verdicts"] == json.loads(cat)["result"]["verdicts"]


def test_bad_expression_points_at_column(tmp_path, capsys):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"triple": {"pos_density": "exp(-r"}}))
    code, out, err = run(["classify", str(path)], capsys)
    assert code == EXIT_PARSE and out == ""
    assert "^" in err


def test_expression_rejects_attributes():
    with pytest.raises(SpecParseError, match=r"\^"):
        parse_expression("r.__class__")


def test_expression_evaluates():
    f = parse_expression("exp(-r) / r + sqrt(pi)")
    assert f(2.0) == pytest.approx(0.0676676416 + 1.7724538509)


def test_unknown_spec_is_parse_error(capsys):
    code, _, err = run(["classify", "no_such_law"], capsys)
    assert code == EXIT_PARSE and "catalog" in err


def test_factorize_exit_codes(capsys):
    code, out, _ = run(["factorize", "gamma"], capsys)
    assert code == EXIT_OK and json.loads(out)["result"]["valid"] is True
    code, _, err = run(["factorize", "comp_poisson_exp"], capsys)
    assert code == EXIT_NOT_L and "witness" in err
    code, out, _ = run(["factorize", "bessel"], capsys)
    assert code == EXIT_NOT_LF
    assert json.loads(out)["result"]["in_Lf"] == "no"


def test_factorize_laplace_series_and_csv(tmp_path, capsys):
    cf = tmp_path / "cf.csv"
    code, out, _ = run(["factorize", "laplace_series", "--format", "csv", "--emit-cf", str(cf)], capsys)
    assert code == EXIT_OK
    assert out.splitlines()[0] == "t,re,im"
    assert cf.read_text().splitlines()[0].startswith("t,re_phi_mu")


def test_transform_table(capsys):
    code, out, _ = run(["transform", "gamma", "--kind", "invert_I", "--t-max", "2"], capsys)
    assert code == EXIT_OK
    rows = json.loads(out)["tables"]["exponent"]["rows"]
    assert len(rows) == 41


def test_catalog_lists_every_entry(capsys):
    code, out, _ = run(["catalog"], capsys)
    names = {e["name"] for e in json.loads(out)["result"]["entries"]}
    assert code == EXIT_OK
    assert {"gamma", "stable", "levy_area", "wenocur", "bessel", "K_measure"} <= names


def test_verify_is_byte_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "gamma:alpha=2,lam=1", "--n", "20000", "--seed", "3", "--t-max", "2", "--tol", "0.05"]
    assert main(args + ["-o", str(a)]) == EXIT_OK
    assert main(args + ["-o", str(b), "--workers", "3"]) in (EXIT_OK, EXIT_CHECK_FAILED)
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da["command"].pop("workers"), db["command"].pop("workers")
    assert da == db
    assert main(args + ["-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_verify_rejects_small_n(capsys):
    code, _, err = run(["verify", "gamma", "--n", "500"], capsys)
    assert code == EXIT_PARSE and "--n" in err


@pytest.mark.parametrize("kind", ["increment", "I", "J"])
def test_sample_reports_distance(kind, capsys):
    code, out, _ = run(["sample", "gamma", "--integral", kind, "--n", "20000", "--t-max", "2", "--tol", "0.05"], capsys)
    res = json.loads(out)["result"]
    assert code == EXIT_OK
    assert res["passed"] and res["cf_distance"] <= 0.05


@pytest.mark.parametrize("spec", default_fixtures(), ids=lambda s: s.name)
def test_spec_document_round_trip(spec):
    loaded = parse_spec_document(json.loads(json.dumps(spec_document(spec))))
    assert loaded.catalog.name == spec.name
    assert loaded.catalog.params == spec.params


def test_load_spec_file_and_shorthand_agree(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps(spec_document(make_gamma(2.0, 3.0))))
    assert load_spec(str(path)).catalog.params == load_spec("gamma:alpha=2.0,lam=3.0").catalog.params


def test_spec_document_needs_one_kind():
    with pytest.raises(SpecParseError):
        parse_spec_document({"catalog": {"name": "gamma"}, "triple": {}})
    with pytest.raises(SpecParseError):
        parse_spec_document({"triple": {"pos_density": "exp(-r)/r", "colour": 1}})


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "levyfactor.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("levyfactor")
