import csv
import json

import numpy as np
import pytest

from torsionlab import cli
from torsionlab import experiments as E
from torsionlab.errors import InvalidArgument, SearchFailure
from torsionlab.geometry import make_rectangle
from torsionlab.specfun import corner_exponent
from torsionlab.barriers import sector_constant


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


def test_config_validation():
    with pytest.raises(InvalidArgument):
        E.ExperimentConfig(name="x", betas=(1.0,))
    with pytest.raises(InvalidArgument):
        E.ExperimentConfig(name="x", levels=1)


def test_cusp_criterion_is_exact():
    # the boundary case 2p(beta - 1/2) = 1 diverges
    assert E.cusp_criterion(2, 0.75) is False
    assert E.cusp_criterion(2, 0.7) is True
    assert E.cusp_criterion(3, 0.6) is True
    assert E.cusp_criterion(1.5, 0.9) is False


def test_cusp_table_small():
    res = E.exp_cusp(p_list=(2.0,), beta_list=(0.3, 0.6, 0.8))
    assert res.passed
    finite = {r["beta"]: r["finite"] for r in res.rows}
    assert finite == {0.3: True, 0.6: True, 0.8: False}
    assert any(k.startswith("growth_p2") for k in res.plotdata)


def test_sector_experiment_scaling():
    res = E.exp_sector_equivalence(0.5, (0.5,), (0.5, 1.0))
    assert res.passed
    for row in res.rows:
        assert row["sector_exact"] == pytest.approx(sector_constant(0.5, 0.5) * row["r"] ** 1.0, rel=1e-12)


def test_square_beta_monotone_without_cauchy():
    res = E.exp_polygon_finiteness(make_rectangle(1.0, 1.0), (0.25, 0.5, 0.9), h0=0.2, levels=2,
                                   assert_cauchy=False)
    assert res.passed
    norm = [r["normalized"] for r in res.rows if "normalized" in r]
    assert len(norm) == 3
    assert np.all(np.diff(norm) > 0)


def test_write_outputs_deterministic(tmp_path):
    a = E.write_outputs(E.exp_sector_constant(1.0, 0.4, seed=7), str(tmp_path / "a"))
    b = E.write_outputs(E.exp_sector_constant(1.0, 0.4, seed=7), str(tmp_path / "b"))
    with open(a["csv"], "rb") as fa, open(b["csv"], "rb") as fb:
        assert fa.read() == fb.read()
    head, rows = _read_csv(a["csv"])
    assert head.startswith("# experiment=sector-constant seed=7")
    assert float(rows[0]["C"]) == sector_constant(1.0, 0.4)
    meta = json.loads(open(a["json"], encoding="utf-8").read())
    assert meta["seed"] == 7 and "numpy" in meta["versions"] and meta["passed"] is True


def test_write_outputs_plotdata(tmp_path):
    res = E.exp_cusp(p_list=(2.0,), beta_list=(0.8,))
    paths = E.write_outputs(res, str(tmp_path))
    name = next(iter(res.plotdata))
    data = np.loadtxt(f"{paths['plotdata']}/{name}.dat")
    x, y = res.plotdata[name]
    assert np.array_equal(data[:, 0], np.asarray(x, float))
    assert np.array_equal(data[:, 1], np.asarray(y, float))


def test_cli_exponent_json(capsys):
    assert cli.main(["exponent", "--n", "3", "--theta", "1.0"]) == cli.EXIT_OK
    row = json.loads(capsys.readouterr().out.splitlines()[0])
    assert row["alpha"] == pytest.approx(corner_exponent(3, 1.0).alpha, rel=1e-12)


def test_cli_sector_constant_and_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["sector-constant", "--theta", "0.7", "--beta", "0.3", "--out", str(out)]) == 0
    row = json.loads(capsys.readouterr().out.splitlines()[0])
    assert row["C"] == sector_constant(0.7, 0.3)
    assert (out / "results.csv").exists() and (out / "results.json").exists()


def test_cli_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["exponent", "--n", "3"])
    assert exc.value.code == cli.EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    assert exc.value.code == cli.EXIT_INPUT
    # a parsed but invalid value
    assert cli.main(["sector-constant", "--theta", "0.7", "--beta", "1.5"]) == cli.EXIT_INPUT
    assert cli.main(["polygon", "--domain", "/nonexistent.json"]) == cli.EXIT_INPUT


def test_cli_numerical_failure_exit_3(monkeypatch, capsys):
    def boom(*a, **k):
        raise SearchFailure("no bracket")

    monkeypatch.setattr(E, "exp_exponent", boom)
    assert cli.main(["exponent", "--n", "3", "--theta", "1.0"]) == cli.EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err


def test_cli_failed_check_exit_2(monkeypatch, capsys):
    def failing(*a, **k):
        res = E.ExperimentResult("coarea", E.ExperimentConfig(name="coarea"))
        res.check("forced", False, "gap 1")
        return res

    monkeypatch.setattr(E, "exp_coarea", failing)
    assert cli.main(["coarea"]) == cli.EXIT_CHECK
    assert "FAIL forced" in capsys.readouterr().out


def test_cli_fail_on_divergent(capsys):
    args = ["cusp", "--p", "2", "--beta", "0.5,0.8"]
    assert cli.main(args) == cli.EXIT_OK
    assert cli.main(args + ["--fail-on-divergent"]) == cli.EXIT_CHECK
    assert cli.main(["cusp", "--p", "2", "--beta", "0.5", "--fail-on-divergent"]) == cli.EXIT_OK


def test_cli_solve_then_beta_integral(tmp_path, capsys):
    dom = tmp_path / "sq.json"
    dom.write_text(json.dumps(make_rectangle(1.0, 1.0).to_json()))
    field = tmp_path / "field.json"
    assert cli.main(["solve", "--domain", str(dom), "--h", "0.2", "--levels", "2", "--out", str(field)]) == 0
    data = json.loads(field.read_text())
    assert data["type"] == "field-sequence" and len(data["fields"]) == 2
    res, table = tmp_path / "beta.json", tmp_path / "beta.csv"
    assert cli.main(["beta-integral", "--field", str(field), "--beta", "0.5", "--out", str(res),
                     "--csv", str(table)]) == 0
    out = json.loads(res.read_text())
    rows = list(csv.DictReader(table.read_text().splitlines()))
    assert len(rows) == 2 and float(rows[-1]["value"]) == out["value"]
    assert np.isnan(float(rows[0]["error"]))
    assert float(rows[1]["error"]) == pytest.approx(abs(float(rows[1]["value"]) - float(rows[0]["value"])))
