import csv
import io
import json

import pytest

from mixedhenon.cli import CSV_COLUMNS, main, parse_range
from mixedhenon.functional import classify
from mixedhenon.params import Params

FAST = ["--R", "12", "--M", "120"]


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_solve_writes_converged_report(tmp_path, capsys):
    out = tmp_path / "run.json"
    code = main(["solve", "--N", "3", "--p", "2", "--q", "4", "--s", "1", "--gamma", "1", "--alpha", "0",
                 "--beta", "2", *FAST, "--tol", "1e-6", "--out", str(out)])
    assert code == 0
    d = json.loads(out.read_text())
    assert d["converged"] and d["residual"] <= 1e-6
    assert d["classification"]["verdict"] == "EXISTS_GUARANTEED"
    assert "converged=True" in capsys.readouterr().err


def test_solve_defaults_to_stdout(capsys):
    assert main(["solve", *FAST]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["converged"] is True


def test_solve_rejects_sublinear_source(capsys):
    assert main(["solve", "--q", "1.5", "--p", "2", *FAST]) == 2
    assert "q must exceed p" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["solve", "--s", "1.5"], ["solve", "--N", "0"], ["solve", "--bogus"]])
def test_invalid_parameters_are_usage_errors(argv):
    assert main(argv + FAST) == 2


def test_solve_unwritable_output(tmp_path):
    assert main(["solve", *FAST, "--out", str(tmp_path / "missing" / "x.json")]) == 1


def test_solve_not_converged_exit_code():
    assert main(["solve", *FAST, "--max-iter", "1", "--restarts", "1"]) == 1


def test_parse_range_inclusive():
    assert parse_range("2.2:7.0:0.2")[-1] == 7.0
    assert len(parse_range("2.2:7.0:0.2")) == 25
    assert parse_range("1:1:0.5") == [1.0]


def test_sweep_classification(capsys):
    assert main(["sweep", "--q", "2.2:7.0:0.2", "--classify-only"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 25
    for row in rows:
        q = float(row["q"])
        expected = "EXISTS_GUARANTEED" if q < 6 else "NONEXISTENCE_GUARANTEED" if q > 6 else "UNCLASSIFIED"
        assert row["verdict"] == expected, q
        P = Params(*(float(row[k]) if k != "N" else int(row[k]) for k in ("N", "p", "q", "s", "gamma", "alpha", "beta")))
        assert classify(P).verdict.value == row["verdict"]


def test_sweep_header_order(capsys):
    main(["sweep", "--q", "3:4:1", "--classify-only"])
    assert capsys.readouterr().out.splitlines()[0] == ",".join(CSV_COLUMNS)


def test_sweep_solves_rows(capsys):
    assert main(["sweep", "--q", "3.5:4.5:0.5", *FAST, "--restarts", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["converged"] for r in rows] == ["true"] * 3
    levels = [float(r["nehari_level"]) for r in rows]
    assert all(l > 0 for l in levels)


@pytest.mark.parametrize("rng", ["7:2:0.2", "2:7:0", "2:7", "a:b:c"])
def test_sweep_empty_or_bad_range(rng):
    assert main(["sweep", "--q", rng, "--classify-only"]) == 2


def test_sweep_requires_a_range():
    assert main(["sweep", "--classify-only"]) == 2


def test_sweep_plot_data_cardinality(tmp_path):
    out = tmp_path / "phase.csv"
    assert main(["sweep", "--q", "2.5:7.5:0.5", "--alpha", "0:2:0.5", "--classify-only", "--out", str(out)]) == 0
    plot = list(csv.DictReader((tmp_path / "phase.plot.csv").open()))
    assert len(plot) == 11 * 5
    assert len({(r["x"], r["y"]) for r in plot}) == 55
    assert {r["class"] for r in plot} <= {"EXISTS_GUARANTEED", "NONEXISTENCE_GUARANTEED", "UNCLASSIFIED"}


def test_sweep_negative_range_start(capsys):
    assert main(["sweep", "--alpha=-1:0:0.5", "--classify-only"]) == 0
    assert [r["alpha"] for r in _rows(capsys.readouterr().out)] == ["-1.0", "-0.5", "0.0"]


def test_sweep_unwritable_output(tmp_path):
    assert main(["sweep", "--q", "3:4:1", "--classify-only", "--out", str(tmp_path / "no" / "x.csv")]) == 1


def test_sweep_is_byte_identical(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["sweep", "--q", "3.5:4.5:0.5", *FAST, "--restarts", "1", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_solve_is_byte_identical(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        main(["solve", *FAST, "--out", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_verify_pohozaev(capsys):
    assert main(["verify", "pohozaev", "--N", "3", "--p", "2", "--s", "1", "--alpha", "0"]) == 0
    assert "pohozaev: PASS threshold=6" in capsys.readouterr().out


def test_verify_gradient(tmp_path):
    out = tmp_path / "g.json"
    assert main(["verify", "gradient", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())[0]
    assert rep["pass"] and rep["measured"]["passed"] == 20


def test_verify_kernel_oracle_deterministic(tmp_path):
    outs = [tmp_path / "a.json", tmp_path / "b.json"]
    for o in outs:
        assert main(["verify", "kernel-oracle", "--s", "0.5", "--samples", "2e5", "--seed", "7", "--out", str(o)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


@pytest.mark.parametrize("suite", ["strauss", "interpolation", "scaling", "mountain-pass"])
def test_verify_generated_suites(suite):
    assert main(["verify", suite, "--M", "120", "--family-size", "10"]) == 0


def test_verify_degiorgi_from_stored_solution(tmp_path):
    sol = tmp_path / "run.json"
    assert main(["solve", *FAST, "--out", str(sol)]) == 0
    assert main(["verify", "degiorgi", "--input", str(sol)]) == 0


def test_verify_unknown_suite():
    assert main(["verify", "nonsense"]) == 2


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reference\nq = 7\nM = 120\nR = 12\nclassify-only = true\n")
    assert main(["sweep", "--config", str(cfg), "--alpha", "0:1:1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["verdict"] for r in rows] == ["NONEXISTENCE_GUARANTEED", "EXISTS_GUARANTEED"]  # p* = 6, 8
    assert main(["sweep", "--config", str(cfg), "--alpha", "0:1:1", "--q", "4"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["verdict"] for r in rows] == ["EXISTS_GUARANTEED"] * 2


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("frobnicate = 1\n")
    assert main(["solve", "--config", str(cfg)]) == 2


def test_kernel_build_uses_cache_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MIXEDHENON_CACHE_DIR", str(tmp_path))
    assert main(["kernel", "build", "--N", "2", "--s", "0.5", "--R", "5", "--M", "16"]) == 0
    path = capsys.readouterr().out.strip()
    assert path.startswith(str(tmp_path))
    assert (tmp_path / path.split("/")[-1]).stat().st_size > 64


def test_kernel_build_local_case_is_usage_error():
    assert main(["kernel", "build", "--s", "1"]) == 2
