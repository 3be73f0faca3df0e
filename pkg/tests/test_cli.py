import csv
import json

import pytest

from tame_levy import cli, verify
from tame_levy.errors import NumericalFailure
from tame_levy.levy import levy_table
from tame_levy.verify import VerifyOptions, all_passed, run_verify


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_verify_t1_passes(tmp_path, capsys):
    assert cli.main(["--config", "T1", "--command", "verify", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "verify.csv")
    names = {r["check"] for r in rows}
    assert {"different exponent", "trace surjectivity", "Theorem 1 coset-sum", "Levy-Khinchin",
            "duality/orthogonality", "I_N lower bound", "Q_exact positivity"} <= names
    assert all(r["passed"] == "True" for r in rows)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "verify" and manifest["tower"]["p"] == 2
    assert "PASS" in capsys.readouterr().out


def test_verify_from_yaml_path(tmp_path):
    cfg = tmp_path / "tower.yaml"
    cfg.write_text("p: 3\nalpha: 1\nlevels: [[1, 1], [2, 2]]\nextend: false\n")
    assert cli.main(["--config", str(cfg), "--command", "verify", "--level", "2"]) == 0


def test_corrupted_table_names_the_identity(t1, monkeypatch, capsys):
    opts = VerifyOptions(max_level=2, tables={2: levy_table(t1, 2).corrupted()})
    results = run_verify(t1, opts)
    assert not all_passed(results)
    assert [r.name for r in results if not r.passed] == ["Theorem 1 coset-sum"]
    with pytest.raises(NumericalFailure) as err:
        run_verify(t1, opts, strict=True)
    assert err.value.check == "Theorem 1 coset-sum"

    real = verify.levy_table
    monkeypatch.setattr(verify, "levy_table", lambda spec, n: real(spec, n).corrupted())
    assert cli.main(["--config", "T1", "--command", "verify", "--level", "2"]) == 1
    assert "Theorem 1 coset-sum" in capsys.readouterr().err


def test_verify_with_monte_carlo(t1):
    results = run_verify(t1, VerifyOptions(max_level=2, mc_samples=2000, seed=5))
    mc = [r for r in results if r.name == "Q_exact vs Q_mc"]
    assert len(mc) == 1 and mc[0].passed


def test_config_errors(tmp_path):
    assert cli.main(["--config", "T1", "--command", "simulate", "--samples", "0"]) == 2
    assert cli.main(["--config", "nowhere.yaml", "--command", "verify"]) == 2
    assert cli.main(["--config", "T1", "--command", "simulate", "--horizon", "-1"]) == 2
    bad = tmp_path / "wild.yaml"
    bad.write_text("p: 2\nalpha: 1\nlevels: [[2, 1]]\n")
    assert cli.main(["--config", str(bad), "--command", "verify"]) == 2


def test_small_cap_falls_back_to_structured_checks(tmp_path, capsys):
    assert cli.main(["--config", "T2", "--command", "report", "--level", "3"]) == 0
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text("p: 2\nalpha: 1\nlevels: [[1, 1], [1, 2], [1, 4]]\ncaps:\n  enum_order: 8\n")
    assert cli.main(["--config", str(cfg), "--command", "verify", "--level", "2"]) == 0
    assert "by annihilator shells" in capsys.readouterr().out


def test_cap_exceeded_exit_code(monkeypatch):
    from tame_levy.errors import EnumerationCapExceeded

    def boom(spec, args, outputs):
        raise EnumerationCapExceeded("M(4) exceeds cap")

    monkeypatch.setitem(cli.COMMANDS, "report", boom)
    assert cli.main(["--config", "T1", "--command", "report"]) == 2


def test_simulate_outputs_are_reproducible(tmp_path):
    args = ["--config", "T1", "--command", "simulate", "--level", "3", "--samples", "50", "--seed", "3"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    for name in ("paths_summary.csv", "exit_stats.csv", "paths.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = read_csv(a / "exit_stats.csv")
    assert [r["N"] for r in rows] == ["1", "2", "3"]
    assert sum(1 for line in (a / "paths.txt").read_text().splitlines() if line.startswith("#")) == 50


def test_analyze_and_json(tmp_path):
    out = tmp_path / "an"
    args = ["--config", "T1", "--command", "analyze", "--level", "3", "--alpha", "2", "--samples", "40", "--out", str(out)]
    assert cli.main(args + ["--format", "json"]) == 0
    rows = json.loads((out / "dimension.json").read_text())
    assert [r["n"] for r in rows] == [1, 2, 3]
    assert rows[0]["phi_median"] == "" and rows[1]["phi_median"] != ""
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tower"]["alpha"] == "2"


def test_report(tmp_path):
    out = tmp_path / "rep"
    assert cli.main(["--config", "T1", "--command", "report", "--level", "3", "--out", str(out)]) == 0
    shells = read_csv(out / "shells.csv")
    assert shells[1] == {"n": "2", "j0": "0", "count": "12", "mass": "0.125"}
    seq = read_csv(out / "sequences.csv")
    assert len(seq) == 8 and seq[0]["Lambda_n"] == "1.0"
    q = read_csv(out / "q_table.csv")
    assert [(r["n"], r["N"]) for r in q] == [("2", "1"), ("3", "1"), ("3", "2")]
