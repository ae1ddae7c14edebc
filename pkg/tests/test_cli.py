import json
import subprocess
import sys

import pytest

from qgroupoid import cli
from qgroupoid.suites import PAPER_MAP, SUITES, Record, SuiteConfig


def run_main(tmp_path, *args, name="report.json"):
    out = tmp_path / name
    code = cli.main([*args, "--report", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_config_file_parsing(tmp_path):
    p = tmp_path / "verify.cfg"
    p.write_text(
        "# comment\n"
        "suite = loop-basics\n"
        "group = so3\n"
        "grid_n = 64   # trailing comment\n"
        "trials = 2\n"
        "seed = 7\n"
        "tol_overrides = loop-basics.holonomy_constant=1e-9, varpi=1e-3\n"
    )
    vals = cli.read_config_file(str(p))
    assert vals == {
        "suite": "loop-basics", "group": "so3", "grid_n": 64, "trials": 2, "seed": 7,
        "tol_overrides": {"loop-basics.holonomy_constant": 1e-9, "varpi": 1e-3},
    }
    args = cli.build_parser().parse_args(["--config", str(p), "--trials", "3", "--tol", "qham=1e-2"])
    cfg = cli.config_from_args(args)
    assert cfg.trials == 3 and cfg.group == "so3"  # flags override the file
    assert cfg.tol_overrides["qham"] == 1e-2 and cfg.tol_overrides["varpi"] == 1e-3


@pytest.mark.parametrize("text", ["bogus = 1\n", "grid_n = many\n", "suite\n", "tol_overrides = x\n"])
def test_config_file_errors(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(cli.ConfigError):
        cli.read_config_file(str(p))


@pytest.mark.parametrize("args", [
    ["--suite", "qham", "--group", "heisenberg3"],
    ["--suite", "varpi", "--group", "heisenberg3"],
    ["--suite", "reduction", "--group", "su2"],
    ["--suite", "loop-basics", "--grid-n", "48"],
    ["--suite", "loop-basics", "--trials", "0"],
    ["--suite", "loop-basics", "--seed", "-1"],
])
def test_exit_unsupported(tmp_path, args):
    code, text = run_main(tmp_path, *args)
    assert code == cli.EXIT_UNSUPPORTED
    assert text is None


def test_exit_numerical_failure(tmp_path, capsys):
    code, _ = run_main(tmp_path, "--suite", "holonomy-lemmas", "--grid-n", "32", "--substeps", "1", "--trials", "3")
    assert code == cli.EXIT_NUMERICAL
    assert "seed path" in capsys.readouterr().err


def test_exit_fail_on_tight_tolerance(tmp_path):
    code, text = run_main(tmp_path, "--suite", "holonomy-lemmas", "--trials", "2", "--tol", "holonomy-lemmas.equivariance=1e-20")
    assert code == cli.EXIT_FAIL
    doc = json.loads(text)
    rec = {r["check"]: r for r in doc["records"]}
    assert rec["equivariance"]["pass"] is False and rec["equivariance"]["tolerance"] == 1e-20
    assert rec["inversion"]["pass"] is True
    assert doc["all_pass"] is False


def test_qham_abelian_passes(tmp_path):
    code, text = run_main(tmp_path, "--suite", "qham", "--group", "abelian2", "--trials", "20")
    assert code == cli.EXIT_OK
    doc = json.loads(text)
    for r in doc["records"]:
        assert r["pass"]
        assert r["max_residual"] < 1e-7


def test_report_schema_and_pass_rule(tmp_path):
    code, text = run_main(tmp_path, "--suite", "loop-basics", "--trials", "3")
    assert code == 0
    doc = json.loads(text)
    assert list(doc) == ["config", "records", "findings", "skipped", "all_pass"]
    for r in doc["records"]:
        assert list(r) == list(Record.FIELDS)
        assert r["paper_anchor"] == PAPER_MAP[r["suite"]] and r["paper_anchor"]
        value = r["relative_max"] if r["relative_max"] is not None else r["max_residual"]
        if r["pass"]:
            assert value <= r["tolerance"]
        assert r["runtime_ms"] is None


def test_timings_flag(tmp_path):
    _, text = run_main(tmp_path, "--suite", "finite-basics", "--trials", "2", "--timings")
    assert all(r["runtime_ms"] is not None for r in json.loads(text)["records"])


def test_determinism_byte_identical(tmp_path, monkeypatch):
    args = ["--suite", "holonomy-lemmas", "--trials", "3", "--seed", "123"]
    monkeypatch.setenv("VERIFY_THREADS", "1")
    _, a = run_main(tmp_path, *args, name="a.json")
    monkeypatch.setenv("VERIFY_THREADS", "4")
    _, b = run_main(tmp_path, *args, name="b.json")
    assert a == b
    _, c = run_main(tmp_path, *args[:-1], "124", name="c.json")
    assert c != a


def test_bad_thread_env(monkeypatch, tmp_path):
    monkeypatch.setenv("VERIFY_THREADS", "lots")
    code, _ = run_main(tmp_path, "--suite", "finite-basics", "--trials", "1")
    assert code == cli.EXIT_UNSUPPORTED


def test_plan_all_modes():
    plan = cli.plan(SuiteConfig(group="su2"))
    assert [s for s, _ in plan] == list(SUITES)
    assert dict(plan)["reduction"] == "heisenberg3"
    plan_h = dict(cli.plan(SuiteConfig(group="heisenberg3")))
    for s in ("varpi", "amm-equivalence", "delta-cocycle", "qham", "moment"):
        assert s not in plan_h


def test_convergence_saturated_and_order():
    cfg = SuiteConfig(suite="amm-equivalence", trials=2)
    conv = {c["check"]: c for c in cli.convergence_study(cfg, [64, 128])}
    assert conv["identity"]["order"] >= 3.5
    cfg = SuiteConfig(suite="loop-basics", trials=2)
    conv = {c["check"]: c for c in cli.convergence_study(cfg, [64, 128])}
    assert conv["holonomy_constant"]["order"] == "saturated"
    with pytest.raises(cli.ConfigError):
        cli.convergence_study(cfg, [64])


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "qgroupoid.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "--suite" in out.stdout
