import json
import os
import time

import pytest

from regnewton.bench import (
    DEMO_CONFIG,
    ExperimentConfig,
    cli_main,
    parse_problem_id,
    problem_id,
    run_experiment,
    run_seed,
)
from regnewton.errors import ConfigError
from regnewton.trace import validate_trace_file


def small_config(out_dir, jobs=1):
    return ExperimentConfig.from_dict(
        {
            "schema_version": 1,
            "experiment": "polytope",
            "seed": 7,
            "out_dir": str(out_dir),
            "jobs": jobs,
            "problems": [
                {"generator": "polytope", "n": 8, "m": 24, "p": 2},
                {"generator": "polytope", "n": 8, "m": 24, "p": 3},
            ],
            "solvers": [
                {"id": "sun_a1", "method": "super_universal", "alpha": 1.0},
                {"id": "cnm", "method": "cubic_newton"},
                {"id": "gm", "method": "gradient"},
            ],
            "budgets": {"max_iterations": 60, "max_oracle_calls": 150},
        }
    )


def test_grid_file_count_and_manifest(tmp_path):
    cfg = small_config(tmp_path / "out")
    manifest = run_experiment(cfg)
    assert manifest["totals"]["runs"] == 6  # 2 problems x 3 solvers
    assert len(manifest["runs"]) == 6
    for entry in manifest["runs"]:
        assert entry["error"] is None
        path = os.path.join(cfg.out_dir, entry["trace"])
        assert os.path.exists(path)
        validate_trace_file(path)
    assert os.path.exists(os.path.join(cfg.out_dir, "polytope", "manifest.json"))


def test_empty_solver_list_rejected(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(
            {
                "schema_version": 1,
                "experiment": "polytope",
                "problems": [{"generator": "polytope", "n": 4, "m": 8, "p": 2}],
                "solvers": [],
            }
        )


def test_rerun_identical_except_time(tmp_path):
    cfg_a = small_config(tmp_path / "a")
    cfg_b = small_config(tmp_path / "b")
    ma = run_experiment(cfg_a)
    mb = run_experiment(cfg_b)
    for ea, eb in zip(ma["runs"], mb["runs"]):
        pa = os.path.join(cfg_a.out_dir, ea["trace"])
        pb = os.path.join(cfg_b.out_dir, eb["trace"])
        rows_a = open(pa).read().splitlines()
        rows_b = open(pb).read().splitlines()
        assert len(rows_a) == len(rows_b)
        for la, lb in zip(rows_a, rows_b):
            assert la.rsplit(",", 1)[0] == lb.rsplit(",", 1)[0]  # drop time_s


def test_parallel_matches_serial(tmp_path):
    cfg_serial = small_config(tmp_path / "serial", jobs=1)
    cfg_par = small_config(tmp_path / "par", jobs=4)
    run_experiment(cfg_serial)
    run_experiment(cfg_par)
    for root, _dirs, files in os.walk(cfg_serial.out_dir):
        for name in files:
            if not name.endswith(".csv"):
                continue
            rel = os.path.relpath(os.path.join(root, name), cfg_serial.out_dir)
            a = open(os.path.join(cfg_serial.out_dir, rel)).read().splitlines()
            b = open(os.path.join(cfg_par.out_dir, rel)).read().splitlines()
            assert [l.rsplit(",", 1)[0] for l in a] == [l.rsplit(",", 1)[0] for l in b]


def test_per_run_seed_is_order_independent():
    assert run_seed(7, "polytope_n8_m24_p2") == run_seed(7, "polytope_n8_m24_p2")
    assert run_seed(7, "polytope_n8_m24_p2") != run_seed(7, "polytope_n8_m24_p3")
    assert run_seed(8, "polytope_n8_m24_p2") != run_seed(7, "polytope_n8_m24_p2")


def test_problem_id_roundtrip():
    spec = {"generator": "polytope", "n": 8, "m": 24, "p": 2}
    pid = problem_id(spec)
    parsed = parse_problem_id(pid)
    assert parsed["generator"] == "polytope"
    assert parsed["n"] == 8 and parsed["m"] == 24 and parsed["p"] == 2

    spec2 = {"generator": "softmax", "n": 10, "m": 30, "mu": 0.05}
    assert parse_problem_id(problem_id(spec2))["mu"] == 0.05

    # generator names containing digits parse whole
    spec3 = {"generator": "l1_quadratic", "n": 8, "weight": 0.5}
    parsed3 = parse_problem_id(problem_id(spec3))
    assert parsed3["generator"] == "l1_quadratic"
    assert parsed3["weight"] == 0.5


def test_failed_run_recorded_not_fatal(tmp_path):
    cfg = ExperimentConfig.from_dict(
        {
            "schema_version": 1,
            "experiment": "custom",
            "out_dir": str(tmp_path / "out"),
            "problems": [{"generator": "softmax", "n": 10, "m": 5, "mu": 0.1}],  # m < n fails
            "solvers": [{"id": "sun", "method": "super_universal"}],
        }
    )
    manifest = run_experiment(cfg)
    assert manifest["totals"]["errors"] == 1
    assert manifest["runs"][0]["status"] == "error"
    assert "m >= n" in manifest["runs"][0]["error"]


def test_cli_check_and_run(tmp_path, capsys):
    config_path = tmp_path / "cfg.json"
    raw = {
        "schema_version": 1,
        "experiment": "worst",
        "out_dir": str(tmp_path / "out"),
        "problems": [{"generator": "worst", "n": 6, "q": 3}],
        "solvers": [{"id": "sun", "method": "super_universal"}],
        "budgets": {"max_iterations": 50},
    }
    config_path.write_text(json.dumps(raw))
    assert cli_main(["check", str(config_path)]) == 0
    assert cli_main(["run", str(config_path)]) == 0
    assert (tmp_path / "out" / "worst" / "manifest.json").exists()


def test_cli_check_shipped_example_config():
    shipped = os.path.join(os.path.dirname(__file__), "..", "configs", "polytope_small.json")
    assert cli_main(["check", shipped]) == 0


def test_cli_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 99}))
    assert cli_main(["check", str(bad)]) == 1


def test_cli_unwritable_output(tmp_path):
    # out_dir nested under a regular file: creation must fail before any run
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    config_path = tmp_path / "cfg.json"
    config_path.write_text(
        json.dumps(
            {
                "schema_version": 1,
                "experiment": "worst",
                "out_dir": str(blocker / "out"),
                "problems": [{"generator": "worst", "n": 4, "q": 3}],
                "solvers": [{"id": "sun", "method": "super_universal"}],
            }
        )
    )
    assert cli_main(["run", str(config_path)]) == 1
    assert not (blocker / "out").exists()


def test_cli_fdtest(capsys):
    assert cli_main(["fdtest", "worst_n6_q3"]) == 0
    out = capsys.readouterr().out
    assert "max grad error" in out


def test_cli_unknown_command_exits_one():
    assert cli_main(["frobnicate"]) == 1
    assert cli_main([]) == 1


def test_demo_runs_quickly(tmp_path):
    started = time.perf_counter()
    code = cli_main(["demo", "--out", str(tmp_path / "demo")])
    elapsed = time.perf_counter() - started
    assert code == 0
    assert elapsed <= 30.0
    manifest = json.load(open(tmp_path / "demo" / "polytope" / "manifest.json"))
    successes = [r for r in manifest["runs"] if r["error"] is None]
    assert len(successes) >= 4
    assert manifest["totals"]["runs"] == len(DEMO_CONFIG["problems"]) * len(DEMO_CONFIG["solvers"])