from __future__ import annotations

from pathlib import Path

import pytest

from tests.helpers.assertions import assert_files_identical, assert_metadata_run, assert_run_layout
from tests.helpers.io import read_json, read_yaml

SWEEP = ["--dist", "exp:1.0", "--dim", "2", "--n", "2,3", "--t", "0,0.3,1", "--reps", "150", "--seed", "5"]


@pytest.mark.e2e
def test_every_command_runs(run_cli, latest_run) -> None:
    run_cli("sweep", *SWEEP)
    run_cli("fit-exponent", "--n", "1,2,4,8", "--reps", "200")
    run_cli("identities", "--dist", "const:2.0", "--n", "2", "--t", "0:1:11", "--reps", "100")
    run_cli("dist-audit", "--k-grid", "0,1")
    run_cli("oracle", "--dim", "2", "--n", "1,2", "--reps", "10")
    for command, csv_name in [
        ("sweep", "sweep.csv"),
        ("fit-exponent", "fit_exponent.csv"),
        ("identities", "identities.csv"),
        ("dist-audit", "dist_audit.csv"),
        ("oracle", "oracle.csv"),
    ]:
        run_dir = latest_run(command)
        assert_run_layout(run_dir, csv_name)
        assert_metadata_run(read_yaml(run_dir / "data" / "metadata.yaml"), run_dir, command, "success")
    fit = read_json(latest_run("fit-exponent") / "data" / "summary.json")
    assert {"slope", "slope_stderr", "band"} <= set(fit)


@pytest.mark.e2e
def test_reruns_are_byte_identical(run_cli, tmp_path: Path) -> None:
    outputs = []
    for i, (threads, env) in enumerate([("1", {}), ("1", {}), ("3", {"LPP_CHUNK_ELEMENTS": "40"})]):
        csv_path = tmp_path / f"sweep_{i}.csv"
        json_path = tmp_path / f"summary_{i}.json"
        run_cli(
            "sweep",
            *SWEEP,
            "--threads",
            threads,
            "--no-timestamp",
            "--out",
            str(csv_path),
            "--json-summary",
            str(json_path),
            env=env,
        )
        outputs.append((csv_path, json_path))
    for csv_path, json_path in outputs[1:]:
        assert_files_identical(outputs[0][0], csv_path)
        assert_files_identical(outputs[0][1], json_path)
    assert not outputs[0][0].read_text(encoding="utf-8").startswith("#")


@pytest.mark.e2e
def test_environment_and_config_file_layers(run_cli, latest_run, tmp_path: Path) -> None:
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("# small sweep\nN=2\nT=0,0.5\nSEED=9\n", encoding="utf-8")
    run_cli("sweep", "--config", str(cfg), "--seed", "10", env={"LPP_REPS": "120", "LPP_SEED": "8"})
    metadata = read_yaml(latest_run("sweep") / "data" / "metadata.yaml")
    assert metadata["config"]["reps"] == 120
    assert metadata["config"]["seed"] == 10
    assert metadata["config"]["n"] == [2]
    assert metadata["config_sources"] == {
        **metadata["config_sources"],
        "reps": "env",
        "seed": "cli",
        "n": "file",
        "t": "file",
        "dist": "default",
    }


@pytest.mark.e2e
def test_supplied_run_id(run_cli, artifacts_root: Path) -> None:
    run_cli("dist-audit", "--k-grid", "0", "--run-id", "20240611_083000_#c0ffee")
    assert (artifacts_root / "dist-audit" / "20240611_083000_#c0ffee" / "data" / "dist_audit.csv").exists()


@pytest.mark.e2e
@pytest.mark.parametrize(
    "args",
    [
        ["sweep", "--t", "0.1", "--alpha", "0.5"],
        ["sweep", "--t", "1.5"],
        ["sweep", "--reps", "10"],
        ["sweep", "--dim", "1"],
        ["sweep", "--dist", "pareto:1.5"],
        ["fit-exponent", "--n", "16,32"],
        ["identities", "--n", "2,3"],
        ["dist-audit", "--run-id", "latest"],
        ["oracle", "--dim", "2", "--n", "12", "--reps", "2"],
        ["sweep", "--no-such-flag"],
    ],
)
def test_configuration_errors_exit_2(run_cli, args: list) -> None:
    run_cli(*args, expected_code=2)


@pytest.mark.e2e
def test_unknown_config_key_exits_2(run_cli, tmp_path: Path) -> None:
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("REPS=200\nREPLICATES=3\n", encoding="utf-8")
    result = run_cli("sweep", "--config", str(cfg), expected_code=2)
    assert "REPLICATES" in result.stderr


@pytest.mark.e2e
def test_grid_budget_exits_2(run_cli) -> None:
    run_cli("sweep", "--n", "40", "--t", "0.5", "--reps", "100", expected_code=2, env={"LPP_MAX_VERTICES": "100"})
