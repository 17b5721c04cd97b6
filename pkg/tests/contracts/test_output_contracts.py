from __future__ import annotations

import pytest

from runs.distribution_audit import AUDIT_COLUMNS
from runs.identity_suite import VERDICT_COLUMNS
from runs.oracle_suite import ORACLE_COLUMNS
from runs.sweep import SWEEP_COLUMNS
from tests.helpers.assertions import (
    assert_csv_columns_exact,
    assert_csv_float_columns,
    assert_csv_rowcount_at_least,
    assert_csv_unique_on,
    assert_metadata_run,
    assert_run_layout,
    assert_yaml_has_fields,
)
from tests.helpers.io import read_csv_rows, read_json, read_yaml

SWEEP_ARGS = ["--dist", "exp:1.0", "--dim", "2", "--n", "2,3", "--t", "0,0.5,1", "--reps", "200", "--seed", "7"]

METADATA_FIELDS = [
    "run.run_id",
    "run.command",
    "run.started_utc",
    "run.ended_utc",
    "run.duration_s",
    "run.status",
    "env.python",
    "env.numpy",
    "env.scipy",
    "env.pandas",
    "config.seed",
    "config_sources.seed",
    "outputs",
    "summary",
]


@pytest.mark.contract
def test_sweep_csv_contract(run_cli, latest_run) -> None:
    run_cli("sweep", *SWEEP_ARGS)
    data = latest_run("sweep") / "data"
    csv_path = data / "sweep.csv"
    assert csv_path.read_text(encoding="utf-8").startswith("# generated_utc=")
    assert_csv_columns_exact(csv_path, SWEEP_COLUMNS)
    assert_csv_rowcount_at_least(csv_path, 6)
    assert_csv_unique_on(csv_path, ["n", "t"])
    assert_csv_float_columns(csv_path, ["t", "Q_t", "corr", "corr_se", "l2", "overlap", "var_T", "var_T_se"])
    for row in read_csv_rows(csv_path):
        assert -1.0 <= float(row["corr"]) <= 1.0
        assert float(row["l2"]) >= 0.0
        assert int(row["replicates"]) == 200
    summary = read_json(data / "summary.json")
    assert summary["command"] == "sweep" and summary["mode"] == "t"


@pytest.mark.contract
def test_run_directory_contract(run_cli, latest_run) -> None:
    run_cli("sweep", *SWEEP_ARGS)
    run_dir = latest_run("sweep")
    assert_run_layout(run_dir, "sweep.csv")
    metadata = read_yaml(run_dir / "data" / "metadata.yaml")
    assert_yaml_has_fields(metadata, METADATA_FIELDS)
    assert_metadata_run(metadata, run_dir, "sweep", "success")
    assert metadata["config"]["seed"] == 7
    assert metadata["config_sources"]["seed"] == "cli"
    assert metadata["config_sources"]["threads"] == "default"
    log = (run_dir / "data" / "run_log.txt").read_text(encoding="utf-8")
    for event in ("RUN_START", "CONFIG", "CELL_DONE", "RUN_END"):
        assert event in log


@pytest.mark.contract
def test_identity_document_contract(run_cli, latest_run) -> None:
    run_cli("identities", "--dist", "const:1.0", "--n", "2", "--t", "0:1:11", "--reps", "100")
    data = latest_run("identities") / "data"
    assert_csv_columns_exact(data / "identities.csv", VERDICT_COLUMNS)
    document = read_json(data / "summary.json")
    assert document["passed"] is True
    for verdict in document["verdicts"]:
        assert set(verdict) >= {"name", "status", "lhs", "rhs", "tolerance", "reason"}
        assert verdict["status"] in {"passed", "failed", "skipped"}
        if verdict["status"] == "skipped":
            assert verdict["reason"]
    html = (latest_run("identities") / "reports" / "run_report.html").read_text(encoding="utf-8")
    assert "covariance_formula" in html


@pytest.mark.contract
def test_audit_csv_contract(run_cli, latest_run) -> None:
    run_cli("dist-audit", "--dist", "exp:1.0,unif01", "--k-grid", "0,1,2")
    data = latest_run("dist-audit") / "data"
    assert_csv_columns_exact(data / "dist_audit.csv", AUDIT_COLUMNS)
    rows = read_csv_rows(data / "dist_audit.csv")
    assert {r["dist"] for r in rows} == {"exp:1.0", "unif01"}
    summary = read_json(data / "summary.json")
    assert [d["dist"] for d in summary["distributions"]] == ["exp:1.0", "unif01"]


@pytest.mark.contract
def test_oracle_csv_contract(run_cli, latest_run) -> None:
    run_cli("oracle", "--dist", "exp:1.0,geom:0.5", "--dim", "2", "--n", "1,2", "--reps", "20")
    data = latest_run("oracle") / "data"
    assert_csv_columns_exact(data / "oracle.csv", ORACLE_COLUMNS)
    assert_csv_unique_on(data / "oracle.csv", ["dist", "d", "n", "operation"])
    summary = read_json(data / "summary.json")
    assert summary["passed"] is True
