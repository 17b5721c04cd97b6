from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from runs.run_artifacts import (
    RUN_ID_RE,
    build_metadata,
    build_run_id,
    build_run_paths,
    finalize_metadata,
    iso_utc,
    json_safe,
    read_csv,
    write_csv,
    write_json,
)

START = datetime(2024, 6, 11, 8, 30, 0, tzinfo=timezone.utc)


@pytest.mark.unit
def test_generated_run_id_format() -> None:
    run_id = build_run_id(None, START)
    assert RUN_ID_RE.match(run_id)
    assert run_id.startswith("20240611_083000_#")


@pytest.mark.unit
def test_supplied_run_id_is_validated() -> None:
    assert build_run_id("20240611_083000_#abcdef", START) == "20240611_083000_#abcdef"
    with pytest.raises(ValueError):
        build_run_id("run-1", START)


@pytest.mark.unit
def test_run_paths_layout(tmp_path: Path) -> None:
    paths = build_run_paths(str(tmp_path), "sweep", "20240611_083000_#abcdef")
    assert paths.run_dir == tmp_path / "sweep" / "20240611_083000_#abcdef"
    assert paths.metadata_path.parent == paths.data_dir
    assert paths.report_path.parent == paths.report_dir


@pytest.mark.unit
def test_csv_timestamp_line(tmp_path: Path) -> None:
    frame = pd.DataFrame({"n": [2], "corr": [1.0 / 3.0]})
    stamped = tmp_path / "a.csv"
    plain = tmp_path / "b.csv"
    write_csv(frame, stamped, timestamp=START)
    write_csv(frame, plain)
    lines = stamped.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# generated_utc=2024-06-11T08:30:00Z"
    assert lines[1:] == plain.read_text(encoding="utf-8").splitlines()
    assert read_csv(stamped)["corr"].iloc[0] == 1.0 / 3.0


@pytest.mark.unit
def test_json_safe_values(tmp_path: Path) -> None:
    payload = {"a": np.float64(math.nan), "b": [np.int64(3), math.inf], "c": {"d": (1, -math.inf)}}
    assert json_safe(payload) == {"a": "nan", "b": [3, "inf"], "c": {"d": [1, "-inf"]}}
    path = tmp_path / "s.json"
    write_json(payload, path)
    assert json.loads(path.read_text(encoding="utf-8"))["b"] == [3, "inf"]


@pytest.mark.unit
def test_metadata_lifecycle() -> None:
    metadata = build_metadata("oracle", "20240611_083000_#abcdef", START, {"seed": np.int64(3)})
    assert metadata["config"] == {"seed": 3}
    end = START.replace(second=5)
    metadata = finalize_metadata(metadata, end, START, "success", ["x.csv"], {"passed": True})
    assert metadata["run"]["duration_s"] == 5.0
    assert metadata["run"]["ended_utc"] == iso_utc(end)
    assert metadata["summary"] == {"passed": True}
    assert "error" not in metadata["run"]
