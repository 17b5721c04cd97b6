"""
run_artifacts.py

DESCRIPTION
Run-directory plumbing shared by every experiment command.

Each run produces:
  artifacts/<command>/<YYYYMMDD_HHMMSS>_#<random>/
    data/
      <command outputs: *.csv, summary.json>
      metadata.yaml
      run_log.txt
    reports/
      run_report.html

Key properties:
- UTC timestamps (timezone-aware) in metadata and logs only; data files carry none
  unless the optional CSV header line is requested
- run id per run: YYYYMMDD_HHMMSS_#+random (8 hex chars)
- CSV floats written with 17 significant digits
"""

from __future__ import annotations

import json
import logging
import math
import os
import platform
import re
import sys
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import scipy
import yaml
from jinja2 import Template

RUN_ID_RE = re.compile(r"^(?P<ts>\d{8}_\d{6})_#(?P<suffix>[0-9a-fA-F]{6,32})$")

DEFAULT_ARTIFACTS_ROOT = os.environ.get("LPP_ARTIFACTS_ROOT", "artifacts")

CSV_FLOAT_FORMAT = "%.17g"
METADATA_FILE = "metadata.yaml"
RUN_LOG_FILE = "run_log.txt"
REPORT_FILE = "run_report.html"
REPORT_ROW_LIMIT = 200


def should_emit_stdout() -> bool:
    return os.environ.get("PYTEST_CURRENT_TEST") is None


HTML_REPORT_TEMPLATE = """\
<html>
<head><title>{{ command }} run report - {{ run_id }}</title></head>
<body>
<h1>{{ command }} run report</h1>
<p>Run ID: {{ run_id }}</p>
<p>Status: {{ status }}</p>
<p>Run start (UTC): {{ start_dt }}</p>
<p>Run end (UTC): {{ end_dt }}</p>

<h2>Configuration</h2>
<table border="1" cellpadding="6" cellspacing="0">
{% for key, value in config.items() %}
<tr><th>{{ key }}</th><td>{{ value }}</td></tr>
{% endfor %}
</table>

<h2>Outputs</h2>
<ul>
{% for path in outputs %}
<li style="font-family: monospace;">{{ path }}</li>
{% endfor %}
</ul>

{% if verdicts %}
<h2>Verdicts</h2>
<table border="1" cellpadding="6" cellspacing="0">
<tr><th>check</th><th>status</th><th>lhs</th><th>rhs</th><th>tolerance</th><th>reason</th></tr>
{% for v in verdicts %}
<tr>
  <td>{{ v.name }}</td>
  <td>{{ v.status }}</td>
  <td>{{ v.lhs }}</td>
  <td>{{ v.rhs }}</td>
  <td>{{ v.tolerance }}</td>
  <td>{{ v.reason or "" }}</td>
</tr>
{% endfor %}
</table>
{% endif %}

{% if columns %}
<h2>Rows{% if truncated %} (first {{ rows|length }}){% endif %}</h2>
<table border="1" cellpadding="6" cellspacing="0">
<tr>{% for c in columns %}<th>{{ c }}</th>{% endfor %}</tr>
{% for r in rows %}
<tr>{% for c in columns %}<td>{{ r[c] }}</td>{% endfor %}</tr>
{% endfor %}
</table>
{% endif %}

{% if error %}
<h2>Error</h2>
<pre>{{ error }}</pre>
{% endif %}
</body>
</html>
"""


@dataclass(frozen=True)
class RunPaths:
    """Materialized artifact paths for one command run."""

    run_dir: Path
    data_dir: Path
    report_dir: Path
    log_path: Path
    metadata_path: Path
    report_path: Path


# -----------------------------
# Helpers
# -----------------------------


def utc_now() -> datetime:
    """Return a timezone-aware UTC timestamp."""

    return datetime.now(timezone.utc)


def iso_utc(dt: datetime) -> str:
    """Return ISO-8601 format with a Z suffix for UTC timestamps."""

    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.isoformat().replace("+00:00", "Z")


def build_run_id(run_id: Optional[str], start_dt: datetime) -> str:
    """Return the supplied run id, or a timestamp-based one."""

    if run_id:
        if not RUN_ID_RE.match(run_id):
            raise ValueError(f"Run id '{run_id}' does not match YYYYMMDD_HHMMSS_#<hex>")
        return run_id
    return f"{start_dt.strftime('%Y%m%d_%H%M%S')}_#{uuid.uuid4().hex[:8]}"


def build_run_paths(artifacts_root: str, command: str, run_id: str) -> RunPaths:
    run_dir = Path(artifacts_root) / command / run_id
    data_dir = run_dir / "data"
    report_dir = run_dir / "reports"
    return RunPaths(
        run_dir=run_dir,
        data_dir=data_dir,
        report_dir=report_dir,
        log_path=data_dir / RUN_LOG_FILE,
        metadata_path=data_dir / METADATA_FILE,
        report_path=report_dir / REPORT_FILE,
    )


def ensure_dir(path: Path) -> None:
    """Create a directory if it does not exist."""

    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"Cannot create directory {path}: {exc}") from exc


def find_latest_run_id(root: Path) -> str:
    if not root.exists():
        raise FileNotFoundError(f"Missing run root directory: {root}")
    run_ids = [p.name for p in root.iterdir() if p.is_dir() and RUN_ID_RE.match(p.name)]
    if not run_ids:
        raise FileNotFoundError(f"No runs found in {root}")
    return sorted(run_ids)[-1]


# -----------------------------
# Writers
# -----------------------------


def write_yaml(data: Dict[str, Any], path: Path) -> None:
    """Serialize a dictionary to a YAML file."""

    try:
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(data, f, sort_keys=False, allow_unicode=True)
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc


def read_yaml(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def json_safe(value: Any) -> Any:
    """Plain JSON form: numpy scalars unwrapped, non-finite floats as strings."""

    value = _plain(value)
    if isinstance(value, list):
        return [json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def write_json(payload: Dict[str, Any], path: Path) -> None:
    try:
        ensure_dir(Path(path).parent)
        Path(path).write_text(json.dumps(json_safe(payload), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc


def write_csv(frame: pd.DataFrame, path: Path, timestamp: Optional[datetime] = None) -> None:
    """Write comma-separated UTF-8 with 17-digit floats.

    With ``timestamp`` the file starts with a ``# generated_utc=<ISO>`` line.
    """

    try:
        ensure_dir(Path(path).parent)
        with open(path, "w", encoding="utf-8", newline="") as f:
            if timestamp is not None:
                f.write(f"# generated_utc={iso_utc(timestamp)}\n")
            frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_html_report(context: Dict[str, Any], path: Path) -> None:
    """Render and write the HTML report for the run."""

    template = Template(HTML_REPORT_TEMPLATE)
    html = template.render(**context)
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(html)
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc


def report_rows(frame: Optional[pd.DataFrame]) -> Dict[str, Any]:
    """Columns/rows context of the report table."""

    if frame is None or frame.empty:
        return {"columns": [], "rows": [], "truncated": False}
    head = frame.head(REPORT_ROW_LIMIT)
    return {
        "columns": list(head.columns),
        "rows": head.to_dict(orient="records"),
        "truncated": len(frame) > REPORT_ROW_LIMIT,
    }


# -----------------------------
# Logging and metadata
# -----------------------------


def configure_run_logger(log_path: Path, name: str = "lpp") -> logging.Logger:
    """Attach a run-local file handler (and a console handler outside pytest) to the ``name`` logger.

    Library loggers (``lpp.*``) propagate into it, so their events land in the run log.
    """

    ensure_dir(Path(log_path).parent)
    logger = logging.getLogger(name)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(logging.INFO)
    logger.propagate = False
    formatter = logging.Formatter("%(asctime)sZ %(levelname)s %(message)s")
    formatter.converter = time.gmtime
    file_handler = logging.FileHandler(log_path, encoding="utf-8")
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)
    if should_emit_stdout():
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)
    return logger


def close_run_logger(logger: logging.Logger) -> None:
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


def build_metadata(command: str, run_id: str, start_dt: datetime, settings: Dict[str, Any]) -> Dict[str, Any]:
    """Initialize metadata payload for the run."""

    return {
        "run": {
            "run_id": run_id,
            "command": command,
            "started_utc": iso_utc(start_dt),
        },
        "env": {
            "python": sys.version.replace("\n", " "),
            "numpy": getattr(np, "__version__", "unknown"),
            "scipy": getattr(scipy, "__version__", "unknown"),
            "pandas": getattr(pd, "__version__", "unknown"),
            "platform": platform.platform(),
        },
        "config": {k: _plain(v) for k, v in settings.items()},
        "outputs": [],
        "summary": {},
    }


def finalize_metadata(
    metadata: Dict[str, Any],
    end_dt: datetime,
    start_dt: datetime,
    status: str,
    outputs: List[str],
    summary: Dict[str, Any],
    error: Optional[str] = None,
) -> Dict[str, Any]:
    metadata["run"]["ended_utc"] = iso_utc(end_dt)
    metadata["run"]["duration_s"] = (end_dt - start_dt).total_seconds()
    metadata["run"]["status"] = status
    metadata["outputs"] = list(outputs)
    metadata["summary"] = {k: _plain(v) for k, v in summary.items()}
    if error:
        metadata["run"]["error"] = error
    return metadata


def _plain(value: Any) -> Any:
    """YAML-safe form of config and summary values."""

    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


