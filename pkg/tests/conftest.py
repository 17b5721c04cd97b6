from __future__ import annotations

import os
import subprocess
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import pytest

from runs.run_artifacts import find_latest_run_id


def _run_command(
    cmd: List[str], cwd: Path, env: Optional[Dict[str, str]] = None, expected_code: int = 0
) -> subprocess.CompletedProcess:
    result = subprocess.run(cmd, cwd=cwd, env=env, capture_output=True, text=True)
    if result.returncode != expected_code:
        msg = (
            f"Command exited with {result.returncode}, expected {expected_code}: {' '.join(cmd)}\n"
            f"stdout:\n{result.stdout}\n"
            f"stderr:\n{result.stderr}"
        )
        raise AssertionError(msg)
    return result


@pytest.fixture()
def repo_root() -> Path:
    return Path(__file__).resolve().parents[1]


@pytest.fixture()
def artifacts_root(tmp_path: Path) -> Path:
    return tmp_path / "artifacts"


@pytest.fixture()
def cli_env(repo_root: Path) -> Dict[str, str]:
    env = {k: v for k, v in os.environ.items() if not k.startswith("LPP_")}
    env["PYTHONPATH"] = str(repo_root / "src")
    return env


@pytest.fixture()
def run_cli(
    repo_root: Path, artifacts_root: Path, cli_env: Dict[str, str]
) -> Callable[..., subprocess.CompletedProcess]:
    """Run `python -m runs.orchestrator <command> <args>` with artifacts under tmp_path."""

    def run(command: str, *args: str, expected_code: int = 0, env: Optional[Dict[str, str]] = None):
        cmd = [
            sys.executable,
            "-m",
            "runs.orchestrator",
            command,
            *args,
            "--artifacts-root",
            str(artifacts_root),
        ]
        return _run_command(cmd, cwd=repo_root, env={**cli_env, **(env or {})}, expected_code=expected_code)

    return run


@pytest.fixture()
def latest_run(artifacts_root: Path) -> Callable[[str], Path]:
    def find(command: str) -> Path:
        root = artifacts_root / command
        return root / find_latest_run_id(root)

    return find
