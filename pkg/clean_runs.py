#!/usr/bin/env python3
"""
clean_runs.py

Removes experiment run artifacts to provide a clean repository state.
Keeps artifacts/<command>/ directories (and any dotfiles in them) but removes
every run folder below them.
"""

import shutil
import sys
from pathlib import Path

COMMANDS = ("sweep", "fit-exponent", "identities", "dist-audit", "oracle")


def clean_artifacts(artifacts_root: Path) -> int:
    """Remove all run folders below ``artifacts_root``; returns the number removed."""

    removed = 0
    for command in COMMANDS:
        command_dir = artifacts_root / command
        if not command_dir.exists():
            continue
        for run_dir in command_dir.iterdir():
            if run_dir.name.startswith("."):
                continue
            print(f"Removing: {run_dir}")
            if run_dir.is_dir():
                shutil.rmtree(run_dir)
            else:
                run_dir.unlink()
            removed += 1
    return removed


if __name__ == "__main__":
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent / "artifacts"
    count = clean_artifacts(root)
    print(f"\nCleanup complete: {count} run folder(s) removed under {root}")
