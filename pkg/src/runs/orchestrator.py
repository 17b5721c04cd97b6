"""
orchestrator.py

DESCRIPTION
Command-line front end of the experiment harness.

Sub-commands:
  sweep          transition sweep over (n, t) or (n, alpha) cells
  fit-exponent   log-log fit of Var(T) against n
  identities     identity and inequality suite (exit 1 when a check fails)
  dist-audit     tail audit of weight laws
  oracle         batch kernels against brute-force enumeration (exit 1 on mismatch)

Each run produces:
  artifacts/<command>/<YYYYMMDD_HHMMSS>_#<random>/
    data/
      <command>.csv, summary.json   (unless redirected with --out / --json-summary)
      metadata.yaml
      run_log.txt
    reports/
      run_report.html

Exit codes: 0 success, 1 suite failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from lpp.errors import ConfigurationError, GridTooLargeError, PathCapExceededError

from runs.distribution_audit import run_distribution_audit
from runs.exponent_fit import run_exponent_fit
from runs.identity_suite import run_identity_suite
from runs.oracle_suite import run_oracle_suite
from runs.run_artifacts import (
    build_metadata,
    build_run_id,
    build_run_paths,
    close_run_logger,
    configure_run_logger,
    ensure_dir,
    finalize_metadata,
    iso_utc,
    report_rows,
    should_emit_stdout,
    utc_now,
    write_csv,
    write_html_report,
    write_json,
    write_yaml,
)
from runs.run_config import (
    COMMANDS,
    ENV_PREFIX,
    SETTINGS,
    audit_config,
    command_keys,
    exponent_fit_config,
    identity_suite_config,
    load_acceptance_bands,
    oracle_config,
    output_settings,
    resolve_settings,
    sweep_config,
)
from runs.sweep import check_transition_separation, run_transition_sweep

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

SUMMARY_FILE = "summary.json"

CONFIG_ERRORS = (ConfigurationError, GridTooLargeError, PathCapExceededError)
# flag parsing and config building also reject plain ValueError (bad seed, bad run id)
SETUP_ERRORS = CONFIG_ERRORS + (ValueError,)

DESCRIPTIONS = {
    "sweep": "Transition sweep: passage statistics per (n, t) cell.",
    "fit-exponent": "Fit the exponent of Var(T) in n on a log-log scale.",
    "identities": "Run the covariance-formula, derivative, bound and monotonicity checks.",
    "dist-audit": "Conditional tail statistics and moment conditions of weight laws.",
    "oracle": "Compare the batch kernels with brute-force path enumeration.",
}


@dataclass(frozen=True)
class CommandResult:
    """Output of one runner.

    Attributes:
        frame: Rows of the primary CSV.
        summary: JSON summary document.
        failed: True when a suite verdict failed (exit code 1).
    """

    frame: pd.DataFrame
    summary: Dict[str, Any]
    failed: bool = False


# -----------------------------
# Runners
# -----------------------------


def _sweep(values: Mapping[str, Any], sources: Mapping[str, str]) -> CommandResult:
    config = sweep_config(values, sources)
    frame, summary = run_transition_sweep(config)
    if config.alpha_mode:
        summary["transition_separation"] = check_transition_separation(frame, load_acceptance_bands())
    return CommandResult(frame, summary)


def _fit_exponent(values: Mapping[str, Any], sources: Mapping[str, str]) -> CommandResult:
    frame, summary = run_exponent_fit(exponent_fit_config(values), load_acceptance_bands())
    return CommandResult(frame, summary)


def _identities(values: Mapping[str, Any], sources: Mapping[str, str]) -> CommandResult:
    frame, document = run_identity_suite(identity_suite_config(values))
    return CommandResult(frame, document, failed=not document["passed"])


def _dist_audit(values: Mapping[str, Any], sources: Mapping[str, str]) -> CommandResult:
    frame, summary = run_distribution_audit(audit_config(values))
    return CommandResult(frame, summary)


def _oracle(values: Mapping[str, Any], sources: Mapping[str, str]) -> CommandResult:
    frame, summary = run_oracle_suite(oracle_config(values))
    return CommandResult(frame, summary, failed=not summary["passed"])


RUNNERS: Dict[str, Callable[[Mapping[str, Any], Mapping[str, str]], CommandResult]] = {
    "sweep": _sweep,
    "fit-exponent": _fit_exponent,
    "identities": _identities,
    "dist-audit": _dist_audit,
    "oracle": _oracle,
}

CONFIG_BUILDERS: Dict[str, Callable[[Mapping[str, Any], Mapping[str, str]], Any]] = {
    "sweep": sweep_config,
    "fit-exponent": lambda values, _: exponent_fit_config(values),
    "identities": lambda values, _: identity_suite_config(values),
    "dist-audit": lambda values, _: audit_config(values),
    "oracle": lambda values, _: oracle_config(values),
}


def csv_name(command: str) -> str:
    return command.replace("-", "_") + ".csv"


# -----------------------------
# Run lifecycle
# -----------------------------


def run_command(
    command: str,
    values: Mapping[str, Any],
    sources: Mapping[str, str],
    now_fn: Callable[[], datetime] = utc_now,
) -> Tuple[int, Dict[str, Any]]:
    """Execute one command inside its own run directory.

    Returns:
        (exit code, JSON-serializable payload summarizing the run).
    """

    start_dt = now_fn()
    run_id = build_run_id(values.get("RUN_ID"), start_dt)
    paths = build_run_paths(values["ARTIFACTS_ROOT"], command, run_id)
    ensure_dir(paths.data_dir)
    ensure_dir(paths.report_dir)

    logger = configure_run_logger(paths.log_path)
    logger.info("RUN_START run_id=%s command=%s", run_id, command)
    logger.info("CONFIG %s", " ".join(f"{k}={values[k]}({sources[k]})" for k in command_keys(command)))

    settings = {k.lower(): values[k] for k in command_keys(command)}
    metadata = build_metadata(command, run_id, start_dt, settings)
    metadata["config_sources"] = {k.lower(): sources[k] for k in command_keys(command)}
    out = output_settings(values)
    outputs: List[str] = []
    result: Optional[CommandResult] = None
    error: Optional[str] = None
    unexpected: Optional[BaseException] = None

    try:
        result = RUNNERS[command](values, sources)
        csv_path = Path(out.out) if out.out else paths.data_dir / csv_name(command)
        json_path = Path(out.json_summary) if out.json_summary else paths.data_dir / SUMMARY_FILE
        write_csv(result.frame, csv_path, timestamp=start_dt if out.timestamp else None)
        write_json(result.summary, json_path)
        outputs = [str(csv_path), str(json_path)]
        status = "failed" if result.failed else "success"
        exit_code = EXIT_FAILED if result.failed else EXIT_OK
    except CONFIG_ERRORS as exc:
        error = f"{type(exc).__name__}: {exc}"
        status, exit_code = "config_error", EXIT_CONFIG
        logger.error("CONFIG_ERROR %s", error)
    except Exception as exc:  # noqa: BLE001
        error = traceback.format_exc()
        status, exit_code = "error", EXIT_FAILED
        logger.error("RUN_ERROR %s: %s", type(exc).__name__, exc)
        unexpected = exc

    end_dt = now_fn()
    summary = result.summary if result is not None else {}
    scalar_summary = {k: v for k, v in summary.items() if not isinstance(v, (list, dict))}
    metadata = finalize_metadata(metadata, end_dt, start_dt, status, outputs, scalar_summary, error)
    write_yaml(metadata, paths.metadata_path)

    verdicts = summary.get("verdicts", []) if command == "identities" else []
    write_html_report(
        {
            "command": command,
            "run_id": run_id,
            "status": status,
            "start_dt": iso_utc(start_dt),
            "end_dt": iso_utc(end_dt),
            "config": settings,
            "outputs": outputs,
            "verdicts": verdicts,
            "error": error,
            **report_rows(result.frame if result is not None else None),
        },
        paths.report_path,
    )
    logger.info(
        "RUN_END run_id=%s duration_s=%.3f status=%s exit_code=%s",
        run_id,
        metadata["run"]["duration_s"],
        status,
        exit_code,
    )
    close_run_logger(logger)
    if unexpected is not None:
        raise unexpected

    return exit_code, {
        "run_id": run_id,
        "command": command,
        "artifacts_dir": str(paths.run_dir),
        "status": status,
        "exit_code": exit_code,
        "outputs": outputs,
    }


# -----------------------------
# CLI
# -----------------------------


def _add_setting(parser: argparse.ArgumentParser, key: str) -> None:
    setting = SETTINGS[key]
    help_text = f"{setting.help} [config key {key}, env {ENV_PREFIX}{key}]"
    if key == "NO_TIMESTAMP":
        parser.add_argument(
            setting.flag, dest=setting.dest, action="store_const", const=True, default=None, help=help_text
        )
        return
    parser.add_argument(
        setting.flag,
        dest=setting.dest,
        type=setting.parse,
        default=None,
        metavar=setting.metavar or None,
        help=help_text,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpp",
        description="Dynamic last-passage percolation experiments.",
        epilog=(
            "Precedence: defaults < LPP_* environment < --config file < flags. "
            "Exit codes: 0 ok, 1 failed check, 2 configuration error."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        cmd = sub.add_parser(command, help=DESCRIPTIONS[command], description=DESCRIPTIONS[command])
        cmd.add_argument("--config", default=None, metavar="PATH", help="Flat KEY=value config file.")
        for key in command_keys(command):
            _add_setting(cmd, key)
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entrypoint for the experiment harness."""

    args = parse_args(argv)
    cli = {key: getattr(args, SETTINGS[key].dest, None) for key in command_keys(args.command)}
    try:
        values, sources = resolve_settings(args.command, cli, args.config)
        CONFIG_BUILDERS[args.command](values, sources)
        build_run_id(values["RUN_ID"], utc_now())
    except SETUP_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    exit_code, payload = run_command(args.command, values, sources)
    if should_emit_stdout():
        print(json.dumps(payload))
    return exit_code


if __name__ == "__main__":
    raise SystemExit(main())
