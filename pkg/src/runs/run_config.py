"""
run_config.py

DESCRIPTION
Layered settings for the experiment commands and the frozen run configs built
from them.

Precedence (lowest first):
  1. built-in defaults of the command
  2. environment variables LPP_<KEY>            (e.g. LPP_REPS=5000)
  3. flat key-value file given with --config    (KEY=value per line, # comments)
  4. command-line flags

Keys are the long flag names in upper case with '-' replaced by '_'
(--vertex-sample -> VERTEX_SAMPLE). Unknown keys in a config file are rejected.
List values are comma separated; float lists also accept start:stop:count.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import yaml
from dotenv import dotenv_values

from lpp.distributions import WeightDistribution, parse_distribution
from lpp.errors import ConfigurationError
from lpp.estimators import MIN_REPLICATES
from lpp.rng import validate_seed

from runs.run_artifacts import DEFAULT_ARTIFACTS_ROOT

ENV_PREFIX = "LPP_"

REPO_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_BANDS_FILE = os.environ.get("LPP_BANDS_FILE", str(REPO_ROOT / "config" / "acceptance_bands.yaml"))

MIN_PILOT_REPLICATES = 1000


# -----------------------------
# Value parsers
# -----------------------------


def parse_int(raw: str) -> int:
    return int(str(raw).strip())


def parse_bool(raw: str) -> bool:
    value = str(raw).strip().lower()
    if value in {"1", "true", "yes", "on"}:
        return True
    if value in {"0", "false", "no", "off", ""}:
        return False
    raise ValueError(f"not a boolean: {raw}")


def parse_int_list(raw: str) -> List[int]:
    return [int(x) for x in str(raw).replace(" ", "").split(",") if x]


def parse_float_list(raw: str) -> List[float]:
    """Comma-separated floats, or start:stop:count for an evenly spaced grid."""

    text = str(raw).replace(" ", "")
    if text.count(":") == 2 and "," not in text:
        start, stop, count = text.split(":")
        return [float(x) for x in np.linspace(float(start), float(stop), int(count))]
    return [float(x) for x in text.split(",") if x]


def parse_spec_list(raw: str) -> List[str]:
    return [x.strip() for x in str(raw).split(",") if x.strip()]


def parse_text(raw: str) -> str:
    return str(raw).strip()


@dataclass(frozen=True)
class Setting:
    """One configurable key."""

    key: str
    parse: Callable[[str], Any]
    help: str
    metavar: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.key.lower().replace("_", "-")

    @property
    def dest(self) -> str:
        return self.key.lower()


SETTINGS: Dict[str, Setting] = {
    s.key: s
    for s in (
        Setting(
            "DIST",
            parse_spec_list,
            "Weight law (exp:<rate>, geom:<p>, pareto:<gamma>, stretched:<shape>:<scale>, unif01, const:<c>);"
            " comma list for dist-audit and oracle.",
            "SPEC",
        ),
        Setting("DIM", parse_int, "Lattice dimension d >= 2.", "D"),
        Setting("N", parse_int_list, "Side lengths n, comma separated.", "LIST"),
        Setting(
            "T",
            parse_float_list,
            "Times in [0,1]: comma list or start:stop:count. The alpha column is then t * n / var_T of the cell.",
            "LIST",
        ),
        Setting(
            "ALPHA",
            parse_float_list,
            "Rescaled times; t = alpha * Var(T) / n with Var(T) from a pilot run, so the alpha column"
            " holds the requested alpha, not t * n / var_T of the cell.",
            "LIST",
        ),
        Setting("REPS", parse_int, "Replicates per cell (random configurations for oracle).", "INT"),
        Setting("PILOT_REPS", parse_int, "Pilot replicates per n for alpha mode (>= 1000).", "INT"),
        Setting("SEED", parse_int, "Master seed, unsigned 64-bit.", "U64"),
        Setting("VERTEX_SAMPLE", parse_int, "Vertices sampled per replicate for influence estimates.", "INT"),
        Setting("K_GRID", parse_float_list, "Truncation levels k for the distribution audit.", "LIST"),
        Setting("THREADS", parse_int, "Worker threads for replicate chunks; results do not depend on it.", "INT"),
        Setting("OUT", parse_text, "Path of the primary CSV output.", "PATH"),
        Setting("JSON_SUMMARY", parse_text, "Path of the JSON summary.", "PATH"),
        Setting("NO_TIMESTAMP", parse_bool, "Omit the '# generated_utc=' first line of CSV outputs.", "BOOL"),
        Setting("ARTIFACTS_ROOT", parse_text, "Root directory of run artifacts.", "PATH"),
        Setting("RUN_ID", parse_text, "Run identifier (YYYYMMDD_HHMMSS_#hex); generated when omitted.", "ID"),
    )
}

COMMON_DEFAULTS: Dict[str, Any] = {
    "SEED": 20240611,
    "THREADS": 1,
    "OUT": None,
    "JSON_SUMMARY": None,
    "NO_TIMESTAMP": False,
    "ARTIFACTS_ROOT": DEFAULT_ARTIFACTS_ROOT,
    "RUN_ID": None,
}

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "sweep": {
        "DIST": ["exp:1.0"],
        "DIM": 2,
        "N": [8, 16, 32],
        "T": [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
        "ALPHA": None,
        "REPS": 2000,
        "PILOT_REPS": MIN_PILOT_REPLICATES,
    },
    "fit-exponent": {
        "DIST": ["exp:1.0"],
        "DIM": 2,
        "N": [16, 32, 64, 128, 256],
        "REPS": 10000,
    },
    "identities": {
        "DIST": ["exp:1.0"],
        "DIM": 2,
        "N": [4],
        "T": parse_float_list("0:1:21"),
        "REPS": 20000,
        "VERTEX_SAMPLE": None,
    },
    "dist-audit": {
        "DIST": ["exp:1.0", "geom:0.5", "pareto:3.0", "pareto:5.0", "stretched:0.5:1.0", "stretched:1.0:1.0", "unif01"],
        "DIM": 2,
        "K_GRID": [0.0, 1.0, 2.0, 5.0, 10.0, 50.0],
    },
    "oracle": {
        "DIST": ["exp:1.0", "geom:0.5", "pareto:3.0", "unif01"],
        "DIM": None,
        "N": None,
        "REPS": 1000,
    },
}

COMMANDS: Tuple[str, ...] = tuple(COMMAND_DEFAULTS)


def command_keys(command: str) -> List[str]:
    return list(COMMAND_DEFAULTS[command]) + list(COMMON_DEFAULTS)


# -----------------------------
# Layering
# -----------------------------


def _parse(key: str, raw: Any, source: str) -> Any:
    try:
        return SETTINGS[key].parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"Invalid value for {key} from {source}: {raw!r} ({exc})") from exc


def read_config_file(path: str) -> Dict[str, str]:
    """Read a flat KEY=value file; unknown keys are an error."""

    if not Path(path).is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    values = {str(k).strip().upper(): v for k, v in dotenv_values(path).items()}
    unknown = sorted(k for k in values if k not in SETTINGS)
    if unknown:
        raise ConfigurationError(f"Unknown key(s) in {path}: {', '.join(unknown)}")
    return {k: v for k, v in values.items() if v is not None}


def resolve_settings(
    command: str,
    cli_values: Mapping[str, Any],
    config_path: Optional[str] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> Tuple[Dict[str, Any], Dict[str, str]]:
    """Return (values, sources) for every key of ``command``.

    ``cli_values`` maps keys to already-parsed flag values; None means "not given".
    """

    if command not in COMMAND_DEFAULTS:
        raise ConfigurationError(f"Unknown command '{command}'")
    environ = os.environ if environ is None else environ
    keys = command_keys(command)
    values: Dict[str, Any] = {**COMMON_DEFAULTS, **COMMAND_DEFAULTS[command]}
    sources = {k: "default" for k in keys}

    for key in keys:
        raw = environ.get(ENV_PREFIX + key)
        if raw is not None:
            values[key] = _parse(key, raw, f"${ENV_PREFIX}{key}")
            sources[key] = "env"

    if config_path:
        for key, raw in read_config_file(config_path).items():
            if key in values:
                values[key] = _parse(key, raw, config_path)
                sources[key] = "file"

    for key in keys:
        value = cli_values.get(key)
        if value is not None:
            values[key] = value
            sources[key] = "cli"
    return values, sources


# -----------------------------
# Run configs
# -----------------------------


def _check_times(values: Sequence[float], name: str) -> List[float]:
    out = [float(t) for t in values]
    bad = [t for t in out if not (0.0 <= t <= 1.0) or math.isnan(t)]
    if bad:
        raise ConfigurationError(f"{name} values must lie in [0, 1], got {bad}")
    return out


def _single_dist(specs: Sequence[str]) -> WeightDistribution:
    if len(specs) != 1:
        raise ConfigurationError(f"Exactly one distribution expected, got {list(specs)}")
    return parse_distribution(specs[0])


def _check_n_list(n_list: Optional[Sequence[int]]) -> List[int]:
    if not n_list:
        raise ConfigurationError("The list of side lengths n must not be empty")
    bad = [n for n in n_list if n < 1]
    if bad:
        raise ConfigurationError(f"Side lengths must be >= 1, got {bad}")
    return [int(n) for n in n_list]


def _check_positive(value: int, name: str, minimum: int = 1) -> int:
    if value is None or int(value) < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


@dataclass(frozen=True)
class OutputSettings:
    """Where a command writes its primary outputs.

    Attributes:
        out: CSV path override (None: inside the run's data directory).
        json_summary: JSON summary path override.
        timestamp: Write the '# generated_utc=' CSV header line.
    """

    out: Optional[str]
    json_summary: Optional[str]
    timestamp: bool


def output_settings(values: Mapping[str, Any]) -> OutputSettings:
    return OutputSettings(values["OUT"], values["JSON_SUMMARY"], not values["NO_TIMESTAMP"])


@dataclass(frozen=True)
class SweepConfig:
    """Configuration of a transition sweep over (n, t) cells.

    Attributes:
        dist: Weight law.
        d: Dimension.
        n_list: Side lengths, in output order.
        t_list: Explicit times (explicit mode), or None.
        alpha_list: Rescaled times (alpha mode), or None.
        replicates: Couplings per cell.
        pilot_replicates: Replicates of the per-n pilot variance (alpha mode).
        seed: Master seed; cell and pilot seeds derive from it.
        threads: Worker threads.
    """

    dist: WeightDistribution
    d: int
    n_list: List[int]
    t_list: Optional[List[float]]
    alpha_list: Optional[List[float]]
    replicates: int
    pilot_replicates: int
    seed: int
    threads: int = 1

    def __post_init__(self) -> None:
        _check_n_list(self.n_list)
        if (self.t_list is None) == (self.alpha_list is None):
            raise ConfigurationError("Give exactly one of an explicit time list or an alpha list")
        if self.t_list is not None:
            _check_times(self.t_list, "T")
            if not self.t_list:
                raise ConfigurationError("The time list must not be empty")
        if self.alpha_list is not None:
            if not self.alpha_list or any(a < 0 for a in self.alpha_list):
                raise ConfigurationError(f"Alpha values must be a non-empty list of values >= 0, got {self.alpha_list}")
            if self.pilot_replicates < MIN_PILOT_REPLICATES:
                raise ConfigurationError(
                    f"Alpha mode needs at least {MIN_PILOT_REPLICATES} pilot replicates, got {self.pilot_replicates}"
                )
        _check_positive(self.replicates, "REPS", MIN_REPLICATES)
        validate_seed(self.seed)

    @property
    def alpha_mode(self) -> bool:
        return self.alpha_list is not None


def sweep_config(values: Mapping[str, Any], sources: Mapping[str, str]) -> SweepConfig:
    alpha = values.get("ALPHA")
    t_list = values.get("T")
    if alpha is not None:
        if sources.get("T") != "default":
            raise ConfigurationError("T and ALPHA are mutually exclusive")
        t_list = None
    return SweepConfig(
        dist=_single_dist(values["DIST"]),
        d=values["DIM"],
        n_list=_check_n_list(values["N"]),
        t_list=t_list,
        alpha_list=alpha,
        replicates=values["REPS"],
        pilot_replicates=values["PILOT_REPS"],
        seed=values["SEED"],
        threads=_check_positive(values["THREADS"], "THREADS"),
    )


@dataclass(frozen=True)
class ExponentFitConfig:
    """Configuration of the log-log variance fit over side lengths."""

    dist: WeightDistribution
    d: int
    n_list: List[int]
    replicates: int
    seed: int
    threads: int = 1

    def __post_init__(self) -> None:
        n_list = _check_n_list(self.n_list)
        if len(set(n_list)) < 4 or max(n_list) < 8 * min(n_list):
            raise ConfigurationError(f"Need at least 4 side lengths spanning a factor 8, got {n_list}")
        _check_positive(self.replicates, "REPS", 2)
        validate_seed(self.seed)


def exponent_fit_config(values: Mapping[str, Any]) -> ExponentFitConfig:
    return ExponentFitConfig(
        dist=_single_dist(values["DIST"]),
        d=values["DIM"],
        n_list=values["N"],
        replicates=values["REPS"],
        seed=values["SEED"],
        threads=_check_positive(values["THREADS"], "THREADS"),
    )


@dataclass(frozen=True)
class IdentitySuiteConfig:
    """Configuration of the identity and inequality suite.

    Attributes:
        time_grid: Increasing grid from 0 to 1 (>= 11 points) for the covariance
            formula quadrature.
        fd_time, fd_step: Point and half-width of the finite-difference check.
        lemma_times: Times of the per-vertex influence bounds.
        stability_times: Times of the stability chain.
        monotone_grid: Times of the monotonicity, positive-association and chaos checks.
    """

    dist: WeightDistribution
    d: int
    n: int
    time_grid: List[float]
    replicates: int
    vertex_sample: Optional[int]
    seed: int
    threads: int = 1
    fd_time: float = 0.2
    fd_step: float = 0.05
    lemma_times: Tuple[float, ...] = (0.0, 0.3, 1.0)
    stability_times: Tuple[float, ...] = (0.05, 0.2, 0.8)
    monotone_grid: Tuple[float, ...] = tuple(float(x) for x in np.linspace(0.0, 1.0, 11))

    def __post_init__(self) -> None:
        _check_times(self.time_grid, "T")
        _check_positive(self.n, "N")
        _check_positive(self.replicates, "REPS", MIN_REPLICATES)
        validate_seed(self.seed)


def identity_suite_config(values: Mapping[str, Any]) -> IdentitySuiteConfig:
    n_list = _check_n_list(values["N"])
    if len(n_list) != 1:
        raise ConfigurationError(f"The identity suite runs on a single n, got {n_list}")
    return IdentitySuiteConfig(
        dist=_single_dist(values["DIST"]),
        d=values["DIM"],
        n=n_list[0],
        time_grid=values["T"],
        replicates=values["REPS"],
        vertex_sample=values["VERTEX_SAMPLE"],
        seed=values["SEED"],
        threads=_check_positive(values["THREADS"], "THREADS"),
    )


@dataclass(frozen=True)
class AuditConfig:
    """Configuration of the distribution audit."""

    dists: List[WeightDistribution]
    k_grid: List[float]
    d: int

    def __post_init__(self) -> None:
        if not self.dists:
            raise ConfigurationError("The audit needs at least one distribution")
        if any(not (k >= 0 and math.isfinite(k)) for k in self.k_grid):
            raise ConfigurationError(f"Truncation levels must be finite and >= 0, got {self.k_grid}")
        _check_positive(self.d, "DIM", 2)


def audit_config(values: Mapping[str, Any]) -> AuditConfig:
    return AuditConfig(
        dists=[parse_distribution(s) for s in values["DIST"]],
        k_grid=values["K_GRID"],
        d=values["DIM"],
    )


STANDARD_ORACLE_GRIDS: Tuple[Tuple[int, int], ...] = ((2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2))


@dataclass(frozen=True)
class OracleConfig:
    """Configuration of the brute-force equivalence suite.

    Attributes:
        grids: (d, n) pairs to check.
        configs: Random configurations per (law, grid).
    """

    dists: List[WeightDistribution]
    grids: List[Tuple[int, int]]
    configs: int
    seed: int

    def __post_init__(self) -> None:
        if not self.dists or not self.grids:
            raise ConfigurationError("The oracle suite needs at least one distribution and one grid")
        _check_positive(self.configs, "REPS")
        validate_seed(self.seed)


def oracle_config(values: Mapping[str, Any]) -> OracleConfig:
    dim, n_list = values.get("DIM"), values.get("N")
    if dim is None and n_list is None:
        grids = list(STANDARD_ORACLE_GRIDS)
    else:
        dims = [dim] if dim is not None else sorted({d for d, _ in STANDARD_ORACLE_GRIDS})
        grids = [(d, n) for d in dims for n in _check_n_list(n_list or [1, 2])]
    return OracleConfig(
        dists=[parse_distribution(s) for s in values["DIST"]],
        grids=grids,
        configs=values["REPS"],
        seed=values["SEED"],
    )


# -----------------------------
# Acceptance bands
# -----------------------------


def load_acceptance_bands(path: Optional[str] = None) -> Dict[str, Any]:
    """Committed thresholds of the exponent band and the transition separation."""

    path = path or DEFAULT_BANDS_FILE
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"Cannot read acceptance bands from {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigurationError(f"Acceptance bands in {path} must be a mapping")
    return payload
