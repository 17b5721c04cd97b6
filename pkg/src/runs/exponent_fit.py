"""
exponent_fit.py

DESCRIPTION
Fluctuation exponent of the passage time: ordinary least squares of
log Var(T) on log n over a list of side lengths.

The slope standard error is propagated from the per-n variance standard
errors through the OLS weights, using se(log V) ~ se(V) / V.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

from lpp.distributions import WeightDistribution
from lpp.errors import ConfigurationError
from lpp.estimators import estimate_variance
from lpp.rng import derive_seed

from runs.run_config import ExponentFitConfig

LOGGER = logging.getLogger("lpp.runs.exponent_fit")

VARIANCE_COLUMNS = ["n", "d", "var_T", "var_T_se", "replicates", "seed"]


@dataclass(frozen=True)
class ExponentFit:
    """Result of the log-log fit.

    Attributes:
        slope: Fitted exponent of Var(T) in n.
        intercept: Fitted log Var(T) at n = 1.
        slope_stderr: Propagated standard error of the slope.
        r_squared: Coefficient of determination of the fit.
    """

    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.slope, self.intercept, self.slope_stderr


def fit_log_log(n_values: Sequence[float], variances: Sequence[float], variance_ses: Sequence[float]) -> ExponentFit:
    n = np.asarray(n_values, dtype=float)
    v = np.asarray(variances, dtype=float)
    se = np.asarray(variance_ses, dtype=float)
    if len(n) < 2 or len(set(n.tolist())) < 2:
        raise ConfigurationError("The fit needs at least two distinct side lengths")
    if np.any(v <= 0) or np.any(n <= 0):
        raise ConfigurationError(f"Variances and side lengths must be positive for a log-log fit, got {v.tolist()}")

    x = np.log(n)
    y = np.log(v)
    model = LinearRegression().fit(x.reshape(-1, 1), y)
    slope = float(model.coef_[0])
    intercept = float(model.intercept_)

    dx = x - x.mean()
    weights = dx / np.sum(dx * dx)
    slope_se = float(math.sqrt(np.sum((weights * se / v) ** 2)))
    r2 = float(model.score(x.reshape(-1, 1), y)) if np.ptp(y) > 0 else 1.0
    return ExponentFit(slope, intercept, slope_se, r2)


def variance_table(
    dist: WeightDistribution, d: int, n_list: Sequence[int], replicates: int, seed: int, threads: int = 1
) -> pd.DataFrame:
    """Var(T) per side length; side length n uses the seed derived from (seed, n)."""

    rows = []
    for n in n_list:
        cell = derive_seed(seed, n)
        report = estimate_variance(n, d, dist, replicates, cell, threads)
        rows.append(
            {
                "n": n,
                "d": d,
                "var_T": report.estimate,
                "var_T_se": report.stderr,
                "replicates": report.replicates,
                "seed": cell,
            }
        )
        LOGGER.info("VARIANCE_DONE n=%s var_T=%.6g se=%.3g", n, report.estimate, report.stderr)
    frame = pd.DataFrame(rows, columns=VARIANCE_COLUMNS)
    frame["seed"] = frame["seed"].astype(np.uint64)
    return frame


def fit_variance_exponent(
    dist: WeightDistribution,
    d: int,
    n_list: Sequence[int],
    replicates: int,
    seed: int,
    threads: int = 1,
) -> Tuple[ExponentFit, pd.DataFrame]:
    config = ExponentFitConfig(dist, d, list(n_list), replicates, seed, threads)
    table = variance_table(config.dist, config.d, config.n_list, config.replicates, config.seed, config.threads)
    fit = fit_log_log(table["n"], table["var_T"], table["var_T_se"])
    LOGGER.info("EXPONENT_FIT slope=%.6g se=%.3g intercept=%.6g", fit.slope, fit.slope_stderr, fit.intercept)
    return fit, table


# -----------------------------
# Bands
# -----------------------------

BAND_HALF_WIDTH_FLOOR = 0.1
BAND_SE_MULTIPLE = 4.0
BAND_STEP = 0.05


def derive_exponent_band(
    fits: Sequence[ExponentFit],
    half_width_floor: float = BAND_HALF_WIDTH_FLOOR,
    k: float = BAND_SE_MULTIPLE,
    step: float = BAND_STEP,
) -> Dict[str, float]:
    """Exponent band from pilot fits.

    Each pilot slope is widened by the larger of ``half_width_floor`` and ``k``
    slope standard errors; the union is rounded outward to multiples of ``step``.
    """

    if not fits:
        raise ConfigurationError("Deriving an exponent band needs at least one pilot fit")
    low = min(f.slope - max(half_width_floor, k * f.slope_stderr) for f in fits)
    high = max(f.slope + max(half_width_floor, k * f.slope_stderr) for f in fits)
    return {
        "low": round(math.floor(low / step + 1e-9) * step, 10),
        "high": round(math.ceil(high / step - 1e-9) * step, 10),
    }


def exponent_band_check(fit: ExponentFit, bands: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    spec = (bands or {}).get("exponent", {})
    low = float(spec.get("low", 0.55))
    high = float(spec.get("high", 0.80))
    return {"low": low, "high": high, "passed": bool(low <= fit.slope <= high)}


def run_exponent_fit(
    config: ExponentFitConfig, bands: Optional[Mapping[str, Any]] = None
) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    fit, table = fit_variance_exponent(
        config.dist, config.d, config.n_list, config.replicates, config.seed, config.threads
    )
    summary = {
        "command": "fit-exponent",
        "dist": config.dist.spec,
        "d": config.d,
        "n_list": list(config.n_list),
        "replicates": config.replicates,
        "seed": config.seed,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "slope_stderr": fit.slope_stderr,
        "r_squared": fit.r_squared,
        "band": exponent_band_check(fit, bands),
    }
    return table, summary
