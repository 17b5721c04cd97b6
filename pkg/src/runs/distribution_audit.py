"""
distribution_audit.py

DESCRIPTION
Tail audit of weight laws: per (law, k) the conditional mean and variance of
X given X > k, the excess mean b_k = E[X - k | X > k] and the variance-floor
verdict; per law the floor, the moment-condition integral for dimension d, and
the log-log slope of b_k over k in [10, 1e4] (unbounded laws only).
"""

from __future__ import annotations

import logging
import math
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from lpp.distributions import WeightDistribution, check_moment_condition, check_variance_floor, tail_excess_mean
from lpp.errors import ConfigurationError, DegenerateTailError

from runs.exponent_fit import fit_log_log
from runs.run_config import AuditConfig

LOGGER = logging.getLogger("lpp.runs.distribution_audit")

AUDIT_COLUMNS = [
    "dist",
    "k",
    "edge_level",
    "cond_mean",
    "cond_var",
    "tail_excess",
    "degenerate",
    "floor_ok",
    "dist_floor",
    "dist_floor_ok",
    "d",
    "moment_value",
    "moment_ok",
]

SLOPE_LEVELS = np.logspace(1.0, 4.0, 13)


def tail_excess_slope(dist: WeightDistribution, levels: np.ndarray = SLOPE_LEVELS) -> Dict[str, Any]:
    """Log-log slope of b_k against k; skipped for bounded support."""

    if math.isfinite(dist.upper_support):
        return {"status": "skipped", "reason": "bounded support"}
    try:
        excess = np.array([tail_excess_mean(dist, float(k)) for k in levels])
        fit = fit_log_log(levels, excess, np.zeros_like(excess))
    except (DegenerateTailError, ConfigurationError) as exc:
        return {"status": "skipped", "reason": str(exc)}
    return {
        "status": "computed",
        "k_min": float(levels[0]),
        "k_max": float(levels[-1]),
        "slope": fit.slope,
        "intercept": fit.intercept,
    }


def audit_distribution(
    dist: WeightDistribution, k_grid: List[float], d: int
) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    floor = check_variance_floor(dist, k_grid)
    moment = check_moment_condition(dist, d)
    rows = [
        {
            "dist": dist.spec,
            "k": p.k,
            "edge_level": p.edge_level,
            "cond_mean": p.mean,
            "cond_var": p.variance,
            "tail_excess": p.excess_mean,
            "degenerate": p.degenerate,
            "floor_ok": p.ok,
            "dist_floor": floor.floor,
            "dist_floor_ok": floor.satisfied,
            "d": d,
            "moment_value": moment.value,
            "moment_ok": moment.satisfied,
        }
        for p in floor.points
    ]
    summary = {
        "dist": dist.spec,
        "floor": floor.floor,
        "floor_satisfied": floor.satisfied,
        "moment_value": moment.value,
        "moment_satisfied": moment.satisfied,
        "moment_cutoff": moment.cutoff,
        "tail_excess_slope": tail_excess_slope(dist),
    }
    LOGGER.info(
        "AUDIT_DONE dist=%s floor=%.6g floor_ok=%s moment=%.6g moment_ok=%s",
        dist.spec,
        floor.floor,
        floor.satisfied,
        moment.value,
        moment.satisfied,
    )
    return rows, summary


def run_distribution_audit(config: AuditConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    rows: List[Dict[str, Any]] = []
    per_dist = []
    for dist in config.dists:
        dist_rows, summary = audit_distribution(dist, config.k_grid, config.d)
        rows.extend(dist_rows)
        per_dist.append(summary)
    frame = pd.DataFrame(rows, columns=AUDIT_COLUMNS)
    return frame, {
        "command": "dist-audit",
        "d": config.d,
        "k_grid": list(config.k_grid),
        "distributions": per_dist,
    }
