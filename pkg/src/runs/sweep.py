"""
sweep.py

DESCRIPTION
Transition sweep over (n, t) cells.

For every side length n one set of couplings (cell seed derived from the
master seed and n) is evaluated at all requested times. In alpha mode the
times are t = alpha * Var(T) / n, with Var(T) taken from a pilot run that has
its own derived seed; the pilot records go to the JSON summary.

Output rows come in (n, t) input order with the columns of SWEEP_COLUMNS.

The alpha column depends on the mode. In alpha mode it is the requested
alpha, which was turned into t with the pilot Var(T). In t mode it is
t * n / var_T with the variance of the cell itself. The two variances come
from different seeds, so equal t values can carry different alpha entries.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from lpp.errors import ConfigurationError
from lpp.estimators import estimate_passage_curve, estimate_variance
from lpp.rng import FIELD_PILOT, derive_seed

from runs.run_config import SweepConfig

LOGGER = logging.getLogger("lpp.runs.sweep")

SWEEP_COLUMNS = [
    "n",
    "d",
    "t",
    "alpha",
    "Q_t",
    "Q_t_se",
    "corr",
    "corr_se",
    "l2",
    "l2_se",
    "overlap",
    "overlap_se",
    "overlap_fraction",
    "var_T",
    "var_T_se",
    "replicates",
    "seed",
]


def cell_seed(master_seed: int, n: int) -> int:
    return derive_seed(master_seed, n)


def pilot_seed(master_seed: int, n: int) -> int:
    return derive_seed(master_seed, n, FIELD_PILOT)


def pilot_variance(config: SweepConfig, n: int) -> Dict[str, Any]:
    """Var(T) of the pilot run for side length n."""

    seed = pilot_seed(config.seed, n)
    report = estimate_variance(n, config.d, config.dist, config.pilot_replicates, seed, config.threads)
    LOGGER.info("PILOT_DONE n=%s seed=%s var_T=%.6g", n, seed, report.estimate)
    return {
        "n": n,
        "seed": seed,
        "replicates": report.replicates,
        "var_T": report.estimate,
        "var_T_se": report.stderr,
    }


def times_for(config: SweepConfig, n: int, pilot: Optional[Mapping[str, Any]]) -> List[Tuple[float, float]]:
    """(t, alpha) pairs of the cells of side length n; alpha is NaN until the cell variance is known."""

    if not config.alpha_mode:
        return [(float(t), math.nan) for t in config.t_list]
    var = float(pilot["var_T"])
    out = []
    for alpha in config.alpha_list:
        t = alpha * var / n
        if t > 1.0:
            raise ConfigurationError(f"alpha={alpha} maps to t={t:.6g} > 1 for n={n} (pilot Var(T)={var:.6g})")
        out.append((t, float(alpha)))
    return out


def _cell_rows(config: SweepConfig, n: int, cells: List[Tuple[float, float]]) -> List[Dict[str, Any]]:
    seed = cell_seed(config.seed, n)
    distinct = list(dict.fromkeys(t for t, _ in cells))
    curve = estimate_passage_curve(n, config.d, config.dist, distinct, config.replicates, seed, config.threads)
    reports = dict(zip(distinct, curve))
    path_length = config.d * n + 1

    rows = []
    for t, alpha in cells:
        r = reports[t]
        var = r["var_T"].estimate
        if math.isnan(alpha):
            alpha = t * n / var if var > 0 else math.nan
        rows.append(
            {
                "n": n,
                "d": config.d,
                "t": t,
                "alpha": alpha,
                "Q_t": r["Q_t"].estimate,
                "Q_t_se": r["Q_t"].stderr,
                "corr": r["corr"].estimate,
                "corr_se": r["corr"].stderr,
                "l2": r["l2"].estimate,
                "l2_se": r["l2"].stderr,
                "overlap": r["overlap"].estimate,
                "overlap_se": r["overlap"].stderr,
                "overlap_fraction": r["overlap"].estimate / path_length,
                "var_T": var,
                "var_T_se": r["var_T"].stderr,
                "replicates": config.replicates,
                "seed": seed,
            }
        )
        LOGGER.info("CELL_DONE n=%s t=%.6g corr=%.6g overlap=%.6g", n, t, rows[-1]["corr"], rows[-1]["overlap"])
    return rows


def run_transition_sweep(config: SweepConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Return the sweep rows and the JSON summary (pilot records included)."""

    pilots: List[Dict[str, Any]] = []
    rows: List[Dict[str, Any]] = []
    for n in config.n_list:
        pilot = pilot_variance(config, n) if config.alpha_mode else None
        if pilot is not None:
            pilots.append(pilot)
        rows.extend(_cell_rows(config, n, times_for(config, n, pilot)))

    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    frame["seed"] = frame["seed"].astype(np.uint64)
    summary = {
        "command": "sweep",
        "dist": config.dist.spec,
        "d": config.d,
        "n_list": list(config.n_list),
        "mode": "alpha" if config.alpha_mode else "t",
        "replicates": config.replicates,
        "seed": config.seed,
        "cells": len(frame),
        "pilots": pilots,
    }
    return frame, summary


# -----------------------------
# Transition separation
# -----------------------------


def separation_per_n(frame: pd.DataFrame, alpha_low: float, alpha_high: float) -> List[Dict[str, Any]]:
    """corr gap and overlap_fraction ratio between the alpha_low and alpha_high rows of every n.

    Rows are matched on the alpha column; an n without both rows gets ``skipped``.
    """

    out = []
    for n, sub in frame.groupby("n", sort=False):
        low = sub[np.isclose(sub["alpha"], alpha_low, rtol=1e-9, atol=0.0)]
        high = sub[np.isclose(sub["alpha"], alpha_high, rtol=1e-9, atol=0.0)]
        if low.empty or high.empty:
            out.append({"n": int(n), "skipped": "alpha_low or alpha_high not in the sweep"})
            continue
        lo, hi = low.iloc[0], high.iloc[0]
        out.append(
            {
                "n": int(n),
                "corr_low": float(lo["corr"]),
                "corr_high": float(hi["corr"]),
                "corr_gap": float(lo["corr"] - hi["corr"]),
                "overlap_fraction_low": float(lo["overlap_fraction"]),
                "overlap_fraction_high": float(hi["overlap_fraction"]),
                "overlap_ratio": (
                    float(hi["overlap_fraction"] / lo["overlap_fraction"]) if lo["overlap_fraction"] > 0 else math.nan
                ),
            }
        )
    return out


def check_transition_separation(frame: pd.DataFrame, bands: Mapping[str, Any]) -> Dict[str, Any]:
    """Compare corr and overlap_fraction at a low and a high alpha for every n.

    Uses the ``transition`` block of the acceptance bands: alpha_low, alpha_high,
    corr_gap and overlap_ratio.
    """

    spec = bands.get("transition", {})
    alpha_low = float(spec.get("alpha_low", 0.02))
    alpha_high = float(spec.get("alpha_high", 0.6))
    corr_gap = float(spec.get("corr_gap", 0.2))
    overlap_ratio = float(spec.get("overlap_ratio", 0.5))

    per_n = []
    for sep in separation_per_n(frame, alpha_low, alpha_high):
        if "skipped" in sep:
            per_n.append({"n": sep["n"], "status": "skipped", "reason": sep["skipped"]})
            continue
        ok = sep["corr_gap"] >= corr_gap and bool(sep["overlap_ratio"] < overlap_ratio)
        per_n.append({"status": "passed" if ok else "failed", **sep})
    return {
        "alpha_low": alpha_low,
        "alpha_high": alpha_high,
        "min_corr_gap": corr_gap,
        "max_overlap_ratio": overlap_ratio,
        "per_n": per_n,
        "passed": all(p["status"] != "failed" for p in per_n),
    }


def derive_transition_thresholds(
    frame: pd.DataFrame,
    alpha_low: float,
    alpha_high: float,
    gap_fraction: float = 0.5,
    ratio_margin: float = 1.5,
    step: float = 0.05,
) -> Dict[str, float]:
    """Transition thresholds from a pilot alpha-mode sweep.

    corr_gap is ``gap_fraction`` of the smallest pilot gap, rounded down to
    ``step``; overlap_ratio is ``ratio_margin`` times the largest pilot ratio,
    rounded up to ``step`` and capped at 1.
    """

    seps = [s for s in separation_per_n(frame, alpha_low, alpha_high) if "skipped" not in s]
    if not seps:
        raise ConfigurationError(f"The pilot sweep has no n with both alpha={alpha_low} and alpha={alpha_high}")
    gap = gap_fraction * min(s["corr_gap"] for s in seps)
    ratio = ratio_margin * max(s["overlap_ratio"] for s in seps)
    return {
        "alpha_low": alpha_low,
        "alpha_high": alpha_high,
        "corr_gap": round(max(math.floor(gap / step + 1e-9) * step, 0.0), 10),
        "overlap_ratio": round(min(math.ceil(ratio / step - 1e-9) * step, 1.0), 10),
    }
