"""
identity_suite.py

DESCRIPTION
Runs every identity and inequality check on one (dist, d, n) setting and
collects a flat list of verdicts:

  covariance_formula              trapezoid of sum_v Inf_v(t) vs Var(T)
  influence_sum_upper_bound       sum_v Inf_v(0) >= Var(T)
  finite_difference_t=...         -dQ_t/dt vs sum_v Inf_v(t)
  lemma_bounds_t=...              per-vertex influence bounds (skipped for laws
                                  without a conditional-variance floor)
  l2_linear_bound_t=..., squared_weight_majorant_t=...,
  covariance_rearrangement_t=...  stability chain
  non_increasing_<quantity>       Q_t, corr, overlap, sum_v Inf_v(t) and each sampled Inf_v(t)
  non_decreasing_l2               E[(T_0 - T_t)^2]
  positive_association_t=...      Cov(T_0, T_t) >= 0
  chaos_integral_t=...            c t E|pi_0 & pi_t| <= Var(T)

The suite passes when no verdict failed; skipped verdicts do not fail it.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Tuple

import pandas as pd

from lpp.distributions import check_variance_floor
from lpp.errors import ConditionNotMetError
from lpp.estimators import (
    check_chaos_integral,
    check_non_increasing,
    check_positive_association,
    estimate_passage_curve,
    finite_difference_check,
    influence_curve_by_vertex,
    total_influence_curve,
    verify_covariance_formula,
    verify_lemma_bounds,
    verify_stability_bound,
)
from lpp.report_types import MonotonicityCheck, Verdict

from runs.run_config import IdentitySuiteConfig

LOGGER = logging.getLogger("lpp.runs.identity_suite")

VERDICT_COLUMNS = ["name", "status", "lhs", "rhs", "tolerance", "reason"]

MONOTONE_K = 2.0
FLOOR_FAILED_REASON = "fails the condition: no positive lower bound on Var(X | X > k)"


def _monotone_verdict(name: str, check: MonotonicityCheck, direction: str = "non_increasing") -> Verdict:
    return Verdict.check(
        f"{direction}_{name}", check.passed, check.max_excess, 0.0, check.k, violations=check.violations
    )


def _covariance_formula(config: IdentitySuiteConfig) -> Tuple[List[Verdict], Dict[str, Any]]:
    check = verify_covariance_formula(
        config.n,
        config.d,
        config.dist,
        config.time_grid,
        config.replicates,
        config.seed,
        config.vertex_sample,
        config.threads,
    )
    tolerance = 3.0 * check.combined_se + check.bracket_bound
    verdict = Verdict.check(
        "covariance_formula",
        check.passed,
        check.quadrature,
        check.sample_variance,
        tolerance,
        bracket_bound=check.bracket_bound,
        combined_se=check.combined_se,
    )
    return [verdict, check.upper_bound], check.to_dict()


def _finite_difference(config: IdentitySuiteConfig) -> Tuple[List[Verdict], Dict[str, Any]]:
    check = finite_difference_check(
        config.n,
        config.d,
        config.dist,
        config.fd_time,
        config.fd_step,
        config.replicates,
        config.seed,
        config.vertex_sample,
        config.threads,
    )
    verdict = Verdict.check(
        f"finite_difference_t={config.fd_time}",
        check.passed,
        check.derivative,
        check.influence,
        3.0 * check.combined_se,
        h=config.fd_step,
    )
    return [verdict], check.to_dict()


def _lemma_bounds(config: IdentitySuiteConfig) -> Tuple[List[Verdict], List[Dict[str, Any]]]:
    verdicts, details = [], []
    for t in config.lemma_times:
        name = f"lemma_bounds_t={t}"
        try:
            report = verify_lemma_bounds(
                config.n,
                config.d,
                config.dist,
                t,
                config.replicates,
                config.seed,
                config.vertex_sample,
                threads=config.threads,
            )
        except ConditionNotMetError as exc:
            LOGGER.info("CHECK_SKIPPED name=%s reason=%s", name, exc)
            verdicts.append(Verdict.skipped(name, f"{FLOOR_FAILED_REASON} ({exc})"))
            continue
        failing = [b.vertex for b in report.vertices if not (b.upper_ok and b.lower_ok)]
        verdicts.append(
            Verdict.check(name, report.passed, len(failing), 0.0, 0.0, floor=report.floor, failing_vertices=failing)
        )
        details.append(report.to_dict())
    return verdicts, details


def _stability(config: IdentitySuiteConfig) -> Tuple[List[Verdict], List[Dict[str, Any]]]:
    verdicts, details = [], []
    for t in config.stability_times:
        report = verify_stability_bound(
            config.n, config.d, config.dist, t, config.replicates, config.seed, config.threads
        )
        verdicts.extend([report.bound_verdict, report.majorant_verdict, report.rearrangement_verdict])
        details.append(report.to_dict())
    return verdicts, details


def _monotonicity(config: IdentitySuiteConfig) -> Tuple[List[Verdict], Dict[str, Any]]:
    times = list(config.monotone_grid)
    curve = estimate_passage_curve(
        config.n, config.d, config.dist, times, config.replicates, config.seed, config.threads
    )
    verdicts: List[Verdict] = []
    for quantity in ("Q_t", "corr", "overlap"):
        check = check_non_increasing(
            [r[quantity].estimate for r in curve], [r[quantity].stderr for r in curve], MONOTONE_K
        )
        verdicts.append(_monotone_verdict(quantity, check))

    l2 = check_non_increasing([-r["l2"].estimate for r in curve], [r["l2"].stderr for r in curve], MONOTONE_K)
    verdicts.append(_monotone_verdict("l2", l2, direction="non_decreasing"))

    total = total_influence_curve(
        config.n, config.d, config.dist, times, config.replicates, config.vertex_sample, config.seed, config.threads
    )
    check = check_non_increasing([e.estimate for e in total], [e.stderr for e in total], MONOTONE_K)
    verdicts.append(_monotone_verdict("total_influence", check))

    by_vertex = influence_curve_by_vertex(
        config.n, config.d, config.dist, times, config.replicates, config.seed, config.vertex_sample, config.threads
    )
    for v, estimates in by_vertex.items():
        check = check_non_increasing([e.estimate for e in estimates], [e.stderr for e in estimates], MONOTONE_K)
        verdicts.append(_monotone_verdict(f"influence_v={v}", check))

    for reports in curve:
        verdicts.append(check_positive_association(reports["cov"]))

    floor = check_variance_floor(config.dist)
    for t, reports in zip(times, curve):
        if floor.satisfied:
            verdicts.append(check_chaos_integral(reports["var_T"], reports["overlap"], floor.floor, t))
        else:
            verdicts.append(Verdict.skipped(f"chaos_integral_t={t}", FLOOR_FAILED_REASON))

    curves = {
        "times": times,
        **{q: [r[q].estimate for r in curve] for q in ("Q_t", "corr", "cov", "l2", "overlap")},
        **{f"{q}_se": [r[q].stderr for r in curve] for q in ("Q_t", "corr", "cov", "l2", "overlap")},
        "total_influence": [e.estimate for e in total],
        "total_influence_se": [e.stderr for e in total],
    }
    return verdicts, curves


def run_identity_suite(config: IdentitySuiteConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Return the verdict table and the JSON verdict document."""

    verdicts: List[Verdict] = []
    details: Dict[str, Any] = {}
    for name, step in (
        ("covariance_formula", _covariance_formula),
        ("finite_difference", _finite_difference),
        ("lemma_bounds", _lemma_bounds),
        ("stability", _stability),
        ("monotonicity", _monotonicity),
    ):
        step_verdicts, step_details = step(config)
        verdicts.extend(step_verdicts)
        details[name] = step_details
        LOGGER.info(
            "CHECK_DONE name=%s passed=%s failed=%s skipped=%s",
            name,
            sum(v.status == "passed" for v in step_verdicts),
            sum(v.status == "failed" for v in step_verdicts),
            sum(v.status == "skipped" for v in step_verdicts),
        )

    passed = not any(v.status == "failed" for v in verdicts)
    table = pd.DataFrame([{c: getattr(v, c) for c in VERDICT_COLUMNS} for v in verdicts], columns=VERDICT_COLUMNS)
    document = {
        "command": "identities",
        "dist": config.dist.spec,
        "d": config.d,
        "n": config.n,
        "replicates": config.replicates,
        "seed": config.seed,
        "passed": passed,
        "verdicts": [v.to_dict() for v in verdicts],
        "details": details,
    }
    return table, document
