from __future__ import annotations

import math

import numpy as np
import pytest

from lpp import estimators
from lpp.distributions import parse_distribution
from lpp.dynamics import build_coupling
from lpp.errors import ConditionNotMetError, ConfigurationError
from lpp.estimators import (
    check_chaos_integral,
    check_non_increasing,
    check_positive_association,
    correlation_se,
    estimate_covariance,
    estimate_passage_curve,
    estimate_passage_stats,
    estimate_variance,
    finite_difference_check,
    influence_by_resampling,
    influence_curve_by_vertex,
    influence_of_vertex,
    mean_se,
    passage_frame,
    total_influence,
    verify_covariance_formula,
    verify_lemma_bounds,
    verify_stability_bound,
)
from lpp.lattice import Grid
from lpp.report_types import EstimatorReport

EXP = parse_distribution("exp:1.0")


def _report(quantity: str, estimate: float, stderr: float, t: float = 0.5) -> EstimatorReport:
    return EstimatorReport(quantity, estimate, stderr, 100, t, 3, 2, "exp:1.0", 1)


@pytest.mark.unit
def test_mean_se() -> None:
    est, se = mean_se(np.array([1.0, 2.0, 3.0, 4.0]))
    assert est == 2.5
    assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    assert math.isnan(mean_se(np.array([1.0]))[1])


@pytest.mark.unit
def test_correlation_of_identical_samples_is_exact() -> None:
    x = np.random.default_rng(0).exponential(size=50)
    assert correlation_se(x, x) == (1.0, 0.0)
    assert math.isnan(correlation_se(np.ones(5), x[:5])[0])


@pytest.mark.unit
def test_curve_at_time_zero() -> None:
    stats = estimate_passage_stats(3, 2, EXP, 0.0, 200, seed=5)
    assert stats["corr"].estimate == 1.0 and stats["corr"].stderr == 0.0
    assert stats["l2"].estimate == 0.0
    assert stats["overlap"].estimate >= Grid(3, 2).path_length
    assert stats["cov"].estimate == pytest.approx(stats["var_T"].estimate)
    assert stats["var_T"].t is None


@pytest.mark.unit
def test_curve_decorrelates_at_time_one() -> None:
    curve = estimate_passage_curve(3, 2, EXP, [0.0, 0.5, 1.0], 2000, seed=9)
    corr = [c["corr"].estimate for c in curve]
    assert corr[0] == 1.0
    assert corr[0] > corr[1] > corr[2]
    assert abs(corr[2]) < 0.1
    assert curve[2]["l2"].estimate == pytest.approx(2 * curve[0]["var_T"].estimate, rel=0.15)


@pytest.mark.unit
def test_estimates_do_not_depend_on_threads_or_chunking(monkeypatch: pytest.MonkeyPatch) -> None:
    reference = passage_frame(3, 2, EXP, [0.0, 0.3], 150, seed=2, threads=1)
    monkeypatch.setattr(estimators, "CHUNK_ELEMENTS", 64)
    chunked = passage_frame(3, 2, EXP, [0.0, 0.3], 150, seed=2, threads=4)
    assert chunked.equals(reference)
    single = estimate_variance(3, 2, EXP, 150, seed=2, threads=1)
    threaded = estimate_variance(3, 2, EXP, 150, seed=2, threads=3)
    assert single.estimate == threaded.estimate and single.stderr == threaded.stderr


@pytest.mark.unit
def test_too_few_replicates() -> None:
    with pytest.raises(ConfigurationError):
        estimate_passage_curve(2, 2, EXP, [0.1], estimators.MIN_REPLICATES - 1, seed=1)


@pytest.mark.unit
def test_time_outside_unit_interval() -> None:
    with pytest.raises(ConfigurationError):
        estimate_passage_curve(2, 2, EXP, [0.1, 1.2], 200, seed=1)


@pytest.mark.unit
def test_closed_form_influence_matches_resampling() -> None:
    coupling = build_coupling(Grid(3, 2), EXP, seed=4, replicate=2)
    for v in [(1, 1), (2, 1), (0, 3)]:
        closed = influence_of_vertex(coupling, v, 0.3)
        sampled = influence_by_resampling(coupling, v, 0.3, inner_draws=20000)
        assert sampled == pytest.approx(closed, abs=0.05)
    assert influence_of_vertex(coupling, (1, 1), 0.0) >= 0.0


@pytest.mark.unit
def test_total_influence_uses_every_vertex_on_small_grids() -> None:
    est = total_influence(2, 2, EXP, 0.2, 200, vertex_sample=None, seed=3)
    assert est.vertex is None
    assert est.vertex_sample == 9
    assert est.estimate > 0
    with pytest.raises(ConfigurationError):
        total_influence(2, 2, EXP, 0.2, 200, vertex_sample=10, seed=3)


@pytest.mark.unit
def test_influence_curve_by_vertex_keys() -> None:
    curves = influence_curve_by_vertex(3, 2, EXP, [0.0, 0.5, 1.0], 200, seed=3, vertex_sample=4)
    assert len(curves) == 4
    for v, curve in curves.items():
        assert [c.vertex for c in curve] == [v, v, v]
        assert [c.t for c in curve] == [0.0, 0.5, 1.0]


@pytest.mark.unit
def test_check_non_increasing() -> None:
    assert check_non_increasing([3.0, 2.0, 1.0], [0.1, 0.1, 0.1]).passed
    assert check_non_increasing([1.0, 1.1], [0.1, 0.1]).passed
    failed = check_non_increasing([1.0, 2.0, 1.5], [0.1, 0.1, 0.1])
    assert not failed.passed
    assert failed.violations == [1]
    assert failed.max_excess > 0


@pytest.mark.unit
def test_association_and_chaos_verdicts() -> None:
    assert check_positive_association(_report("cov", -0.01, 0.01)).passed
    assert not check_positive_association(_report("cov", -0.5, 0.01)).passed
    var = _report("var_T", 2.0, 0.05, t=None)
    assert check_chaos_integral(var, _report("overlap", 3.0, 0.1), floor=1.0, t=0.5).passed
    assert not check_chaos_integral(var, _report("overlap", 30.0, 0.1), floor=1.0, t=0.5).passed


@pytest.mark.unit
def test_finite_difference_rejects_bad_step() -> None:
    with pytest.raises(ConfigurationError):
        finite_difference_check(2, 2, EXP, t=0.02, h=0.05, replicates=200, seed=1)


@pytest.mark.unit
def test_covariance_formula_on_a_small_grid() -> None:
    check = verify_covariance_formula(2, 2, EXP, np.linspace(0.0, 1.0, 11), 2000, seed=7)
    assert check.passed
    assert check.upper_bound.passed
    assert check.influence[0] >= check.influence[-1]
    assert check.bracket_bound >= 0.0


@pytest.mark.unit
def test_covariance_formula_rejects_coarse_grid() -> None:
    with pytest.raises(ConfigurationError):
        verify_covariance_formula(2, 2, EXP, [0.0, 0.5, 1.0], 200, seed=7)


@pytest.mark.unit
def test_lemma_bounds_need_a_variance_floor() -> None:
    with pytest.raises(ConditionNotMetError):
        verify_lemma_bounds(2, 2, parse_distribution("const:1.0"), 0.3, 200, seed=1)


@pytest.mark.unit
def test_lemma_bounds_report_per_vertex() -> None:
    report = verify_lemma_bounds(2, 2, EXP, 0.3, 1000, seed=1, vertex_sample=4)
    assert report.floor == pytest.approx(1.0, rel=1e-6)
    assert len(report.vertices) == 4
    for bound in report.vertices:
        assert bound.upper_ok


@pytest.mark.unit
def test_stability_at_time_zero_is_tight() -> None:
    report = verify_stability_bound(3, 2, EXP, 0.0, 200, seed=2)
    assert report.l2 == 0.0 and report.bound == 0.0
    assert report.bound_verdict.passed
    assert report.majorant_verdict.passed
    assert report.weight_sq_on_geodesic <= report.squared_weight_passage + 1e-9


@pytest.mark.unit
def test_covariance_report_matches_passage_stats() -> None:
    cov = estimate_covariance(3, 2, EXP, 0.4, 300, seed=17)
    stats = estimate_passage_stats(3, 2, EXP, 0.4, 300, seed=17)
    assert cov.quantity == stats["cov"].quantity
    assert cov.estimate == stats["cov"].estimate
    assert 0.0 < cov.estimate <= stats["var_T"].estimate * 1.5


@pytest.mark.unit
@pytest.mark.parametrize("t", [0.0, 0.4, 1.0])
def test_origin_and_target_influence_is_the_weight_variance(t: float) -> None:
    # Both endpoints lie on every path, so T = w_v + (rest) and the influence is Var(w) = 1.
    grid = Grid(3, 2)
    for replicate in range(3):
        coupling = build_coupling(grid, EXP, seed=11, replicate=replicate)
        assert influence_of_vertex(coupling, (0, 0), t) == pytest.approx(1.0, abs=1e-9)
        assert influence_of_vertex(coupling, (3, 3), t) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.unit
def test_vertex_subsample_agrees_with_the_full_sum() -> None:
    full = total_influence(3, 2, EXP, 0.3, 600, vertex_sample=None, seed=21)
    quarter = total_influence(3, 2, EXP, 0.3, 600, vertex_sample=4, seed=21)
    assert full.vertex_sample == 16
    assert quarter.vertex_sample == 4
    assert abs(full.estimate - quarter.estimate) <= 4.0 * math.hypot(full.stderr, quarter.stderr)


@pytest.mark.unit
def test_influence_estimates_are_not_significantly_negative() -> None:
    curves = influence_curve_by_vertex(3, 2, EXP, [0.0, 0.5, 1.0], 300, seed=5)
    estimates = [e for curve in curves.values() for e in curve]
    estimates.append(total_influence(3, 2, EXP, 0.5, 300, vertex_sample=None, seed=5))
    for e in estimates:
        assert e.estimate >= -3.0 * e.stderr, e.to_dict()
