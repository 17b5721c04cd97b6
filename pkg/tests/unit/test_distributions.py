from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lpp import distributions as dists
from lpp.errors import ConfigurationError, DegenerateTailError
from lpp.rng import substream


@pytest.mark.unit
@pytest.mark.parametrize(
    "spec, expected_type",
    [
        ("exp:1.0", dists.Exponential),
        ("geom:0.5", dists.Geometric),
        ("pareto:3.0", dists.Pareto),
        ("stretched:0.5:1.0", dists.StretchedExponential),
        ("unif01", dists.Uniform01),
        ("const:2.0", dists.Constant),
    ],
)
def test_parse_distribution_spec(spec: str, expected_type: type) -> None:
    dist = dists.parse_distribution(spec)
    assert isinstance(dist, expected_type)
    assert dists.format_distribution(dist) == spec


@pytest.mark.unit
@pytest.mark.parametrize("spec", ["foo:1", "exp", "exp:abc", "pareto:2.0", "geom:1.5", "stretched:1.5:1", "exp:-1"])
def test_parse_distribution_rejects_invalid(spec: str) -> None:
    with pytest.raises(ConfigurationError):
        dists.parse_distribution(spec)


@pytest.mark.unit
def test_sample_array_dtypes_and_support() -> None:
    geo = dists.sample_array(dists.Geometric(0.5), substream(1, 0), 1000)
    assert geo.dtype == np.int64
    assert geo.min() >= 1
    par = dists.sample_array(dists.Pareto(3.0), substream(1, 1), 1000)
    assert par.dtype == np.float64
    assert par.min() >= 1.0
    uni = dists.sample_array(dists.Uniform01(), substream(1, 2), 1000)
    assert 0.0 <= uni.min() and uni.max() <= 1.0
    assert isinstance(dists.sample(dists.Geometric(0.5), substream(1, 3)), int)


@pytest.mark.unit
@pytest.mark.parametrize(
    "spec, reference",
    [
        ("exp:2.0", lambda law: stats.expon(scale=0.5).cdf),
        ("pareto:3.0", lambda law: stats.pareto(3.0).cdf),
        ("unif01", lambda law: stats.uniform().cdf),
        ("stretched:0.5:1.0", lambda law: lambda x: dists.cdf(law, x)),
    ],
)
def test_continuous_samples_match_their_laws(spec: str, reference) -> None:
    law = dists.parse_distribution(spec)
    draws = dists.sample_array(law, substream(7, 0), 5000)
    assert stats.kstest(draws, reference(law)).pvalue > 1e-3


@pytest.mark.unit
def test_geometric_samples_match_the_pmf() -> None:
    draws = dists.sample_array(dists.Geometric(0.5), substream(7, 1), 5000)
    j = np.arange(1, 8)
    observed = np.array([np.count_nonzero(draws == v) for v in j[:-1]] + [np.count_nonzero(draws >= j[-1])])
    pmf = 0.5 ** j[:-1]
    expected = 5000 * np.append(pmf, 1.0 - pmf.sum())
    assert stats.chisquare(observed, expected).pvalue > 1e-3


@pytest.mark.unit
def test_constant_samples_are_constant() -> None:
    draws = dists.sample_array(dists.Constant(2.0), substream(7, 2), 100)
    assert np.all(draws == 2.0)



@pytest.mark.unit
def test_survival_cdf_mean_variance_closed_forms() -> None:
    exp = dists.Exponential(1.0)
    assert dists.survival(exp, 1.0) == pytest.approx(math.exp(-1.0))
    assert dists.cdf(exp, 1.0) == pytest.approx(1.0 - math.exp(-1.0))
    assert dists.log_survival(exp, 3.0) == pytest.approx(-3.0)
    assert dists.mean(dists.Pareto(3.0)) == pytest.approx(1.5)
    assert dists.variance(dists.Pareto(3.0)) == pytest.approx(0.75)
    assert dists.variance(dists.Geometric(0.5)) == pytest.approx(2.0)
    assert dists.mean(dists.StretchedExponential(1.0, 1.0)) == pytest.approx(1.0, rel=1e-10)
    assert dists.variance(dists.StretchedExponential(1.0, 1.0)) == pytest.approx(1.0, rel=1e-9)
    assert dists.variance(dists.Constant(3.0)) == 0.0


@pytest.mark.unit
@pytest.mark.parametrize("k", [0.0, 0.5, 1.0, 2.0, 7.5])
def test_exponential_truncated_moments(k: float) -> None:
    exp = dists.Exponential(1.0)
    assert dists.truncated_mean(exp, k) == pytest.approx(math.exp(-k))
    assert dists.truncated_second_moment(exp, k) == pytest.approx(2.0 * math.exp(-k))
    assert dists.truncated_cross_moment(exp, 0.0, k) == pytest.approx((2.0 + k) * math.exp(-k))


@pytest.mark.unit
@pytest.mark.parametrize("k", [0.0, 0.3, 1.0, 2.5, 4.0])
def test_geometric_truncated_moments_match_direct_sums(k: float) -> None:
    geo = dists.Geometric(0.5)
    j = np.arange(1, 200)
    pmf = 0.5**j
    excess = np.maximum(j - k, 0.0)
    assert dists.truncated_mean(geo, k) == pytest.approx(float(np.sum(pmf * excess)), rel=1e-12)
    assert dists.truncated_second_moment(geo, k) == pytest.approx(float(np.sum(pmf * excess**2)), rel=1e-12)


@pytest.mark.unit
@pytest.mark.parametrize("k", [0.0, 0.5, 1.0, 3.0])
def test_stretched_quadrature_agrees_with_incomplete_gamma(k: float) -> None:
    law = dists.StretchedExponential(0.5, 1.0)
    expected = float(dists.truncated_mean_array(law, np.array([k]))[0])
    assert dists.truncated_mean(law, k) == pytest.approx(expected, rel=1e-8)
    scalar = dists.truncated_cross_moment(law, 0.2, k)
    vector = float(dists.truncated_cross_moment_array(law, np.array([0.2]), np.array([k]))[0])
    assert scalar == pytest.approx(vector, rel=1e-7)


@pytest.mark.unit
@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(min_value=0.0, max_value=20.0, allow_nan=False),
    b=st.floats(min_value=0.0, max_value=20.0, allow_nan=False),
)
def test_cross_moment_is_symmetric_and_reduces_to_second_moment(a: float, b: float) -> None:
    for law in (dists.Exponential(1.0), dists.Pareto(3.0), dists.Geometric(0.5), dists.Uniform01()):
        assert dists.truncated_cross_moment(law, a, b) == pytest.approx(dists.truncated_cross_moment(law, b, a))
        assert dists.truncated_cross_moment(law, a, a) == pytest.approx(dists.truncated_second_moment(law, a))
        assert dists.truncated_cross_moment(law, a, b) <= math.sqrt(
            dists.truncated_second_moment(law, a) * dists.truncated_second_moment(law, b)
        ) * (1 + 1e-9) + 1e-300


@pytest.mark.unit
def test_truncation_level_must_be_non_negative() -> None:
    with pytest.raises(ValueError):
        dists.truncated_mean(dists.Exponential(1.0), -1.0)


@pytest.mark.unit
@pytest.mark.parametrize("k", [1.0, 2.0, 5.0, 10.0])
def test_pareto_conditional_variance_scales_with_k_squared(k: float) -> None:
    cond_mean, cond_var = dists.conditional_tail_stats(dists.Pareto(3.0), k)
    assert cond_var == pytest.approx(0.75 * k * k, rel=1e-6)
    assert cond_mean == pytest.approx(1.5 * k, rel=1e-9)


@pytest.mark.unit
@pytest.mark.parametrize("k", [0.0, 1.0, 10.0, 100.0])
def test_memoryless_laws_have_unit_conditional_variance(k: float) -> None:
    assert dists.conditional_tail_stats(dists.Exponential(1.0), k) == pytest.approx((k + 1.0, 1.0))
    cond_mean, cond_var = dists.conditional_tail_stats(dists.StretchedExponential(1.0, 1.0), k)
    assert cond_mean == pytest.approx(k + 1.0, rel=1e-8)
    assert cond_var == pytest.approx(1.0, rel=1e-6)


@pytest.mark.unit
def test_geometric_conditional_stats() -> None:
    cond_mean, cond_var = dists.conditional_tail_stats(dists.Geometric(0.5), 2.5)
    assert cond_mean == pytest.approx(4.0)
    assert cond_var == pytest.approx(2.0)


@pytest.mark.unit
def test_stretched_conditional_variance_grows() -> None:
    law = dists.StretchedExponential(0.5, 1.0)
    base = dists.conditional_tail_stats(law, 0.0)[1]
    values = [dists.conditional_tail_stats(law, k)[1] for k in (1.0, 10.0, 100.0)]
    assert all(v >= 0.9 * base for v in values)
    assert values == sorted(values)


@pytest.mark.unit
def test_stretched_tail_excess_grows_like_square_root() -> None:
    law = dists.StretchedExponential(0.5, 1.0)
    levels = np.logspace(1.0, 4.0, 7)
    excess = np.array([dists.tail_excess_mean(law, k) for k in levels])
    slope = np.polyfit(np.log(levels), np.log(excess), 1)[0]
    assert 0.4 <= slope <= 0.6


@pytest.mark.unit
def test_degenerate_tail_raises() -> None:
    with pytest.raises(DegenerateTailError):
        dists.conditional_tail_stats(dists.Uniform01(), 1.0)
    with pytest.raises(DegenerateTailError):
        dists.conditional_tail_stats(dists.Constant(1.0), 1.0)


@pytest.mark.unit
def test_variance_floor_check() -> None:
    exp = dists.check_variance_floor(dists.Exponential(1.0))
    assert exp.satisfied
    assert exp.floor == pytest.approx(1.0)

    pareto = dists.check_variance_floor(dists.Pareto(3.0), [0.0, 1.0, 2.0])
    assert pareto.satisfied
    assert pareto.floor == pytest.approx(0.75)

    uniform = dists.check_variance_floor(dists.Uniform01(), [0.0, 0.5])
    assert not uniform.satisfied
    assert any(p.edge_level for p in uniform.points)

    constant = dists.check_variance_floor(dists.Constant(1.0))
    assert not constant.satisfied


@pytest.mark.unit
def test_moment_condition_values() -> None:
    exp = dists.check_moment_condition(dists.Exponential(1.0), 2)
    assert exp.satisfied
    assert exp.value == pytest.approx(8.0, rel=1e-6)

    light = dists.check_moment_condition(dists.Pareto(5.0), 2)
    assert light.satisfied
    assert light.value == pytest.approx(5.0, rel=1e-6)

    heavy = dists.check_moment_condition(dists.Pareto(3.0), 2)
    assert not heavy.satisfied
    assert math.isinf(heavy.value)

    uniform = dists.check_moment_condition(dists.Uniform01(), 3)
    assert uniform.satisfied


@pytest.mark.unit
def test_moment_condition_rejects_low_dimension() -> None:
    with pytest.raises(ValueError):
        dists.check_moment_condition(dists.Exponential(1.0), 1)


ALL_LAWS = ["exp:1.0", "geom:0.5", "pareto:3.0", "stretched:0.5:1.0", "unif01", "const:2.0"]


@pytest.mark.unit
@pytest.mark.parametrize("spec", ALL_LAWS)
def test_truncated_mean_decreases_to_zero(spec: str) -> None:
    law = dists.parse_distribution(spec)
    k_grid = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]
    values = np.array([dists.truncated_mean(law, k) for k in k_grid])
    assert values[0] > 0.0
    assert np.all(np.diff(values) <= 1e-12 * values[0])
    assert values[-1] <= 1e-4 * values[0]


@pytest.mark.unit
@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(min_value=0.0, max_value=15.0, allow_nan=False),
    b=st.floats(min_value=0.0, max_value=15.0, allow_nan=False),
)
def test_truncated_excesses_are_positively_associated(a: float, b: float) -> None:
    for spec in ALL_LAWS:
        law = dists.parse_distribution(spec)
        cross = dists.truncated_cross_moment(law, a, b)
        product = dists.truncated_mean(law, a) * dists.truncated_mean(law, b)
        assert cross - product >= -1e-9 * max(cross, 1e-300)


@pytest.mark.unit
@pytest.mark.parametrize(
    "spec, k",
    [("exp:1.0", 1.0), ("geom:0.5", 2.0), ("stretched:0.5:1.0", 4.0), ("unif01", 0.5), ("pareto:5.0", 1.5)],
)
def test_conditional_tail_stats_match_monte_carlo(spec: str, k: float) -> None:
    law = dists.parse_distribution(spec)
    draws = dists.sample_array(law, substream(23, 0), 200_000).astype(float)
    tail = draws[draws > k]
    m = len(tail)
    mean_hat, var_hat = float(tail.mean()), float(tail.var(ddof=1))
    mean_se = math.sqrt(var_hat / m)
    var_se = math.sqrt(max(float(np.mean((tail - mean_hat) ** 4)) - var_hat**2, 0.0) / m)

    mean, var = dists.conditional_tail_stats(law, k)
    assert abs(mean - mean_hat) <= 3.0 * mean_se
    assert abs(var - var_hat) <= 3.0 * var_se
