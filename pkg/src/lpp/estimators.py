"""
estimators.py

DESCRIPTION
Monte Carlo estimators over replicated couplings:

  Q_t                E[T_0 T_t]
  corr               Corr(T_0, T_t)
  cov                Cov(T_0, T_t)
  l2                 E[(T_0 - T_t)^2]
  overlap            E[|pi_0 & pi_t|]
  var_T              Var(T_0)
  Inf_v(t)           co-influence, through the conditional-covariance form
                     Cov((X - k_v(0))_+, (X - k_v(t))_+ | other weights)

plus the numerical checks built on them: the covariance formula
Var(T) = int_0^1 sum_v Inf_v(t) dt, the derivative identity
-dQ_t/dt = sum_v Inf_v(t), the per-vertex influence bounds, the stability
bound and the monotonicity suites.

Execution model:
- replicate r always uses the coupling keyed (seed, r);
- replicates are processed in fixed-size chunks, optionally on a thread pool;
- chunk outputs are concatenated in replicate order before any reduction,
  so every estimate is bit-identical at any thread count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd
from scipy import integrate

from lpp.distributions import (
    DEFAULT_K_GRID,
    WeightDistribution,
    check_variance_floor,
    sample_array,
    truncated_cross_moment,
    truncated_cross_moment_array,
    truncated_mean,
    truncated_mean_array,
)
from lpp.dynamics import DynamicCoupling, build_coupling_batch, configuration_at
from lpp.errors import ConditionNotMetError, ConfigurationError
from lpp.lattice import Grid, Vertex, coordinates, vertex_index
from lpp.lpp_core import (
    DEFAULT_REL_TOL,
    BatchPassage,
    batch_passage,
    batch_threshold,
    forward_sweep,
    threshold_weight,
)
from lpp.report_types import (
    CovarianceFormulaCheck,
    EstimatorReport,
    FiniteDifferenceCheck,
    InfluenceEstimate,
    LemmaBoundsReport,
    MonotonicityCheck,
    StabilityReport,
    Verdict,
    VertexBound,
)
from lpp.rng import FIELD_INNER_DRAWS, FIELD_VERTEX_SAMPLE, substream, validate_seed

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")

# -----------------------------
# Settings
# -----------------------------

# Elements of a (replicates x N) working array per chunk.
CHUNK_ELEMENTS = int(os.environ.get("LPP_CHUNK_ELEMENTS", str(2**22)))

MIN_REPLICATES = 100
DEFAULT_VERTEX_SAMPLE = 64
MIN_TIME_GRID = 11

PASSAGE_COLUMNS = ["replicate", "t", "T0", "Tt", "overlap", "size0", "size_t", "sq_on_geodesic", "T_sq"]


# -----------------------------
# Chunked execution
# -----------------------------


def chunk_rows(grid: Grid, per_row: int = 0) -> int:
    """Replicates per chunk for a grid, given extra per-replicate elements."""

    return max(1, CHUNK_ELEMENTS // max(grid.size, per_row, 1))


def replicate_chunks(replicates: int, rows: int) -> List[np.ndarray]:
    return [np.arange(start, min(start + rows, replicates)) for start in range(0, replicates, rows)]


def map_chunks(fn: Callable[[np.ndarray], T], chunks: Sequence[np.ndarray], threads: int = 1) -> List[T]:
    """Apply ``fn`` to every chunk; results come back in chunk order."""

    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def _check_replicates(replicates: int, minimum: int = MIN_REPLICATES) -> int:
    replicates = int(replicates)
    if replicates < minimum:
        raise ConfigurationError(f"At least {minimum} replicates are required, got {replicates}")
    return replicates


def _check_times(times: Sequence[float]) -> List[float]:
    out = [float(t) for t in times]
    bad = [t for t in out if not (0.0 <= t <= 1.0)]
    if bad:
        raise ConfigurationError(f"Times must lie in [0, 1], got {bad}")
    return out


def _resolve_vertex_sample(grid: Grid, vertex_sample: Optional[int]) -> int:
    m = min(grid.size, DEFAULT_VERTEX_SAMPLE) if vertex_sample is None else int(vertex_sample)
    if not (1 <= m <= grid.size):
        raise ConfigurationError(f"Vertex sample must lie in 1..{grid.size}, got {m}")
    return m


# -----------------------------
# Elementary statistics
# -----------------------------


def mean_se(values: np.ndarray) -> Tuple[float, float]:
    """Sample mean and sample standard deviation / sqrt(count)."""

    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        return float(x.mean()) if len(x) else math.nan, math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def variance_se(values: np.ndarray) -> Tuple[float, float]:
    """Unbiased sample variance and the standard error of the mean squared deviation."""

    x = np.asarray(values, dtype=float)
    dev = x - x.mean()
    var = float(np.sum(dev * dev) / (len(x) - 1))
    _, se = mean_se(dev * dev)
    return var, se


def covariance_se(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    prod = (a - a.mean()) * (b - b.mean())
    _, se = mean_se(prod)
    return float(np.sum(prod) / (len(a) - 1)), se


def correlation_se(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    """Sample correlation with a delta-method standard error.

    Identical inputs give exactly (1, 0).
    """

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.array_equal(a, b):
        return 1.0, 0.0
    ca, cb = a - a.mean(), b - b.mean()
    sa, sb = math.sqrt(np.mean(ca * ca)), math.sqrt(np.mean(cb * cb))
    if sa == 0.0 or sb == 0.0:
        return math.nan, math.nan
    za, zb = ca / sa, cb / sb
    rho = float(np.mean(za * zb))
    psi = za * zb - 0.5 * rho * (za * za + zb * zb)
    _, se = mean_se(psi)
    return rho, se


def combined_se(*ses: float) -> float:
    return math.sqrt(sum(s * s for s in ses))


# -----------------------------
# Passage statistics
# -----------------------------


def _passage_chunk(
    grid: Grid, dist: WeightDistribution, seed: int, times: Sequence[float], rel_tol: float, reps: np.ndarray
) -> pd.DataFrame:
    batch = build_coupling_batch(grid, dist, seed, reps)
    w0 = batch.base
    p0 = batch_passage(grid, w0, rel_tol)
    squares = w0 * w0
    sq_on_geodesic = np.where(p0.geodesic, squares, 0).sum(axis=1)
    T_sq = forward_sweep(grid, squares)[0][:, grid.target]
    size0 = p0.geodesic.sum(axis=1)

    frames = []
    for t in times:
        pt = p0 if t == 0.0 else batch_passage(grid, batch.weights_at(t), rel_tol)
        frames.append(
            pd.DataFrame(
                {
                    "replicate": reps,
                    "t": t,
                    "T0": p0.T.astype(float),
                    "Tt": pt.T.astype(float),
                    "overlap": (p0.geodesic & pt.geodesic).sum(axis=1),
                    "size0": size0,
                    "size_t": pt.geodesic.sum(axis=1),
                    "sq_on_geodesic": sq_on_geodesic.astype(float),
                    "T_sq": T_sq.astype(float),
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


def passage_frame(
    n: int,
    d: int,
    dist: WeightDistribution,
    times: Sequence[float],
    replicates: int,
    seed: int,
    threads: int = 1,
    rel_tol: float = DEFAULT_REL_TOL,
) -> pd.DataFrame:
    """Per-replicate passage quantities at every t, ordered by (t position, replicate)."""

    grid = Grid(n, d)
    seed = validate_seed(seed)
    times = _check_times(times)
    chunks = replicate_chunks(int(replicates), chunk_rows(grid))
    parts = map_chunks(lambda reps: _passage_chunk(grid, dist, seed, times, rel_tol, reps), chunks, threads)
    frame = pd.concat(parts, ignore_index=True)
    frame["t_pos"] = frame["t"].map({t: i for i, t in enumerate(times)})
    frame = frame.sort_values(["t_pos", "replicate"], kind="mergesort").reset_index(drop=True)
    return frame[PASSAGE_COLUMNS]


def reports_from_frame(
    sub: pd.DataFrame, n: int, d: int, dist: WeightDistribution, seed: int, t: float
) -> Dict[str, EstimatorReport]:
    """Reports of one time slice of ``passage_frame``."""

    T0 = sub["T0"].to_numpy()
    Tt = sub["Tt"].to_numpy()
    R = len(sub)

    def report(quantity: str, estimate: float, se: float, at: Optional[float] = t) -> EstimatorReport:
        return EstimatorReport(quantity, float(estimate), float(se), R, at, n, d, dist.spec, seed)

    q, q_se = mean_se(T0 * Tt)
    corr, corr_se = correlation_se(T0, Tt)
    cov, cov_se = covariance_se(T0, Tt)
    l2, l2_se = mean_se((T0 - Tt) ** 2)
    overlap, overlap_se = mean_se(sub["overlap"].to_numpy())
    var, var_se = variance_se(T0)
    mean_T, mean_T_se = mean_se(T0)
    return {
        "Q_t": report("Q_t", q, q_se),
        "corr": report("corr", corr, corr_se),
        "cov": report("cov", cov, cov_se),
        "l2": report("l2", l2, l2_se),
        "overlap": report("overlap", overlap, overlap_se),
        "var_T": report("var_T", var, var_se, None),
        "mean_T": report("mean_T", mean_T, mean_T_se, None),
    }


def estimate_passage_curve(
    n: int,
    d: int,
    dist: WeightDistribution,
    times: Sequence[float],
    replicates: int,
    seed: int,
    threads: int = 1,
) -> List[Dict[str, EstimatorReport]]:
    """Passage statistics at every t of ``times``, from one set of couplings."""

    replicates = _check_replicates(replicates)
    frame = passage_frame(n, d, dist, times, replicates, seed, threads)
    out = []
    for t in _check_times(times):
        out.append(reports_from_frame(frame[frame["t"] == t], n, d, dist, seed, t))
    LOGGER.info(
        "PASSAGE_STATS_DONE n=%s d=%s dist=%s times=%s replicates=%s",
        n,
        d,
        dist.spec,
        len(out),
        replicates,
        extra={"n": n, "d": d, "dist": dist.spec},
    )
    return out


def estimate_passage_stats(
    n: int,
    d: int,
    dist: WeightDistribution,
    t: float,
    replicates: int,
    seed: int,
    threads: int = 1,
) -> Dict[str, EstimatorReport]:
    """Q_t, corr, cov, l2, overlap and var_T (plus mean_T) at a single time."""

    return estimate_passage_curve(n, d, dist, [t], replicates, seed, threads)[0]


def estimate_covariance(
    n: int, d: int, dist: WeightDistribution, t: float, replicates: int, seed: int, threads: int = 1
) -> EstimatorReport:
    return estimate_passage_stats(n, d, dist, t, replicates, seed, threads)["cov"]


def sample_passage_times(
    n: int, d: int, dist: WeightDistribution, replicates: int, seed: int, threads: int = 1
) -> np.ndarray:
    """T at time 0 of every replicate, forward sweep only."""

    grid = Grid(n, d)
    seed = validate_seed(seed)

    def run(reps: np.ndarray) -> np.ndarray:
        batch = build_coupling_batch(grid, dist, seed, reps)
        return forward_sweep(grid, batch.base)[0][:, grid.target].astype(float)

    parts = map_chunks(run, replicate_chunks(int(replicates), chunk_rows(grid)), threads)
    return np.concatenate(parts) if parts else np.empty(0)


def estimate_variance(
    n: int, d: int, dist: WeightDistribution, replicates: int, seed: int, threads: int = 1
) -> EstimatorReport:
    T0 = sample_passage_times(n, d, dist, _check_replicates(replicates, 2), seed, threads)
    var, se = variance_se(T0)
    return EstimatorReport("var_T", var, se, len(T0), None, n, d, dist.spec, int(seed))


# -----------------------------
# Co-influences
# -----------------------------


def influence_from_thresholds(dist: WeightDistribution, k0: np.ndarray, kt: np.ndarray) -> np.ndarray:
    """Cov((X - k0)_+, (X - kt)_+) for independent X ~ dist, elementwise."""

    k0 = np.asarray(k0, dtype=float)
    kt = np.asarray(kt, dtype=float)
    return truncated_cross_moment_array(dist, k0, kt) - truncated_mean_array(dist, k0) * truncated_mean_array(dist, kt)


def influence_of_vertex(coupling: DynamicCoupling, v: Vertex, t: float) -> float:
    """One-coupling sample of Inf_v(t): the conditional covariance given the other weights."""

    dist = coupling.dist
    k0 = float(threshold_weight(configuration_at(coupling, 0.0), v))
    kt = float(threshold_weight(configuration_at(coupling, t), v))
    return truncated_cross_moment(dist, k0, kt) - truncated_mean(dist, k0) * truncated_mean(dist, kt)


def influence_by_resampling(coupling: DynamicCoupling, v: Vertex, t: float, inner_draws: int = 1000) -> float:
    """Definition-level sample of Inf_v(t), for cross-checking ``influence_of_vertex``.

    The weight at v is replaced by ``inner_draws`` fresh values x, shared by the
    configurations at 0 and t; both passage times are recomputed by full sweeps and
    their sample covariance over x is returned.
    """

    grid = coupling.grid
    idx = vertex_index(grid, v)
    draws = sample_array(coupling.dist, substream(coupling.seed, coupling.replicate, FIELD_INNER_DRAWS), inner_draws)

    def passage_times(weights: np.ndarray) -> np.ndarray:
        block = np.repeat(weights[None, :], inner_draws, axis=0).astype(np.result_type(weights, draws))
        block[:, idx] = draws
        return forward_sweep(grid, block)[0][:, grid.target].astype(float)

    T0 = passage_times(coupling.weights_at(0.0))
    Tt = passage_times(coupling.weights_at(t))
    return float(np.sum((T0 - T0.mean()) * (Tt - Tt.mean())) / (inner_draws - 1))


def _slot_thresholds(grid: Grid, weights: np.ndarray, passage: BatchPassage, vertex_rows: np.ndarray) -> np.ndarray:
    out = np.zeros(vertex_rows.shape, dtype=weights.dtype)
    for j in range(vertex_rows.shape[1]):
        out[:, j] = batch_threshold(grid, weights, vertex_rows[:, j], passage=passage)
    return out


def _vertex_rows(grid: Grid, seed: int, reps: np.ndarray, m: int) -> np.ndarray:
    """Vertices evaluated for each replicate: all of them, or a uniform subset per replicate."""

    if m >= grid.size:
        return np.broadcast_to(np.arange(grid.size), (len(reps), grid.size))
    return np.stack(
        [np.sort(substream(seed, int(r), FIELD_VERTEX_SAMPLE).choice(grid.size, m, replace=False)) for r in reps]
    ).reshape(len(reps), m)


def _influence_chunk(
    grid: Grid,
    dist: WeightDistribution,
    seed: int,
    times: Sequence[float],
    rows_fn: Callable[[np.ndarray], np.ndarray],
    reps: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (influence samples (R, m, len(times)), T_0 (R,)) for a chunk of replicates."""

    batch = build_coupling_batch(grid, dist, seed, reps)
    rows = rows_fn(reps)
    w0 = batch.base
    p0 = batch_passage(grid, w0)
    k0 = _slot_thresholds(grid, w0, p0, rows)
    out = np.empty(rows.shape + (len(times),))
    for i, t in enumerate(times):
        if t == 0.0:
            kt = k0
        else:
            wt = batch.weights_at(t)
            kt = _slot_thresholds(grid, wt, batch_passage(grid, wt), rows)
        out[:, :, i] = influence_from_thresholds(dist, k0, kt)
    return out, p0.T.astype(float)


def _total_influence_matrix(
    grid: Grid,
    dist: WeightDistribution,
    seed: int,
    times: Sequence[float],
    replicates: int,
    m: int,
    threads: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-replicate (N/m) * sum of sampled influences, shape (R, len(times)), and T_0."""

    scale = grid.size / m

    def run(reps: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        infl, T0 = _influence_chunk(grid, dist, seed, times, lambda r: _vertex_rows(grid, seed, r, m), reps)
        return scale * infl.sum(axis=1), T0

    rows = chunk_rows(grid, m * len(times))
    parts = map_chunks(run, replicate_chunks(replicates, rows), threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def total_influence_curve(
    n: int,
    d: int,
    dist: WeightDistribution,
    times: Sequence[float],
    replicates: int,
    vertex_sample: Optional[int],
    seed: int,
    threads: int = 1,
) -> List[InfluenceEstimate]:
    grid = Grid(n, d)
    seed = validate_seed(seed)
    times = _check_times(times)
    m = _resolve_vertex_sample(grid, vertex_sample)
    matrix, _ = _total_influence_matrix(grid, dist, seed, times, _check_replicates(replicates, 2), m, threads)
    out = []
    for i, t in enumerate(times):
        est, se = mean_se(matrix[:, i])
        out.append(InfluenceEstimate(None, t, est, se, m, len(matrix), n, d, dist.spec, seed))
    return out


def total_influence(
    n: int,
    d: int,
    dist: WeightDistribution,
    t: float,
    replicates: int,
    vertex_sample: Optional[int],
    seed: int,
    threads: int = 1,
) -> InfluenceEstimate:
    """Estimate of sum_v Inf_v(t); a vertex subset of size m < N is scaled by N / m."""

    return total_influence_curve(n, d, dist, [t], replicates, vertex_sample, seed, threads)[0]


def _fixed_vertices(grid: Grid, seed: int, vertex_sample: Optional[int]) -> np.ndarray:
    m = _resolve_vertex_sample(grid, vertex_sample)
    if m >= grid.size:
        return np.arange(grid.size)
    return np.sort(substream(seed, FIELD_VERTEX_SAMPLE).choice(grid.size, m, replace=False))


def influence_curve_by_vertex(
    n: int,
    d: int,
    dist: WeightDistribution,
    times: Sequence[float],
    replicates: int,
    seed: int,
    vertex_sample: Optional[int] = None,
    threads: int = 1,
) -> Dict[int, List[InfluenceEstimate]]:
    """Inf_v(t) over ``times`` for a fixed vertex subset shared by all replicates."""

    grid = Grid(n, d)
    seed = validate_seed(seed)
    times = _check_times(times)
    vertices = _fixed_vertices(grid, seed, vertex_sample)

    def run(reps: np.ndarray) -> np.ndarray:
        rows_fn = lambda r: np.broadcast_to(vertices, (len(r), len(vertices)))  # noqa: E731
        return _influence_chunk(grid, dist, seed, times, rows_fn, reps)[0]

    rows = chunk_rows(grid, len(vertices) * len(times))
    infl = np.concatenate(map_chunks(run, replicate_chunks(_check_replicates(replicates, 2), rows), threads))
    out: Dict[int, List[InfluenceEstimate]] = {}
    for j, v in enumerate(vertices):
        out[int(v)] = [
            InfluenceEstimate(int(v), t, *mean_se(infl[:, j, i]), 1, len(infl), n, d, dist.spec, seed)
            for i, t in enumerate(times)
        ]
    return out


# -----------------------------
# Identity checks
# -----------------------------


def check_non_increasing(estimates: Sequence[float], ses: Sequence[float], k: float = 2.0) -> MonotonicityCheck:
    """Every step up is at most k combined standard errors of the two points."""

    est = np.asarray(estimates, dtype=float)
    se = np.asarray(ses, dtype=float)
    violations: List[int] = []
    max_excess = -math.inf
    for i in range(len(est) - 1):
        slack = k * combined_se(se[i], se[i + 1])
        excess = (est[i + 1] - est[i]) - slack
        max_excess = max(max_excess, float(excess))
        if excess > 0:
            violations.append(i + 1)
    if len(est) < 2:
        max_excess = 0.0
    return MonotonicityCheck(passed=not violations, k=k, max_excess=max_excess, violations=violations)


def check_positive_association(cov: EstimatorReport, k: float = 3.0) -> Verdict:
    return Verdict.check(
        f"positive_association_t={cov.t}", cov.estimate >= -k * cov.stderr, cov.estimate, 0.0, k * cov.stderr
    )


def check_chaos_integral(
    var: EstimatorReport, overlap: EstimatorReport, floor: float, t: float, k: float = 3.0
) -> Verdict:
    """floor * t * E|pi_0 & pi_t| <= Var(T) within k combined standard errors."""

    lhs = floor * t * overlap.estimate
    tol = k * combined_se(var.stderr, floor * t * overlap.stderr)
    return Verdict.check(f"chaos_integral_t={t}", lhs <= var.estimate + tol, lhs, var.estimate, tol, floor=floor)


def finite_difference_check(
    n: int,
    d: int,
    dist: WeightDistribution,
    t: float,
    h: float,
    replicates: int,
    seed: int,
    vertex_sample: Optional[int] = None,
    threads: int = 1,
    k: float = 3.0,
) -> FiniteDifferenceCheck:
    """Compare -(Q_{t+h} - Q_{t-h}) / 2h with sum_v Inf_v(t) on the same couplings."""

    if not (h > 0 and 0.0 <= t - h and t + h <= 1.0):
        raise ConfigurationError(f"Need 0 <= t - h and t + h <= 1 with h > 0, got t={t} h={h}")
    replicates = _check_replicates(replicates)
    frame = passage_frame(n, d, dist, [t - h, t + h], replicates, seed, threads)
    lo = frame[frame["t"] == t - h]
    hi = frame[frame["t"] == t + h]
    T0 = lo["T0"].to_numpy()
    deriv = -(T0 * hi["Tt"].to_numpy() - T0 * lo["Tt"].to_numpy()) / (2.0 * h)
    d_est, d_se = mean_se(deriv)
    infl = total_influence(n, d, dist, t, replicates, vertex_sample, seed, threads)
    comb = combined_se(d_se, infl.stderr)
    return FiniteDifferenceCheck(
        t=t,
        h=h,
        derivative=d_est,
        derivative_se=d_se,
        influence=infl.estimate,
        influence_se=infl.stderr,
        combined_se=comb,
        passed=abs(d_est - infl.estimate) <= k * comb,
    )


def verify_covariance_formula(
    n: int,
    d: int,
    dist: WeightDistribution,
    time_grid: Sequence[float],
    replicates: int,
    seed: int,
    vertex_sample: Optional[int] = None,
    threads: int = 1,
    k: float = 3.0,
) -> CovarianceFormulaCheck:
    """Trapezoid of sum_v Inf_v(t) over [0, 1] against the sample variance of T.

    Influences are non-increasing in t, so the left and right Riemann sums bracket
    the integral and half their gap bounds the trapezoid error.
    """

    times = _check_times(time_grid)
    if len(times) < MIN_TIME_GRID or times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0):
        raise ConfigurationError(f"Time grid must increase from 0 to 1 with at least {MIN_TIME_GRID} points")
    grid = Grid(n, d)
    seed = validate_seed(seed)
    m = _resolve_vertex_sample(grid, vertex_sample)
    matrix, T0 = _total_influence_matrix(grid, dist, seed, times, _check_replicates(replicates), m, threads)

    means = matrix.mean(axis=0)
    ses = np.array([mean_se(matrix[:, i])[1] for i in range(len(times))])
    per_replicate = integrate.trapezoid(matrix, times, axis=1)
    quad, quad_se = mean_se(per_replicate)
    var, var_se = variance_se(T0)
    widths = np.diff(times)
    left = float(np.sum(widths * means[:-1]))
    right = float(np.sum(widths * means[1:]))
    bracket = abs(left - right) / 2.0
    comb = combined_se(quad_se, var_se)

    upper_tol = k * combined_se(ses[0], var_se)
    upper = Verdict.check("influence_sum_upper_bound", means[0] >= var - upper_tol, means[0], var, upper_tol)
    passed = abs(quad - var) <= k * comb + bracket
    LOGGER.info(
        "COVARIANCE_FORMULA quadrature=%.6g variance=%.6g combined_se=%.3g bracket=%.3g passed=%s",
        quad,
        var,
        comb,
        bracket,
        passed,
        extra={"n": n, "d": d, "dist": dist.spec},
    )
    return CovarianceFormulaCheck(
        times=times,
        influence=[float(x) for x in means],
        influence_se=[float(x) for x in ses],
        quadrature=quad,
        quadrature_se=quad_se,
        sample_variance=var,
        sample_variance_se=var_se,
        combined_se=comb,
        bracket_bound=bracket,
        passed=bool(passed),
        upper_bound=upper,
    )


def _lemma_chunk(
    grid: Grid, dist: WeightDistribution, seed: int, t: float, vertices: np.ndarray, reps: np.ndarray
) -> np.ndarray:
    """(R, m, 4) samples: Inf_v(0), w_v(0)^2 1{v in pi_0}, Inf_v(t), 1{v in pi_0 & pi_t}."""

    batch = build_coupling_batch(grid, dist, seed, reps)
    rows = np.broadcast_to(vertices, (len(reps), len(vertices)))
    w0 = batch.base
    p0 = batch_passage(grid, w0)
    wt = batch.weights_at(t)
    pt = p0 if t == 0.0 else batch_passage(grid, wt)
    k0 = _slot_thresholds(grid, w0, p0, rows)
    kt = k0 if t == 0.0 else _slot_thresholds(grid, wt, pt, rows)
    on0 = p0.geodesic[:, vertices]
    weight = w0[:, vertices].astype(float)
    return np.stack(
        [
            influence_from_thresholds(dist, k0, k0),
            np.where(on0, weight * weight, 0.0),
            influence_from_thresholds(dist, k0, kt),
            (on0 & pt.geodesic[:, vertices]).astype(float),
        ],
        axis=2,
    )


def verify_lemma_bounds(
    n: int,
    d: int,
    dist: WeightDistribution,
    t: float,
    replicates: int,
    seed: int,
    vertex_sample: Optional[int] = None,
    k_grid: Sequence[float] = DEFAULT_K_GRID,
    threads: int = 1,
    k: float = 3.0,
) -> LemmaBoundsReport:
    """Per sampled vertex:
    Inf_v(0) <= E[w_v(0)^2 1{v in pi_0}]   and   Inf_v(t) >= c P(v in pi_0 & pi_t),
    with c the conditional-variance floor of the law.

    Raises ConditionNotMetError for laws without a positive floor.
    """

    floor_check = check_variance_floor(dist, k_grid)
    if not floor_check.satisfied:
        raise ConditionNotMetError(
            f"{dist.spec} has no positive lower bound on Var(X | X > k) (floor={floor_check.floor:.3g})"
        )
    c = floor_check.floor
    t = _check_times([t])[0]
    grid = Grid(n, d)
    seed = validate_seed(seed)
    vertices = _fixed_vertices(grid, seed, vertex_sample)
    rows = chunk_rows(grid, 4 * len(vertices))
    samples = np.concatenate(
        map_chunks(
            lambda reps: _lemma_chunk(grid, dist, seed, t, vertices, reps),
            replicate_chunks(_check_replicates(replicates, 2), rows),
            threads,
        )
    )

    bounds: List[VertexBound] = []
    for j, v in enumerate(vertices):
        inf0, inf0_se = mean_se(samples[:, j, 0])
        upper, upper_se = mean_se(samples[:, j, 1])
        inft, inft_se = mean_se(samples[:, j, 2])
        both, both_se = mean_se(samples[:, j, 3])
        lower_se = combined_se(inft_se, c * both_se)
        bounds.append(
            VertexBound(
                vertex=int(v),
                coords=list(coordinates(grid, int(v))),
                influence_0=inf0,
                influence_0_se=inf0_se,
                weight_sq_on_geodesic=upper,
                upper_se=combined_se(inf0_se, upper_se),
                influence_t=inft,
                influence_t_se=inft_se,
                both_geodesics=both,
                lower_se=lower_se,
                upper_ok=bool(inf0 <= upper + k * combined_se(inf0_se, upper_se)),
                lower_ok=bool(inft >= c * both - k * lower_se),
            )
        )
    passed = all(b.upper_ok and b.lower_ok for b in bounds)
    return LemmaBoundsReport(t=t, floor=c, vertices=bounds, passed=passed)


def verify_stability_bound(
    n: int,
    d: int,
    dist: WeightDistribution,
    t: float,
    replicates: int,
    seed: int,
    threads: int = 1,
    k: float = 3.0,
    k_rearranged: float = 4.0,
) -> StabilityReport:
    """E[(T_0 - T_t)^2] <= 2t E[sum_{v in pi_0} w_v^2], the squared-weight majorant,
    and Cov(T_0, T_t) = Var(T) - L2 / 2."""

    replicates = _check_replicates(replicates)
    frame = passage_frame(n, d, dist, [t], replicates, seed, threads)
    T0 = frame["T0"].to_numpy()
    Tt = frame["Tt"].to_numpy()
    sq = frame["sq_on_geodesic"].to_numpy()
    T_sq = frame["T_sq"].to_numpy()

    l2, l2_se = mean_se((T0 - Tt) ** 2)
    bound, bound_se = mean_se(2.0 * t * sq)
    sq_mean, sq_se = mean_se(sq)
    tsq_mean, tsq_se = mean_se(T_sq)
    cov, _ = covariance_se(T0, Tt)
    var, _ = variance_se(T0)
    rearranged = var - 0.5 * l2
    a, b = T0 - T0.mean(), Tt - Tt.mean()
    _, g_se = mean_se(a * b - a * a + 0.5 * (T0 - Tt) ** 2)

    bound_tol = k * combined_se(l2_se, bound_se)
    major_tol = k * combined_se(sq_se, tsq_se)
    # the sum over pi_0 is over the union of geodesics; it bounds a single path only without ties
    if np.any(frame["size0"].to_numpy() > d * n + 1):
        majorant = Verdict.skipped(f"squared_weight_majorant_t={t}", "geodesic not unique in some replicate")
    else:
        majorant = Verdict.check(
            f"squared_weight_majorant_t={t}", sq_mean <= tsq_mean + major_tol, sq_mean, tsq_mean, major_tol
        )
    return StabilityReport(
        t=t,
        l2=l2,
        l2_se=l2_se,
        bound=bound,
        bound_se=bound_se,
        weight_sq_on_geodesic=sq_mean,
        squared_weight_passage=tsq_mean,
        majorant_se=combined_se(sq_se, tsq_se),
        covariance=cov,
        rearranged=rearranged,
        rearranged_se=g_se,
        bound_verdict=Verdict.check(f"l2_linear_bound_t={t}", l2 <= bound + bound_tol, l2, bound, bound_tol),
        majorant_verdict=majorant,
        rearrangement_verdict=Verdict.check(
            f"covariance_rearrangement_t={t}",
            abs(cov - rearranged) <= k_rearranged * g_se,
            cov,
            rearranged,
            k_rearranged * g_se,
        ),
    )
