"""
distributions.py

DESCRIPTION
Weight laws for the lattice: sampling, distribution function, truncated
moments used by the co-influence formula, the integrability check for the
squared-weight passage time and the conditional tail statistics
Var(X | X > k) with their uniform lower bound.

Supported laws (CLI spec strings in brackets):
  Exponential(rate)                    [exp:<rate>]
  Geometric(p), support {1, 2, ...}    [geom:<p>]
  Pareto(gamma), support [1, inf)      [pareto:<gamma>]
  StretchedExponential(shape, scale)   [stretched:<shape>:<scale>]
  Uniform01                            [unif01]
  Constant(value), zero variance       [const:<value>]

All truncated moments are expressed through the survival function S(y) = P(X > y):
  E[(X - k)_+]      = int_k^inf S(y) dy
  E[(X - k)_+^2]    = 2 int_k^inf (y - k) S(y) dy
  E[(X-a)_+(X-b)_+] = E[(X - b)_+^2] + (b - a) E[(X - b)_+]      (a <= b)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from lpp.errors import ConfigurationError, DegenerateTailError

LOGGER = logging.getLogger(__name__)

ArrayLike = Union[float, int, np.ndarray]

# -----------------------------
# Numerical settings
# -----------------------------

# Survival mass below which tail statistics of bounded laws are refused.
DEGENERATE_TAIL = 1e-12

# Truncation error target of the moment-condition cutoff test.
MOMENT_TOLERANCE = 1e-8

# Per-chunk absolute tolerance for truncated moments.
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200

# Cutoff doublings before an unbounded integral is declared divergent.
MAX_DOUBLINGS = 1000

# Consecutive growing increments that end the doubling test early.
GROWTH_RUN_LIMIT = 64

# Smallest accepted conditional variance in the variance-floor check.
VARIANCE_FLOOR_MIN = 1e-6

# Relative offset of the extra level placed just below a bounded upper support edge.
EDGE_LEVEL_OFFSET = 1e-3

DEFAULT_K_GRID: Tuple[float, ...] = (0.0, 1.0, 2.0, 5.0, 10.0, 50.0)


# -----------------------------
# Laws
# -----------------------------


@dataclass(frozen=True)
class WeightDistribution:
    """Common surface of the weight laws.

    Subclasses provide the survival function, vectorised sampling and, where
    available, closed forms of
      I0(k) = E[(X - k)_+]        (``excess_mean``)
      J(k)  = E[(X - k)_+^2] / 2  (``excess_half_square``)
    for arrays of levels k >= 0.
    """

    kind: ClassVar[str] = ""
    integer_valued: ClassVar[bool] = False
    # log-survival stays accurate far into the tail
    analytic_tail: ClassVar[bool] = True
    # scalar truncated moments come from I0/J instead of quadrature
    elementary_moments: ClassVar[bool] = True

    def survival(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_survival(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.survival(x))

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def excess_mean(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def excess_half_square(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def tail_stats(self, k: float) -> Optional[Tuple[float, float]]:
        """Return (E[X - k | X > k], Var(X | X > k)) when known in closed form."""

        return None

    @property
    def upper_support(self) -> float:
        return math.inf

    @property
    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(WeightDistribution):
    """Exponential law with the given rate."""

    rate: float = 1.0
    kind: ClassVar[str] = "exp"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ConfigurationError(f"Exponential rate must be > 0, got {self.rate}")

    def survival(self, x: np.ndarray) -> np.ndarray:
        return np.exp(-self.rate * np.maximum(x, 0.0))

    def log_survival(self, x: np.ndarray) -> np.ndarray:
        return -self.rate * np.maximum(x, 0.0)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return gen.exponential(1.0 / self.rate, size)

    def mean(self) -> float:
        return 1.0 / self.rate

    def variance(self) -> float:
        return 1.0 / self.rate**2

    def excess_mean(self, k: np.ndarray) -> np.ndarray:
        return np.exp(-self.rate * k) / self.rate

    def excess_half_square(self, k: np.ndarray) -> np.ndarray:
        return np.exp(-self.rate * k) / self.rate**2

    def tail_stats(self, k: float) -> Optional[Tuple[float, float]]:
        return 1.0 / self.rate, self.variance()

    @property
    def spec(self) -> str:
        return f"exp:{self.rate!r}"


@dataclass(frozen=True)
class Geometric(WeightDistribution):
    """Geometric law on {1, 2, ...} with P(X = j) = (1 - p)^(j - 1) p."""

    p: float = 0.5
    kind: ClassVar[str] = "geom"
    integer_valued: ClassVar[bool] = True

    def __post_init__(self) -> None:
        if not (0.0 < self.p < 1.0):
            raise ConfigurationError(f"Geometric p must lie in (0, 1), got {self.p}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def survival(self, x: np.ndarray) -> np.ndarray:
        return np.power(self.q, np.floor(np.maximum(x, 0.0)))

    def log_survival(self, x: np.ndarray) -> np.ndarray:
        return np.floor(np.maximum(x, 0.0)) * math.log(self.q)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return gen.geometric(self.p, size).astype(np.int64)

    def mean(self) -> float:
        return 1.0 / self.p

    def variance(self) -> float:
        return self.q / self.p**2

    def excess_mean(self, k: np.ndarray) -> np.ndarray:
        p, q = self.p, self.q
        m = np.floor(k)
        f = k - m
        return (1.0 - f) * q**m + q ** (m + 1) / p

    def excess_half_square(self, k: np.ndarray) -> np.ndarray:
        p, q = self.p, self.q
        m = np.floor(k)
        f = k - m
        nxt = m + 1
        return q**m * (1.0 - f) ** 2 / 2 + q**nxt * (nxt * p + q) / p**2 + (0.5 - k) * q**nxt / p

    def tail_stats(self, k: float) -> Optional[Tuple[float, float]]:
        # X | X > k is floor(k) + X
        return math.floor(k) + 1.0 / self.p - k, self.variance()

    @property
    def spec(self) -> str:
        return f"geom:{self.p!r}"


@dataclass(frozen=True)
class Pareto(WeightDistribution):
    """Pareto law on [1, inf) with P(X > x) = x^-gamma; gamma > 2 keeps the variance finite."""

    gamma: float = 3.0
    kind: ClassVar[str] = "pareto"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 2.0):
            raise ConfigurationError(f"Pareto exponent must be > 2 (finite variance), got {self.gamma}")

    def survival(self, x: np.ndarray) -> np.ndarray:
        return np.power(np.maximum(x, 1.0), -self.gamma)

    def log_survival(self, x: np.ndarray) -> np.ndarray:
        return -self.gamma * np.log(np.maximum(x, 1.0))

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return 1.0 + gen.pareto(self.gamma, size)

    def mean(self) -> float:
        return self.gamma / (self.gamma - 1.0)

    def variance(self) -> float:
        g = self.gamma
        return g / ((g - 1.0) ** 2 * (g - 2.0))

    def excess_mean(self, k: np.ndarray) -> np.ndarray:
        g = self.gamma
        above = np.power(np.maximum(k, 1.0), 1.0 - g) / (g - 1.0)
        return np.where(k >= 1.0, above, g / (g - 1.0) - k)

    def excess_half_square(self, k: np.ndarray) -> np.ndarray:
        g = self.gamma
        above = np.power(np.maximum(k, 1.0), 2.0 - g) / ((g - 1.0) * (g - 2.0))
        below = 0.5 * (g / (g - 2.0) - 2.0 * k * g / (g - 1.0) + k * k)
        return np.where(k >= 1.0, above, below)

    def tail_stats(self, k: float) -> Optional[Tuple[float, float]]:
        # X | X > k has the law of k X above the support edge
        if k >= 1.0:
            return k / (self.gamma - 1.0), k * k * self.variance()
        return self.mean() - k, self.variance()

    @property
    def spec(self) -> str:
        return f"pareto:{self.gamma!r}"


@dataclass(frozen=True)
class StretchedExponential(WeightDistribution):
    """Law with P(X > x) = exp(-scale * x^shape) on [0, inf), shape in (0, 1]."""

    shape: float = 0.5
    scale: float = 1.0
    kind: ClassVar[str] = "stretched"
    elementary_moments: ClassVar[bool] = False

    def __post_init__(self) -> None:
        if not (0.0 < self.shape <= 1.0):
            raise ConfigurationError(f"Stretched-exponential shape must lie in (0, 1], got {self.shape}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ConfigurationError(f"Stretched-exponential scale must be > 0, got {self.scale}")

    def survival(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_survival(x))

    def log_survival(self, x: np.ndarray) -> np.ndarray:
        return -self.scale * np.power(np.maximum(x, 0.0), self.shape)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return np.power(gen.exponential(1.0, size) / self.scale, 1.0 / self.shape)

    def _tail_power_moment(self, s: int, k: np.ndarray) -> np.ndarray:
        """int_k^inf y^s S(y) dy through the regularised upper incomplete gamma function."""

        a = (s + 1) / self.shape
        lead = self.scale ** (-a) * special.gamma(a) / self.shape
        return lead * special.gammaincc(a, self.scale * np.power(np.maximum(k, 0.0), self.shape))

    def mean(self) -> float:
        return float(self._tail_power_moment(0, np.float64(0.0)))

    def variance(self) -> float:
        second = 2.0 * float(self._tail_power_moment(1, np.float64(0.0)))
        return second - self.mean() ** 2

    def excess_mean(self, k: np.ndarray) -> np.ndarray:
        return self._tail_power_moment(0, k)

    def excess_half_square(self, k: np.ndarray) -> np.ndarray:
        return np.maximum(self._tail_power_moment(1, k) - k * self._tail_power_moment(0, k), 0.0)

    @property
    def spec(self) -> str:
        return f"stretched:{self.shape!r}:{self.scale!r}"


@dataclass(frozen=True)
class Uniform01(WeightDistribution):
    """Uniform law on [0, 1]."""

    kind: ClassVar[str] = "unif01"
    analytic_tail: ClassVar[bool] = False

    def survival(self, x: np.ndarray) -> np.ndarray:
        return np.clip(1.0 - np.asarray(x, dtype=float), 0.0, 1.0)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return gen.random(size)

    def mean(self) -> float:
        return 0.5

    def variance(self) -> float:
        return 1.0 / 12.0

    def excess_mean(self, k: np.ndarray) -> np.ndarray:
        return np.clip(1.0 - k, 0.0, 1.0) ** 2 / 2.0

    def excess_half_square(self, k: np.ndarray) -> np.ndarray:
        return np.clip(1.0 - k, 0.0, 1.0) ** 3 / 6.0

    @property
    def upper_support(self) -> float:
        return 1.0

    @property
    def spec(self) -> str:
        return "unif01"


@dataclass(frozen=True)
class Constant(WeightDistribution):
    """Point mass at ``value``: deterministic weights, zero variance."""

    value: float = 1.0
    kind: ClassVar[str] = "const"
    analytic_tail: ClassVar[bool] = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ConfigurationError(f"Constant weight must be finite and >= 0, got {self.value}")

    def survival(self, x: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(x, dtype=float) < self.value, 1.0, 0.0)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))

    def mean(self) -> float:
        return float(self.value)

    def variance(self) -> float:
        return 0.0

    def excess_mean(self, k: np.ndarray) -> np.ndarray:
        return np.maximum(self.value - k, 0.0)

    def excess_half_square(self, k: np.ndarray) -> np.ndarray:
        return np.maximum(self.value - k, 0.0) ** 2 / 2.0

    def tail_stats(self, k: float) -> Optional[Tuple[float, float]]:
        return self.value - k, 0.0

    @property
    def upper_support(self) -> float:
        return float(self.value)

    @property
    def spec(self) -> str:
        return f"const:{self.value!r}"


# -----------------------------
# Spec strings
# -----------------------------

_PARAM_COUNT = {"exp": 1, "geom": 1, "pareto": 1, "stretched": 2, "unif01": 0, "const": 1}


def parse_distribution(spec: str) -> WeightDistribution:
    """Parse a CLI spec string such as ``exp:1.0`` or ``stretched:0.5:1.0``."""

    parts = [p.strip() for p in str(spec).strip().split(":")]
    kind, raw = parts[0].lower(), parts[1:]
    if kind not in _PARAM_COUNT:
        raise ConfigurationError(f"Unknown distribution '{spec}' (expected one of {sorted(_PARAM_COUNT)})")
    if len(raw) != _PARAM_COUNT[kind]:
        raise ConfigurationError(f"Distribution '{spec}' needs {_PARAM_COUNT[kind]} parameter(s)")
    try:
        params = [float(p) for p in raw]
    except ValueError as exc:
        raise ConfigurationError(f"Distribution '{spec}' has a non-numeric parameter") from exc

    if kind == "exp":
        return Exponential(params[0])
    if kind == "geom":
        return Geometric(params[0])
    if kind == "pareto":
        return Pareto(params[0])
    if kind == "stretched":
        return StretchedExponential(params[0], params[1])
    if kind == "const":
        return Constant(params[0])
    return Uniform01()


def format_distribution(dist: WeightDistribution) -> str:
    return dist.spec


# -----------------------------
# Sampling and distribution function
# -----------------------------


def sample_array(dist: WeightDistribution, stream: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` independent weights (int64 for integer-valued laws, float64 otherwise)."""

    return dist.draw(stream, int(size))


def sample(dist: WeightDistribution, stream: np.random.Generator) -> Union[float, int]:
    value = sample_array(dist, stream, 1)[0]
    return int(value) if dist.integer_valued else float(value)


def _as_output(x: ArrayLike, values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(x) == 0 else values


def survival(dist: WeightDistribution, x: ArrayLike) -> ArrayLike:
    """P(X > x)."""

    arr = np.asarray(x, dtype=float)
    return _as_output(x, dist.survival(arr))


def log_survival(dist: WeightDistribution, x: ArrayLike) -> ArrayLike:
    arr = np.asarray(x, dtype=float)
    return _as_output(x, dist.log_survival(arr))


def cdf(dist: WeightDistribution, x: ArrayLike) -> ArrayLike:
    """F(x) = P(X <= x): right-continuous, 0 below the support."""

    arr = np.asarray(x, dtype=float)
    return _as_output(x, 1.0 - dist.survival(arr))


def mean(dist: WeightDistribution) -> float:
    return float(dist.mean())


def variance(dist: WeightDistribution) -> float:
    return float(dist.variance())


# -----------------------------
# Quadrature
# -----------------------------


def _quad(fn: Callable[[float], float], a: float, b: float) -> float:
    value, _ = integrate.quad(fn, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return float(value)


def _tail_integral(fn: Callable[[float], float], lower: float, upper: float, width: float) -> float:
    """int_lower^upper fn, doubling the chunk width on an unbounded range until chunks vanish."""

    if math.isfinite(upper):
        return _quad(fn, lower, upper) if upper > lower else 0.0

    total = 0.0
    a = lower
    quiet = 0
    for _ in range(MAX_DOUBLINGS):
        inc = _quad(fn, a, a + width)
        total += inc
        a += width
        width *= 2.0
        quiet = quiet + 1 if abs(inc) <= QUAD_EPSABS else 0
        if quiet >= 2:
            break
    return total


def _check_level(k: float) -> float:
    k = float(k)
    if not (k >= 0.0 and math.isfinite(k)):
        raise ValueError(f"Truncation level must be finite and >= 0, got {k}")
    return k


def _quadrature_width(dist: WeightDistribution, k: float) -> float:
    return max(1.0, k, dist.mean())


# -----------------------------
# Truncated moments
# -----------------------------


def _excess_mean_scalar(dist: WeightDistribution, k: float) -> float:
    if dist.elementary_moments:
        return float(dist.excess_mean(np.float64(k)))
    return _tail_integral(
        lambda y: float(dist.survival(np.float64(y))), k, dist.upper_support, _quadrature_width(dist, k)
    )


def _excess_half_square_scalar(dist: WeightDistribution, k: float) -> float:
    if dist.elementary_moments:
        return float(dist.excess_half_square(np.float64(k)))
    return _tail_integral(
        lambda y: (y - k) * float(dist.survival(np.float64(y))),
        k,
        dist.upper_support,
        _quadrature_width(dist, k),
    )


def truncated_mean(dist: WeightDistribution, k: float) -> float:
    """E[(X - k)_+]."""

    return _excess_mean_scalar(dist, _check_level(k))


def truncated_second_moment(dist: WeightDistribution, k: float) -> float:
    """E[(X - k)_+^2]."""

    return 2.0 * _excess_half_square_scalar(dist, _check_level(k))


def truncated_cross_moment(dist: WeightDistribution, a: float, b: float) -> float:
    """E[(X - a)_+ (X - b)_+], symmetric in (a, b)."""

    lo, hi = sorted((_check_level(a), _check_level(b)))
    return 2.0 * _excess_half_square_scalar(dist, hi) + (hi - lo) * _excess_mean_scalar(dist, hi)


def truncated_mean_array(dist: WeightDistribution, k: np.ndarray) -> np.ndarray:
    """Vectorised E[(X - k)_+] over an array of levels k >= 0."""

    return dist.excess_mean(np.asarray(k, dtype=float))


def truncated_cross_moment_array(dist: WeightDistribution, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return 2.0 * dist.excess_half_square(hi) + (hi - lo) * dist.excess_mean(hi)


# -----------------------------
# Tail-conditional statistics
# -----------------------------


def _normalised_tail_moments(dist: WeightDistribution, k: float) -> Tuple[float, float]:
    """Return (E[X - k | X > k], E[(X - k)^2 | X > k]) by quadrature of S(y) / S(k)."""

    log_sk = float(dist.log_survival(np.float64(k)))

    def ratio(y: float) -> float:
        return math.exp(float(dist.log_survival(np.float64(y))) - log_sk)

    width = _quadrature_width(dist, k)
    first = _tail_integral(ratio, k, dist.upper_support, width)
    second = 2.0 * _tail_integral(lambda y: (y - k) * ratio(y), k, dist.upper_support, width)
    return first, second


def _tail_excess_and_variance(dist: WeightDistribution, k: float) -> Tuple[float, float]:
    k = _check_level(k)
    mass = float(dist.survival(np.float64(k)))
    if mass <= 0.0 or (not dist.analytic_tail and mass < DEGENERATE_TAIL):
        raise DegenerateTailError(f"P(X > {k}) = {mass:.3g} for {dist.spec}: conditional statistics undefined")

    known = dist.tail_stats(k)
    if known is not None:
        return known
    excess, second = _normalised_tail_moments(dist, k)
    return excess, max(second - excess * excess, 0.0)


def conditional_tail_stats(dist: WeightDistribution, k: float) -> Tuple[float, float]:
    """Return (E[X | X > k], Var(X | X > k))."""

    excess, var = _tail_excess_and_variance(dist, k)
    return float(k) + excess, var


def tail_excess_mean(dist: WeightDistribution, k: float) -> float:
    """b_k = E[X | X > k] - k, evaluated without cancellation far into the tail."""

    excess, _ = _tail_excess_and_variance(dist, k)
    return excess


@dataclass(frozen=True)
class TailPoint:
    """One level of the variance-floor check."""

    k: float
    mean: float
    variance: float
    excess_mean: float
    degenerate: bool
    ok: bool
    edge_level: bool = False


@dataclass(frozen=True)
class VarianceFloorCheck:
    """Uniform lower bound of Var(X | X > k) over a level grid.

    Attributes:
        floor: Smallest conditional variance over the non-degenerate levels (nan when none).
        satisfied: True when every level is non-degenerate with variance above the floor minimum.
        points: Per-level results, edge level included.
    """

    floor: float
    satisfied: bool
    points: List[TailPoint] = field(default_factory=list)


def check_variance_floor(
    dist: WeightDistribution,
    k_grid: Sequence[float] = DEFAULT_K_GRID,
    floor_min: float = VARIANCE_FLOOR_MIN,
) -> VarianceFloorCheck:
    """Check inf_k Var(X | X > k) > 0 on a finite grid.

    Bounded laws get an extra level just below the upper support edge, where the
    conditional variance collapses.
    """

    levels = [(float(k), False) for k in k_grid]
    upper = dist.upper_support
    if math.isfinite(upper) and upper > 0:
        levels.append((upper * (1.0 - EDGE_LEVEL_OFFSET), True))

    points: List[TailPoint] = []
    for k, edge_level in levels:
        try:
            excess, var = _tail_excess_and_variance(dist, k)
        except DegenerateTailError:
            points.append(TailPoint(k, math.nan, math.nan, math.nan, degenerate=True, ok=False, edge_level=edge_level))
            continue
        points.append(
            TailPoint(k, k + excess, var, excess, degenerate=False, ok=var > floor_min, edge_level=edge_level)
        )

    variances = [p.variance for p in points if not p.degenerate]
    floor = min(variances) if variances else math.nan
    satisfied = bool(points) and all(p.ok for p in points)
    LOGGER.debug(
        "VARIANCE_FLOOR dist=%s floor=%s satisfied=%s",
        dist.spec,
        floor,
        satisfied,
        extra={"dist": dist.spec},
    )
    return VarianceFloorCheck(floor=floor, satisfied=satisfied, points=points)


# -----------------------------
# Moment condition for the squared-weight passage time
# -----------------------------


@dataclass(frozen=True)
class MomentCheck:
    """Result of the integrability test of (1 - F(sqrt x))^(1/d)."""

    value: float
    satisfied: bool
    cutoff: float
    dimension: int


def check_moment_condition(dist: WeightDistribution, d: int) -> MomentCheck:
    """Evaluate int_0^inf (1 - F(sqrt x))^(1/d) dx.

    With x = u^2 the integrand becomes 2 u S(u)^(1/d). The cutoff doubles until a
    chunk [L, 2L] contributes less than the truncation tolerance twice in a row.
    A run of growing chunk contributions, or exhausting the doubling budget,
    signals divergence.
    """

    d = int(d)
    if d < 2:
        raise ValueError(f"Dimension must be >= 2, got {d}")

    def integrand(u: float) -> float:
        return 2.0 * u * math.exp(float(dist.log_survival(np.float64(u))) / d)

    upper = dist.upper_support
    if math.isfinite(upper):
        return MomentCheck(value=_quad(integrand, 0.0, upper), satisfied=True, cutoff=upper, dimension=d)

    cutoff = max(1.0, 4.0 * dist.mean())
    total = _quad(integrand, 0.0, cutoff)
    previous = math.inf
    quiet = 0
    growing = 0
    for _ in range(MAX_DOUBLINGS):
        inc = _quad(integrand, cutoff, 2.0 * cutoff)
        total += inc
        cutoff *= 2.0
        quiet = quiet + 1 if inc < MOMENT_TOLERANCE / 10 else 0
        growing = growing + 1 if inc >= previous else 0
        previous = inc
        if quiet >= 2:
            return MomentCheck(value=total, satisfied=True, cutoff=cutoff, dimension=d)
        if growing >= GROWTH_RUN_LIMIT:
            break

    LOGGER.warning(
        "MOMENT_CONDITION_DIVERGES dist=%s d=%s cutoff=%.3g partial=%.6g",
        dist.spec,
        d,
        cutoff,
        total,
        extra={"dist": dist.spec, "dimension": d},
    )
    return MomentCheck(value=math.inf, satisfied=False, cutoff=cutoff, dimension=d)
