"""
report_types.py

DESCRIPTION
Result records returned by the estimators. Every record converts to a plain
dict (``to_dict``) so the experiment runners can write it to JSON/YAML as is.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional


def _clean(value: Any) -> Any:
    """Map non-finite floats to strings so JSON output stays standard."""

    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


class _Record:
    def to_dict(self) -> Dict[str, Any]:
        return _clean(asdict(self))


@dataclass(frozen=True)
class EstimatorReport(_Record):
    """Point estimate with its standard error and provenance.

    Attributes:
        quantity: Tag such as ``Q_t``, ``corr``, ``l2``, ``overlap``, ``var_T``.
        estimate: Point estimate.
        stderr: Standard error, sample standard deviation over sqrt(replicates).
        replicates: Number of couplings (> 1).
        t: Dynamical time, None for time-free quantities.
        n: Side length.
        d: Dimension.
        dist: Distribution spec string.
        seed: Master seed.
    """

    quantity: str
    estimate: float
    stderr: float
    replicates: int
    t: Optional[float]
    n: int
    d: int
    dist: str
    seed: int

    def __post_init__(self) -> None:
        if self.replicates < 2:
            raise ValueError(f"An estimator report needs at least 2 replicates, got {self.replicates}")


@dataclass(frozen=True)
class InfluenceEstimate(_Record):
    """Estimate of Inf_v(t) for one vertex, or of the sum over all vertices (vertex None)."""

    vertex: Optional[int]
    t: float
    estimate: float
    stderr: float
    vertex_sample: int
    replicates: int
    n: int
    d: int
    dist: str
    seed: int


@dataclass(frozen=True)
class Verdict(_Record):
    """Pass/fail of one checked inequality or identity.

    ``status`` is ``passed``, ``failed`` or ``skipped``.
    """

    name: str
    status: str
    lhs: float = math.nan
    rhs: float = math.nan
    tolerance: float = math.nan
    details: Dict[str, Any] = field(default_factory=dict)
    reason: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status == "passed"

    @classmethod
    def check(cls, name: str, ok: bool, lhs: float, rhs: float, tolerance: float, **details: Any) -> "Verdict":
        return cls(name, "passed" if ok else "failed", float(lhs), float(rhs), float(tolerance), dict(details))

    @classmethod
    def skipped(cls, name: str, reason: str) -> "Verdict":
        return cls(name, "skipped", reason=reason)


@dataclass(frozen=True)
class MonotonicityCheck(_Record):
    """Non-increase of a sequence of estimates within ``k`` combined standard errors."""

    passed: bool
    k: float
    max_excess: float
    violations: List[int] = field(default_factory=list)


@dataclass(frozen=True)
class CovarianceFormulaCheck(_Record):
    """Quadrature of the summed influence over [0, 1] against the sample variance."""

    times: List[float]
    influence: List[float]
    influence_se: List[float]
    quadrature: float
    quadrature_se: float
    sample_variance: float
    sample_variance_se: float
    combined_se: float
    bracket_bound: float
    passed: bool
    upper_bound: Verdict


@dataclass(frozen=True)
class FiniteDifferenceCheck(_Record):
    """-(Q_{t+h} - Q_{t-h}) / 2h from paired replicates against the summed influence at t."""

    t: float
    h: float
    derivative: float
    derivative_se: float
    influence: float
    influence_se: float
    combined_se: float
    passed: bool


@dataclass(frozen=True)
class VertexBound(_Record):
    """Per-vertex estimates of the influence bounds at time t."""

    vertex: int
    coords: List[int]
    influence_0: float
    influence_0_se: float
    weight_sq_on_geodesic: float
    upper_se: float
    influence_t: float
    influence_t_se: float
    both_geodesics: float
    lower_se: float
    upper_ok: bool
    lower_ok: bool


@dataclass(frozen=True)
class LemmaBoundsReport(_Record):
    t: float
    floor: float
    vertices: List[VertexBound]
    passed: bool


@dataclass(frozen=True)
class StabilityReport(_Record):
    """L2 distance of T_0 and T_t against its linear majorant, plus the covariance rearrangement."""

    t: float
    l2: float
    l2_se: float
    bound: float
    bound_se: float
    weight_sq_on_geodesic: float
    squared_weight_passage: float
    majorant_se: float
    covariance: float
    rearranged: float
    rearranged_se: float
    bound_verdict: Verdict
    majorant_verdict: Verdict
    rearrangement_verdict: Verdict

    @property
    def passed(self) -> bool:
        verdicts = (self.bound_verdict, self.majorant_verdict, self.rearrangement_verdict)
        return all(v.status != "failed" for v in verdicts)
