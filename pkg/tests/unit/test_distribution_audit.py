from __future__ import annotations

import pytest

from lpp.distributions import parse_distribution
from runs.distribution_audit import AUDIT_COLUMNS, audit_distribution, run_distribution_audit, tail_excess_slope
from runs.run_config import AuditConfig

K_GRID = [0.0, 1.0, 5.0]


@pytest.mark.unit
def test_exponential_audit_rows() -> None:
    rows, summary = audit_distribution(parse_distribution("exp:1.0"), K_GRID, 2)
    assert [r["k"] for r in rows] == K_GRID
    for r in rows:
        assert r["tail_excess"] == pytest.approx(1.0)
        assert r["cond_var"] == pytest.approx(1.0)
        assert r["floor_ok"] and not r["degenerate"]
    assert summary["floor_satisfied"]
    assert summary["moment_satisfied"]
    assert summary["tail_excess_slope"]["slope"] == pytest.approx(0.0, abs=1e-6)


@pytest.mark.unit
def test_bounded_law_gets_an_edge_level() -> None:
    rows, summary = audit_distribution(parse_distribution("unif01"), K_GRID, 2)
    assert any(r["edge_level"] for r in rows)
    assert not summary["floor_satisfied"]
    assert summary["tail_excess_slope"]["status"] == "skipped"


@pytest.mark.unit
def test_pareto_excess_grows_linearly() -> None:
    slope = tail_excess_slope(parse_distribution("pareto:3.0"))
    assert slope["status"] == "computed"
    assert slope["slope"] == pytest.approx(1.0, abs=1e-3)


@pytest.mark.unit
def test_audit_frame() -> None:
    config = AuditConfig([parse_distribution("exp:1.0"), parse_distribution("geom:0.5")], K_GRID, 3)
    frame, summary = run_distribution_audit(config)
    assert list(frame.columns) == AUDIT_COLUMNS
    assert len(frame) == 2 * len(K_GRID)
    assert (frame["d"] == 3).all()
    assert [s["dist"] for s in summary["distributions"]] == ["exp:1.0", "geom:0.5"]
