"""End-to-end runs of the reduced acceptance checks."""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

pytestmark = pytest.mark.slow


def _run(name):
    from core.config import AppSettings
    from core.events import EventBus, EventType
    from core.harness.checks import get_check

    bus = EventBus()
    result = get_check(name).run(AppSettings(), full=False, bus=bus)
    assert result.error is None, result
    assert bus.count(EventType.CHECK_COMPLETED) == 1
    return result


def test_dead_reckoning_drifts_and_fusion_bounds_it():
    from core.harness.checks.dead_reckoning import BOUNDED_RMSE_CM, DRIFT_LIMIT_M

    result = _run("dead_reckoning")
    assert result.data["drift_max_m"] > DRIFT_LIMIT_M
    assert result.data["worst_rmse_cm"] < BOUNDED_RMSE_CM
    assert result.passed, result


def test_convergence_reports_both_filters():
    result = _run("convergence")
    assert "ekf" in result.output and "srukf" in result.output
    assert "settle" in result.output


def test_runtime_ratio_is_measured():
    """The square-root filter costs more per cycle than the EKF."""
    result = _run("runtime")
    assert np.isfinite(result.data["ratio"])
    assert result.data["ratio"] > 1.0


def test_variant_ordering_covers_every_variant():
    from core.harness.checks.ordering import VARIANTS

    result = _run("ordering")
    assert set(result.data["rmse"]) == set(VARIANTS)
    assert all(np.isfinite(v) and v > 0.0 for v in result.data["rmse"].values())
