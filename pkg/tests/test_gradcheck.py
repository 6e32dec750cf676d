import math

import pytest

from src import observability
from src.errors import GradcheckFailed
from src.gradcheck import CHECKS, DENOM_FLOOR, GradcheckResult, relative_error, require_pass, run_suite


def test_every_check_has_a_threshold():
    assert set(CHECKS) >= {"trilinear", "filter2d", "filter3d", "filter_group", "conv2d", "loss", "network"}
    assert CHECKS["network"][1] == 1e-3
    assert all(t == 1e-4 for name, (_, t) in CHECKS.items() if name != "network")


def test_relative_error_uses_a_floor():
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(0.0, 1e-6) == pytest.approx(1e-6 / DENOM_FLOOR)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)


def test_suite_subset_passes_and_records_metrics():
    results = run_suite(seed=0, instances=2, ops_=["conv2d", "srgb"])
    assert [r.op for r in results] == ["conv2d", "srgb"]
    assert all(r.passed for r in results)
    require_pass(results)
    assert observability.REGISTRY.get_sample_value("gradcheck_worst_relative_error", {"op": "conv2d"}) == results[0].worst


def test_failures_raise():
    bad = [GradcheckResult("conv2d", 1e-2, 1e-4, 1), GradcheckResult("loss", math.nan, 1e-4, 1)]
    assert not any(r.passed for r in bad)
    with pytest.raises(GradcheckFailed) as excinfo:
        require_pass(bad)
    assert excinfo.value.exit_code == 5
