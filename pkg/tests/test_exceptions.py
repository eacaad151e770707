"""Tests for the exception hierarchy and error codes."""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


def test_exception_hierarchy():
    """All custom exceptions should inherit from FusionError."""
    from core.exceptions import (
        AlignmentError,
        ChainModelError,
        ConfigError,
        DowndateError,
        FilterDivergenceError,
        FilterError,
        FusionError,
        IngestError,
        MeasurementError,
        NotStationaryError,
        StreamParseError,
        UnknownJointError,
    )

    for cls in (ConfigError, ChainModelError, MeasurementError, FilterError, IngestError):
        assert issubclass(cls, FusionError)
    assert issubclass(UnknownJointError, MeasurementError)
    assert issubclass(NotStationaryError, MeasurementError)
    assert issubclass(DowndateError, FilterError)
    assert issubclass(FilterDivergenceError, FilterError)
    assert issubclass(StreamParseError, IngestError)
    assert issubclass(AlignmentError, IngestError)


def test_exception_message():
    """Exceptions should carry messages and codes."""
    from core.exceptions import FilterDivergenceError, StreamParseError

    try:
        raise StreamParseError("imu.csv", 12, "expected 8 fields, got 7")
    except StreamParseError as e:
        assert e.line == 12
        assert e.code == "PARSE_ERROR"
        assert "imu.csv:12" in str(e)

    err = FilterDivergenceError(3.25, "position SD above 100 m")
    assert err.t == 3.25
    assert err.code == "DIVERGENCE"
    assert "3.250" in err.message


def test_unknown_joint_message():
    """Joint errors name the offending pair."""
    from core.exceptions import UnknownJointError

    assert "(0, 2)" in str(UnknownJointError((0, 2)))
