"""Fusion-engine exceptions so callers (and the CLI) can catch them cleanly."""


class FusionError(Exception):
    """Base exception for all limbfusion errors."""
    def __init__(self, message: str = "", code: str = "UNKNOWN"):
        self.message = message
        self.code = code
        super().__init__(self.message)


# Configuration

class ConfigError(FusionError):
    """Config file or settings failed validation."""
    def __init__(self, reason: str):
        super().__init__(f"Invalid configuration: {reason}", "CONFIG_ERROR")


# Body model / layout

class ChainModelError(FusionError):
    """Chain topology is not a valid connected tree."""
    def __init__(self, reason: str):
        super().__init__(f"Invalid chain model: {reason}", "CHAIN_MODEL")

class DimensionMismatchError(FusionError):
    """Vector or matrix does not match the state layout."""
    def __init__(self, what: str, expected: int | tuple, got: int | tuple):
        super().__init__(f"{what}: expected {expected}, got {got}", "DIMENSION_MISMATCH")


# Propagation

class PropagationError(FusionError):
    """Strapdown step called with an invalid time step."""
    def __init__(self, dt: float, reason: str):
        super().__init__(f"Cannot propagate with dt={dt!r}: {reason}", "PROPAGATION")


# Measurements

class MeasurementError(FusionError):
    """Base measurement error."""
    pass

class UnknownJointError(MeasurementError):
    """Joint is not declared in the chain model."""
    def __init__(self, joint: tuple[int, int]):
        super().__init__(f"Joint {joint} is not part of the chain", "UNKNOWN_JOINT")

class NotStationaryError(MeasurementError):
    """Gravity referencing requested for a link that is moving."""
    def __init__(self, link_id: int):
        super().__init__(f"Link {link_id} is not stationary", "NOT_STATIONARY")

class WindowTooShortError(MeasurementError):
    """Stationarity window shorter than the detector minimum."""
    def __init__(self, length_s: float, minimum_s: float):
        super().__init__(
            f"Stationarity window {length_s:.3f} s is shorter than {minimum_s:.3f} s",
            "WINDOW_TOO_SHORT",
        )

class MissingRateError(MeasurementError):
    """Joint-velocity channel evaluated without body rates."""
    def __init__(self, link_id: int):
        super().__init__(f"No angular rate available for link {link_id}", "MISSING_RATE")

class UnknownChannelError(MeasurementError):
    """Object is not a registered measurement channel."""
    def __init__(self, channel: object):
        super().__init__(f"Unknown measurement channel: {channel!r}", "UNKNOWN_CHANNEL")


# Filters

class FilterError(FusionError):
    """Base filter error."""
    pass

class InnovationSingularError(FilterError):
    """Innovation covariance could not be factorized."""
    def __init__(self, channels: str):
        super().__init__(f"Innovation covariance not invertible for [{channels}]", "INNOVATION_SINGULAR")

class FactorCorruptedError(FilterError):
    """Square-root factor lost its positive diagonal."""
    def __init__(self, reason: str):
        super().__init__(f"Covariance factor corrupted: {reason}", "FACTOR_CORRUPTED")

class DowndateError(FilterError):
    """Rank-1 Cholesky downdate produced a nonpositive diagonal."""
    def __init__(self, column: int):
        super().__init__(f"Cholesky downdate failed at column {column}", "DOWNDATE_FAILED")

class FilterDivergenceError(FilterError):
    """Estimate became non-finite or its uncertainty exploded."""
    def __init__(self, t: float, reason: str):
        self.t = t
        super().__init__(f"Filter diverged at t={t:.3f} s: {reason}", "DIVERGENCE")


# Ingestion / evaluation

class IngestError(FusionError):
    """Base stream ingestion error."""
    pass

class StreamParseError(IngestError):
    """A record line could not be parsed."""
    def __init__(self, path: str, line: int, reason: str):
        self.line = line
        super().__init__(f"{path}:{line}: {reason}", "PARSE_ERROR")

class TimestampRegressionError(IngestError):
    """Timestamps within one stream went backwards."""
    def __init__(self, stream: str, t_prev: float, t: float):
        super().__init__(f"Timestamp regression in {stream}: {t} after {t_prev}", "TIMESTAMP_REGRESSION")

class UnknownLinkError(IngestError):
    """Record references a link the chain does not have."""
    def __init__(self, link_id: int):
        super().__init__(f"Link id {link_id} is not in the chain model", "UNKNOWN_LINK")

class EmptyStreamError(IngestError):
    """A required stream has no records."""
    def __init__(self, stream: str):
        super().__init__(f"Stream '{stream}' is empty", "EMPTY_STREAM")

class AlignmentError(IngestError):
    """Estimate and truth epochs could not be paired."""
    def __init__(self, reason: str):
        super().__init__(f"Cannot align traces: {reason}", "ALIGNMENT")
