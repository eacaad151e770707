"""App config. Reads a flat key-value (.env style) file and provides typed settings.

Every section has its own prefix so a single file can drive a whole run:

    NOISE_SIGMA_SLAM=0.05
    SCENARIO_KIND=jump
    RUN_FILTER=srukf
    CHAIN_JOINTS=[[0, 1], [1, 2]]
"""

from __future__ import annotations

import math
from enum import Enum
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values
from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.exceptions import ConfigError

# Project Paths
BASE_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = BASE_DIR / "data"
LOGS_DIR = BASE_DIR / "logs"
OUTPUT_DIR = BASE_DIR / "output"

# Default MEMS sensor characteristics, converted to SI per-second units.
# Random walks are quoted per sqrt(hour): sqrt(hr) = 60 sqrt(s).
STANDARD_GRAVITY = 9.80665
ACCEL_RANDOM_WALK = 60e-6 * STANDARD_GRAVITY / 60.0          # m/s^2/sqrt(Hz)
GYRO_RANDOM_WALK = math.radians(0.01) / 60.0                 # rad/s/sqrt(Hz)
ACCEL_BIAS_INSTABILITY = 15e-6 * STANDARD_GRAVITY            # m/s^2
GYRO_BIAS_INSTABILITY = math.radians(10.0) / 3600.0          # rad/s

_PREFIXES = (
    "NOISE_", "STATIONARY_", "SRUKF_", "CHAIN_", "SCENARIO_", "RUN_", "BATCH_", "APP_",
)


class FilterKind(str, Enum):
    """Supported estimators."""
    EKF = "ekf"
    SRUKF = "srukf"


class PositionSource(str, Enum):
    """Absolute position stream feeding the camera channel."""
    SLAM = "slam"
    MOCAP = "mocap"
    NONE = "none"


class InitPolicy(str, Enum):
    """How the first estimate is formed."""
    LEVELED = "leveled"
    TRUTH = "truth"


class GravityMode(str, Enum):
    """When stationary gravity referencing may fire."""
    THROUGHOUT = "throughout"
    STARTUP = "startup"


class ScenarioKind(str, Enum):
    GAIT = "gait"
    JUMP = "jump"


class PathShape(str, Enum):
    O_SHAPE = "o_shape"
    STRAIGHT = "straight"


class NoiseConfig(BaseSettings):
    """Sensor densities, process PSDs, measurement and initial SDs."""
    model_config = SettingsConfigDict(env_prefix="NOISE_", extra="ignore")

    # white-noise densities (per sqrt(Hz)); per-sample SD = density * sqrt(rate)
    sigma_a: float = Field(ACCEL_RANDOM_WALK, ge=0.0)
    sigma_g: float = Field(GYRO_RANDOM_WALK, ge=0.0)

    # bias random walks: PSD defaults to 2 sigma^2 / tau from the bias instability
    accel_bias_instability: float = Field(ACCEL_BIAS_INSTABILITY, ge=0.0)
    gyro_bias_instability: float = Field(GYRO_BIAS_INSTABILITY, ge=0.0)
    bias_correlation_time: float = Field(100.0, gt=0.0)
    q_ba: Optional[float] = Field(None, ge=0.0)
    q_bg: Optional[float] = Field(None, ge=0.0)
    q_l: float = Field(0.0, ge=0.0)
    process_noise_scale: float = Field(1.0, gt=0.0)

    # measurement SDs
    sigma_joint_pos: float = Field(0.01, gt=0.0)
    sigma_joint_vel: float = Field(0.01, gt=0.0)
    sigma_slam: float = Field(0.05, gt=0.0)
    sigma_mocap: float = Field(0.002, gt=0.0)
    sigma_gravity: Optional[float] = Field(None, gt=0.0)
    gravity_sd_floor: float = Field(0.02, ge=0.0)

    # initial estimation-error SDs
    init_sd_position: float = Field(0.10, gt=0.0)
    init_sd_velocity: float = Field(0.01, gt=0.0)
    init_sd_attitude_deg: float = Field(1.0, gt=0.0)
    init_sd_gyro_bias_deg_s: float = Field(0.1, gt=0.0)
    init_sd_accel_bias: float = Field(0.1, gt=0.0)
    init_sd_segment: float = Field(0.10, gt=0.0)

    @property
    def accel_bias_psd(self) -> float:
        if self.q_ba is not None:
            return self.q_ba
        return 2.0 * self.accel_bias_instability ** 2 / self.bias_correlation_time

    @property
    def gyro_bias_psd(self) -> float:
        if self.q_bg is not None:
            return self.q_bg
        return 2.0 * self.gyro_bias_instability ** 2 / self.bias_correlation_time

    def gravity_sd(self, imu_rate: float) -> float:
        """Gravity-referencing SD: per-sample accelerometer SD unless set explicitly."""
        if self.sigma_gravity is not None:
            return self.sigma_gravity
        return max(self.sigma_a * math.sqrt(imu_rate), self.gravity_sd_floor)

    @classmethod
    def noiseless(cls) -> "NoiseConfig":
        """All process noise off; handy for consistency-limit runs and tests."""
        return cls(sigma_a=0.0, sigma_g=0.0, q_ba=0.0, q_bg=0.0, q_l=0.0)


class StationaryConfig(BaseSettings):
    """Stationarity detector thresholds and gravity referencing mode."""
    model_config = SettingsConfigDict(env_prefix="STATIONARY_", extra="ignore")

    window_s: float = Field(0.5, ge=0.25)
    theta_gyro: float = Field(0.02, gt=0.0)
    theta_accel: float = Field(0.08, gt=0.0)
    mode: GravityMode = GravityMode.THROUGHOUT


class FilterTuning(BaseSettings):
    """Sigma-point spread and chart-mean iteration."""
    model_config = SettingsConfigDict(env_prefix="SRUKF_", extra="ignore")

    alpha: float = Field(1.0, gt=0.0)
    beta: float = Field(2.0, ge=0.0)
    kappa: float = 0.0
    mean_iterations: int = Field(5, ge=1)
    mean_tolerance: float = Field(1e-12, gt=0.0)


class ChainConfig(BaseSettings):
    """Link/joint topology; defaults to the scapula-upper arm-forearm chain."""
    model_config = SettingsConfigDict(env_prefix="CHAIN_", extra="ignore")

    links: list[str] = Field(default_factory=lambda: ["scapula", "upper_arm", "forearm"])
    joints: list[tuple[int, int]] = Field(default_factory=lambda: [(0, 1), (1, 2)])
    camera_link: int = 0
    gravity: tuple[float, float, float] = (0.0, 0.0, 9.81)


class ScenarioConfig(BaseSettings):
    """Synthetic arm scenario: motion envelope, sensor errors, stream timing."""
    model_config = SettingsConfigDict(env_prefix="SCENARIO_", extra="ignore")

    kind: ScenarioKind = ScenarioKind.GAIT
    path: PathShape = PathShape.STRAIGHT
    duration: float = Field(180.0, gt=0.0)
    imu_rate: float = Field(100.0, gt=0.0)
    slam_mean_rate: Optional[float] = Field(None, gt=0.0)
    slam_jitter: float = Field(0.3, ge=0.0, lt=1.0)
    slam_dropout: float = Field(0.05, ge=0.0, lt=1.0)
    slam_noise_sd: float = Field(0.05, ge=0.0)
    slam_drift_sd: float = Field(0.0, ge=0.0)
    mocap_noise_sd: float = Field(0.002, ge=0.0)
    seed: int = Field(0, ge=0)

    # motion envelope
    nominal_speed: float = Field(1.1, ge=0.0)
    arm_swing_scale: float = Field(1.0, ge=0.0)
    standstill: float = Field(3.0, ge=2.0)
    ramp_time: float = Field(3.0, gt=0.0)
    loop_radius: float = Field(8.0, gt=0.0)

    # sensor errors
    accel_noise_density: float = Field(ACCEL_RANDOM_WALK, ge=0.0)
    gyro_noise_density: float = Field(GYRO_RANDOM_WALK, ge=0.0)
    accel_bias_sd: float = Field(0.1, ge=0.0)
    gyro_bias_sd: float = Field(math.radians(0.1), ge=0.0)
    true_accel_biases: Optional[list[tuple[float, float, float]]] = None
    true_gyro_biases: Optional[list[tuple[float, float, float]]] = None
    bias_drift: bool = False
    accel_bias_instability: float = Field(ACCEL_BIAS_INSTABILITY, ge=0.0)
    gyro_bias_instability: float = Field(GYRO_BIAS_INSTABILITY, ge=0.0)
    bias_correlation_time: float = Field(100.0, gt=0.0)

    # geometry; keys are "i-j" joint-owner pairs, e.g. {"0-1": [0.0, 0.15, -0.05]}
    segments: Optional[dict[str, tuple[float, float, float]]] = None
    camera_lever_arm: tuple[float, float, float] = (0.08, 0.0, -0.05)
    joint_play_sd: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_envelope(self) -> "ScenarioConfig":
        if self.duration < 2.0 * self.standstill:
            raise ValueError("duration must cover both standstill periods")
        return self

    @property
    def slam_rate(self) -> float:
        return self.slam_mean_rate if self.slam_mean_rate is not None else self.imu_rate / 3.0

    @property
    def is_static(self) -> bool:
        return self.nominal_speed == 0.0 and self.arm_swing_scale == 0.0 and self.kind == ScenarioKind.GAIT

    def noiseless(self) -> "ScenarioConfig":
        """Copy with every random error source switched off."""
        return self.model_copy(update={
            "slam_jitter": 0.0, "slam_dropout": 0.0, "slam_noise_sd": 0.0, "slam_drift_sd": 0.0,
            "mocap_noise_sd": 0.0, "accel_noise_density": 0.0, "gyro_noise_density": 0.0,
            "accel_bias_sd": 0.0, "gyro_bias_sd": 0.0, "true_accel_biases": None,
            "true_gyro_biases": None, "bias_drift": False, "joint_play_sd": 0.0,
        })


class RunConfig(BaseSettings):
    """One filter replay: inputs, variant and outputs."""
    model_config = SettingsConfigDict(env_prefix="RUN_", extra="ignore")

    chain_file: Optional[str] = None
    imu_path: Optional[str] = None
    slam_path: Optional[str] = None
    mocap_path: Optional[str] = None
    truth_path: Optional[str] = None
    filter: FilterKind = FilterKind.EKF
    position_source: PositionSource = PositionSource.SLAM
    init_policy: InitPolicy = InitPolicy.LEVELED
    init_window_s: float = Field(1.0, gt=0.0)
    use_joints: bool = True
    use_gravity: bool = True
    joint_velocity_every: int = Field(1, ge=1)
    divergence_position_sd: float = Field(100.0, gt=0.0)
    output_dir: str = str(OUTPUT_DIR)

    @field_validator("filter", mode="before")
    @classmethod
    def _lower_filter(cls, value):
        return value.lower() if isinstance(value, str) else value

    @property
    def variant(self) -> str:
        """Name in the EKF-S / SRUKF-V style."""
        suffix = {PositionSource.SLAM: "S", PositionSource.MOCAP: "V", PositionSource.NONE: "DR"}
        return f"{self.filter.value.upper()}-{suffix[self.position_source]}"


class BatchConfig(BaseSettings):
    """Scenario matrix for the per-variant aggregate table."""
    model_config = SettingsConfigDict(env_prefix="BATCH_", extra="ignore")

    scenarios: int = Field(6, ge=1)
    base_seed: int = Field(0, ge=0)
    workers: int = Field(4, ge=1)
    duration: float = Field(180.0, gt=0.0)
    variants: list[str] = Field(default_factory=lambda: ["EKF-S", "SRUKF-S", "EKF-V", "SRUKF-V"])


class AppSettings(BaseSettings):
    """Main settings. Sections auto-load from the same key-value file."""

    model_config = SettingsConfigDict(
        env_prefix="APP_",
        env_file=str(BASE_DIR / ".env"),
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=False,
    )

    app_name: str = "limbfusion"
    app_version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"

    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    stationary: StationaryConfig = Field(default_factory=StationaryConfig)
    tuning: FilterTuning = Field(default_factory=FilterTuning)
    chain: ChainConfig = Field(default_factory=ChainConfig)
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    run: RunConfig = Field(default_factory=RunConfig)
    batch: BatchConfig = Field(default_factory=BatchConfig)


def load_settings(path: str | Path | None = None) -> AppSettings:
    """Build settings with every section reading the given key-value file."""
    if path is None:
        return AppSettings()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    values = dotenv_values(path)
    unknown = [k for k in values if not k.upper().startswith(_PREFIXES)]
    if unknown:
        raise ConfigError(f"unknown keys in {path.name}: {', '.join(sorted(unknown))}")

    env_file = str(path)
    try:
        return AppSettings(
            _env_file=env_file,
            noise=NoiseConfig(_env_file=env_file),
            stationary=StationaryConfig(_env_file=env_file),
            tuning=FilterTuning(_env_file=env_file),
            chain=ChainConfig(_env_file=env_file),
            scenario=ScenarioConfig(_env_file=env_file),
            run=RunConfig(_env_file=env_file),
            batch=BatchConfig(_env_file=env_file),
        )
    except ValidationError as e:
        raise ConfigError(str(e)) from e


# Singleton
_settings: Optional[AppSettings] = None


def get_settings() -> AppSettings:
    """Get or create the singleton settings instance."""
    global _settings
    if _settings is None:
        _settings = AppSettings()
    return _settings


def reload_settings(path: str | Path | None = None) -> AppSettings:
    """Force reload settings, optionally from a specific config file."""
    global _settings
    _settings = load_settings(path)
    return _settings
