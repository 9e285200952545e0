"""
Domain and configuration models.

Network descriptions (physical constants, semantic coding parameters,
clusters, users, budgets) and the run configuration sections are pydantic
models. All quantities are SI; dB values appear only in fields whose name
ends in ``_db``.
"""

import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class UserKind(str, Enum):
    SEM = "sem"
    CON = "con"


class MixMode(str, Enum):
    HYBRID = "hybrid"
    SEM_ONLY = "sem_only"
    CON_ONLY = "con_only"
    SEM_CON_CLUSTERS = "sem_con_clusters"


class BaselineMode(str, Enum):
    JOINT = "joint"
    FIXED_BANDWIDTH = "fixed-b"
    FIXED_POWER = "fixed-p"
    FIXED_LOCATION = "fixed-l"


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


class PhysConstants(BaseModel):
    """Link-level physical constants."""

    model_config = ConfigDict(frozen=True)

    noise_psd_w_per_hz: float = Field(default=1e-20, gt=0)
    beta0: float = Field(default=1e-6, gt=0, description="Air-to-ground gain at 1 m, linear")
    alpha: float = Field(default=2.0, ge=1.0, description="Path-loss exponent")
    zeta0: float = Field(default=1e-3, gt=0, description="W per (Gcycles/s)^3")
    flops_per_cycle: float = Field(default=2.0, gt=0)
    g_sem: float = Field(default=2.0, gt=0, description="FLOPs per semantic bit")
    g_con: float = Field(default=4.0, gt=0, description="FLOPs per conventional bit")


class SemanticParams(BaseModel):
    """Semantic block coding and similarity-curve parameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mu1: float = Field(default=48.0, gt=0, description="Bits per data unit")
    mu2: float = Field(default=4.0, gt=0, description="Bits per semantic symbol")
    q_symbols: float = Field(default=4.0, gt=0, description="Symbols per semantic block")
    m_suts: float = Field(default=1.0, gt=0, description="Semantic units per data unit")
    a1: float = Field(default=0.3980, ge=0)
    a2: float = Field(default=0.5385, gt=0)
    c1: float = Field(default=0.2815, gt=0)
    c2: float = -1.3135

    @model_validator(mode="after")
    def _check_range(self) -> "SemanticParams":
        if self.a1 + self.a2 > 1.0:
            raise ValueError("a1 + a2 must not exceed 1")
        return self

    @property
    def sem_weight(self) -> float:
        """Bit-equivalent weight of a semantic downlink bit, mu1/(mu2 Q)."""
        return self.mu1 / (self.mu2 * self.q_symbols)


class SatelliteLink(BaseModel):
    """Equivalent scalar satellite-to-UAV channel, stored as power gain |h|^2."""

    model_config = ConfigDict(frozen=True)

    gain: float = Field(gt=0)

    @classmethod
    def from_geometry(cls, beam_gain: float, wavelength_m: float,
                      distance_m: float) -> "SatelliteLink":
        """MRT-beamformed free-space gain: beam_gain * (wavelength / (4 pi d))^2."""
        if beam_gain <= 0 or wavelength_m <= 0 or distance_m <= 0:
            raise ValueError("beam gain, wavelength and distance must be positive")
        return cls(gain=beam_gain * (wavelength_m / (4.0 * math.pi * distance_m)) ** 2)

    @classmethod
    def from_coefficient_db(cls, coefficient_db: float) -> "SatelliteLink":
        """Gain from the channel-coefficient magnitude |h| given in dB."""
        magnitude = db_to_linear(coefficient_db)
        return cls(gain=magnitude * magnitude)


class GroundUser(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: UserKind
    x: float
    y: float

    @field_validator("x", "y")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("user coordinates must be finite")
        return v


class Cluster(BaseModel):
    """A UAV relay and the ground users it serves."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    uav_height_m: float = Field(default=1000.0, gt=0)
    users: List[GroundUser] = Field(default_factory=list)
    sat_link: SatelliteLink

    @property
    def n_sem(self) -> int:
        return sum(1 for u in self.users if u.kind == UserKind.SEM)

    @property
    def n_con(self) -> int:
        return sum(1 for u in self.users if u.kind == UserKind.CON)

    @property
    def centroid(self) -> tuple:
        if not self.users:
            return (0.0, 0.0)
        return (
            sum(u.x for u in self.users) / len(self.users),
            sum(u.y for u in self.users) / len(self.users),
        )


class Budgets(BaseModel):
    """Satellite totals and per-UAV totals."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    b_s_hz: float = Field(default=10e6, gt=0)
    p_s_w: float = Field(default=1000.0, gt=0)
    b_r_hz: float = Field(default=10e6, gt=0)
    p_r_w: float = Field(default=10.0, gt=0)


class NetworkInstance(BaseModel):
    """Immutable description of one satellite, its UAV clusters and the budgets."""

    model_config = ConfigDict(frozen=True)

    clusters: List[Cluster]
    budgets: Budgets = Field(default_factory=Budgets)
    phys: PhysConstants = Field(default_factory=PhysConstants)
    sem: SemanticParams = Field(default_factory=SemanticParams)

    @model_validator(mode="after")
    def _unique_indices(self) -> "NetworkInstance":
        indices = [c.index for c in self.clusters]
        if len(indices) != len(set(indices)):
            raise ValueError("cluster indices must be unique")
        return self

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def n_users(self) -> int:
        return sum(len(c.users) for c in self.clusters)

    def with_budgets(self, **changes: float) -> "NetworkInstance":
        return self.model_copy(update={"budgets": self.budgets.model_copy(update=changes)})


# ---------------------------------------------------------------------------
# Run configuration sections
# ---------------------------------------------------------------------------


class PhysicsConfig(BaseModel):
    """Physics section of a run configuration, gains in dB."""

    model_config = ConfigDict(extra="forbid")

    noise_psd_w_per_hz: float = Field(default=1e-20, gt=0)
    beta0_db: float = -60.0
    alpha: float = Field(default=2.0, ge=1.0)
    zeta0: float = Field(default=1e-3, gt=0)
    flops_per_cycle: float = Field(default=2.0, gt=0)
    g_sem: float = Field(default=2.0, gt=0)
    g_con: float = Field(default=4.0, gt=0)
    uav_height_m: float = Field(default=1000.0, gt=0)
    sat_coefficient_db: float = -80.0

    def to_constants(self) -> PhysConstants:
        return PhysConstants(
            noise_psd_w_per_hz=self.noise_psd_w_per_hz,
            beta0=db_to_linear(self.beta0_db),
            alpha=self.alpha,
            zeta0=self.zeta0,
            flops_per_cycle=self.flops_per_cycle,
            g_sem=self.g_sem,
            g_con=self.g_con,
        )


class SolverConfig(BaseModel):
    """Tolerances and iteration limits of the alternating optimizer."""

    model_config = ConfigDict(extra="forbid")

    outer_max_iters: int = Field(default=200, ge=1)
    outer_rel_tol: float = Field(default=1e-6, gt=0)
    dual_max_iters: int = Field(default=200, ge=1)
    dual_base_step: Optional[float] = Field(default=None, gt=0,
                                            description="None scales the step from the initial residual")
    bisection_tol: float = Field(default=1e-10, gt=0)
    floor_hz: float = Field(default=1e-3, gt=0)
    floor_w: float = Field(default=1e-9, gt=0)
    kkt_tol: float = Field(default=1e-4, gt=0)
    inner_rounds: int = Field(default=3, ge=1)
    location_iters: int = Field(default=20, ge=0)
    multi_start: bool = True
    seed: int = 0


class ScenarioSpec(BaseModel):
    """Instance generator settings."""

    model_config = ConfigDict(extra="forbid")

    clusters: int = Field(default=4, ge=1)
    sem_per_cluster: int = Field(default=4, ge=0)
    con_per_cluster: int = Field(default=4, ge=0)
    mix: MixMode = MixMode.HYBRID
    seed: int = 0
    square_side_m: float = Field(default=1000.0, gt=0)
    cluster_spacing_m: float = Field(default=2000.0, gt=0)
    layout: str = Field(default="random", pattern="^(random|regular)$")

    @model_validator(mode="after")
    def _has_users(self) -> "ScenarioSpec":
        if self.mix in (MixMode.HYBRID, MixMode.SEM_CON_CLUSTERS):
            if self.sem_per_cluster + self.con_per_cluster == 0:
                raise ValueError("at least one user per cluster is required")
        return self

    @property
    def users_per_cluster(self) -> int:
        return self.sem_per_cluster + self.con_per_cluster


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axis: str = Field(default="b_r_hz",
                      pattern="^(b_r_hz|p_r_w|b_s_hz|p_s_w|users_per_cluster|clusters)$")
    values: List[float] = Field(default_factory=lambda: [2e6, 5e6, 10e6, 20e6, 30e6])

    @field_validator("values")
    @classmethod
    def _ascending(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("sweep values must not be empty")
        if any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("sweep values must be sorted ascending")
        return v


class TrajectoryConfig(BaseModel):
    """Satellite ground-track sweep over longitude."""

    model_config = ConfigDict(extra="forbid")

    lon_start_deg: float = 0.0
    lon_end_deg: float = 14.0
    steps: int = Field(default=15, ge=2)
    altitude_m: float = Field(default=60e3, gt=0)
    metres_per_degree: float = Field(default=111e3, gt=0)
    cluster_offsets_m: List[float] = Field(default_factory=lambda: [-20e3, 0.0, 20e3])

    @field_validator("cluster_offsets_m")
    @classmethod
    def _nonempty(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one cluster offset is required")
        return v


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "results"
    format: str = Field(default="csv", pattern="^(csv|json)$")
    timings: bool = Field(default=False, description="Write measured wall_ms; zeros keep series byte-stable")


class RunConfig(BaseModel):
    """Top-level run configuration."""

    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioSpec = Field(default_factory=ScenarioSpec)
    budgets: Budgets = Field(default_factory=Budgets)
    physics: PhysicsConfig = Field(default_factory=PhysicsConfig)
    semantic: SemanticParams = Field(default_factory=SemanticParams)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    trajectory: TrajectoryConfig = Field(default_factory=TrajectoryConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    modes: List[BaselineMode] = Field(default_factory=lambda: [BaselineMode.JOINT])

    @field_validator("modes")
    @classmethod
    def _nonempty_modes(cls, v: List[BaselineMode]) -> List[BaselineMode]:
        if not v:
            raise ValueError("mode list must not be empty")
        return v
