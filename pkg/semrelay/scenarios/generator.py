"""
Instance generation for the relay experiments.

Builds seeded ``NetworkInstance`` objects from a ``ScenarioSpec``: cluster
centres on a square grid, users drawn uniformly in a square around each
centre (or placed on a regular sub-grid), semantic/conventional mixes, and
the satellite-trajectory family in which each cluster's satellite-hop gain
follows the satellite's distance.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.models import (
    Budgets,
    Cluster,
    GroundUser,
    MixMode,
    NetworkInstance,
    PhysicsConfig,
    RunConfig,
    SatelliteLink,
    ScenarioSpec,
    SemanticParams,
    TrajectoryConfig,
    UserKind,
)
from ..utils.logging import StructuredLogger

logger = StructuredLogger(__name__)


def cluster_mix(spec: ScenarioSpec) -> List[Tuple[int, int]]:
    """
    ``(n_sem, n_con)`` for every cluster.

    Hybrid pairs clusters so that half lean semantic and half lean
    conventional (4 + 4 per cluster becomes 2 + 6 and 6 + 2) while keeping
    the overall split; an odd last cluster keeps the base split.
    SemConClusters makes the first half of the clusters all-semantic and the
    rest all-conventional.
    """
    sem, con = spec.sem_per_cluster, spec.con_per_cluster
    total = spec.users_per_cluster
    n = spec.clusters
    if spec.mix == MixMode.SEM_ONLY:
        return [(total, 0)] * n
    if spec.mix == MixMode.CON_ONLY:
        return [(0, total)] * n
    if spec.mix == MixMode.SEM_CON_CLUSTERS:
        half = (n + 1) // 2
        return [(total, 0) if i < half else (0, total) for i in range(n)]
    shift = min(sem, con) // 2
    mix = []
    for i in range(n):
        if n % 2 == 1 and i == n - 1:
            mix.append((sem, con))
        elif i % 2 == 0:
            mix.append((sem - shift, con + shift))
        else:
            mix.append((sem + shift, con - shift))
    return mix


def cluster_centres(n_clusters: int, spacing_m: float) -> np.ndarray:
    """Cluster centres on a near-square grid, centred on the origin."""
    cols = int(math.ceil(math.sqrt(n_clusters)))
    rows = int(math.ceil(n_clusters / cols))
    idx = np.arange(n_clusters)
    centres = np.stack([idx % cols, idx // cols], axis=1).astype(float) * spacing_m
    centres -= np.array([(cols - 1) * spacing_m / 2.0, (rows - 1) * spacing_m / 2.0])
    return centres


def _offsets(rng: np.random.Generator, count: int, side: float, layout: str) -> np.ndarray:
    if count == 0:
        return np.zeros((0, 2))
    if layout == "regular":
        m = int(math.ceil(math.sqrt(count)))
        cells = np.arange(count)
        grid = np.stack([cells % m, cells // m], axis=1).astype(float)
        return ((grid + 0.5) / m - 0.5) * side
    return rng.uniform(-side / 2.0, side / 2.0, size=(count, 2))


def generate(spec: ScenarioSpec,
             budgets: Optional[Budgets] = None,
             physics: Optional[PhysicsConfig] = None,
             semantic: Optional[SemanticParams] = None,
             centres: Optional[Sequence[Sequence[float]]] = None,
             sat_gains: Optional[Sequence[float]] = None) -> NetworkInstance:
    """
    Deterministic instance for ``spec``.

    ``centres`` and ``sat_gains`` override the cluster grid and the common
    satellite-hop gain (used by the trajectory family).
    """
    physics = physics or PhysicsConfig()
    rng = np.random.default_rng(spec.seed)
    mix = cluster_mix(spec)
    centre_xy = np.asarray(centres, dtype=float) if centres is not None \
        else cluster_centres(spec.clusters, spec.cluster_spacing_m)
    default_link = SatelliteLink.from_coefficient_db(physics.sat_coefficient_db)

    clusters = []
    for n, (n_sem, n_con) in enumerate(mix):
        offsets = _offsets(rng, n_sem + n_con, spec.square_side_m, spec.layout)
        kinds = [UserKind.SEM] * n_sem + [UserKind.CON] * n_con
        users = [
            GroundUser(kind=kind, x=float(centre_xy[n, 0] + dx), y=float(centre_xy[n, 1] + dy))
            for kind, (dx, dy) in zip(kinds, offsets)
        ]
        link = SatelliteLink(gain=float(sat_gains[n])) if sat_gains is not None else default_link
        clusters.append(Cluster(index=n, uav_height_m=physics.uav_height_m, users=users, sat_link=link))

    instance = NetworkInstance(
        clusters=clusters,
        budgets=budgets or Budgets(),
        phys=physics.to_constants(),
        sem=semantic or SemanticParams(),
    )
    logger.debug("generated instance", clusters=instance.n_clusters, users=instance.n_users,
                 mix=spec.mix.value, seed=spec.seed)
    return instance


def instance_from_config(config: RunConfig, spec: Optional[ScenarioSpec] = None,
                         budgets: Optional[Budgets] = None) -> NetworkInstance:
    """Instance for a run configuration, optionally with a replaced scenario or budgets."""
    return generate(spec or config.scenario, budgets=budgets or config.budgets,
                    physics=config.physics, semantic=config.semantic)


def satellite_positions(traj: TrajectoryConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Longitudes and ground-track x-coordinates, x = 0 at the middle longitude."""
    lons = np.linspace(traj.lon_start_deg, traj.lon_end_deg, traj.steps)
    mid = 0.5 * (traj.lon_start_deg + traj.lon_end_deg)
    return lons, (lons - mid) * traj.metres_per_degree


def trajectory_gains(traj: TrajectoryConfig, reference_gain: float, sat_x: float) -> np.ndarray:
    """
    Satellite-hop gain of each cluster with the satellite above ``sat_x``.

    Flat-Earth chord distance at the orbit altitude; the reference gain
    applies directly overhead and falls off with the inverse square of the
    distance.
    """
    offsets = np.asarray(traj.cluster_offsets_m, dtype=float)
    dist = np.hypot(sat_x - offsets, traj.altitude_m)
    return reference_gain * (traj.altitude_m / dist) ** 2


def trajectory_instances(config: RunConfig) -> List[Tuple[float, NetworkInstance]]:
    """One instance per satellite position along the configured ground track."""
    traj = config.trajectory
    n = len(traj.cluster_offsets_m)
    spec = config.scenario.model_copy(update={"clusters": n})
    centres = [[x, 0.0] for x in traj.cluster_offsets_m]
    reference = SatelliteLink.from_coefficient_db(config.physics.sat_coefficient_db).gain
    lons, xs = satellite_positions(traj)
    return [
        (float(lon), generate(spec, config.budgets, config.physics, config.semantic,
                              centres=centres, sat_gains=trajectory_gains(traj, reference, x)))
        for lon, x in zip(lons, xs)
    ]
