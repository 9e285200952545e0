"""Tests for instance generation and the experiment drivers."""

import numpy as np
import pytest

from semrelay.core.exceptions import ConfigurationError
from semrelay.core.models import (
    BaselineMode,
    Budgets,
    MixMode,
    RunConfig,
    SatelliteLink,
    ScenarioSpec,
    SolverConfig,
    SweepConfig,
    TrajectoryConfig,
    UserKind,
)
from semrelay.scenarios.experiments import (
    SweepRow,
    compare_scenarios,
    placement_study,
    sweep,
    sweep_instance,
    trajectory_sweep,
)
from semrelay.scenarios.generator import (
    cluster_centres,
    cluster_mix,
    generate,
    satellite_positions,
    trajectory_gains,
    trajectory_instances,
)


def _config(**sections):
    sections.setdefault("solver", SolverConfig(multi_start=False))
    sections.setdefault("modes", [BaselineMode.JOINT])
    return RunConfig(**sections)


@pytest.mark.unit
class TestClusterMix:
    def test_hybrid_pairs_clusters(self):
        spec = ScenarioSpec(clusters=4, sem_per_cluster=4, con_per_cluster=4)
        assert cluster_mix(spec) == [(2, 6), (6, 2), (2, 6), (6, 2)]

    def test_hybrid_odd_cluster_keeps_base_split(self):
        spec = ScenarioSpec(clusters=3, sem_per_cluster=4, con_per_cluster=4)
        assert cluster_mix(spec) == [(2, 6), (6, 2), (4, 4)]

    def test_single_kind_mixes(self):
        spec = ScenarioSpec(clusters=2, mix=MixMode.SEM_ONLY)
        assert cluster_mix(spec) == [(8, 0), (8, 0)]
        spec = ScenarioSpec(clusters=2, mix=MixMode.CON_ONLY)
        assert cluster_mix(spec) == [(0, 8), (0, 8)]

    def test_sem_con_clusters(self):
        spec = ScenarioSpec(clusters=3, mix=MixMode.SEM_CON_CLUSTERS)
        assert cluster_mix(spec) == [(8, 0), (8, 0), (0, 8)]

    def test_spec_needs_users(self):
        with pytest.raises(ValueError):
            ScenarioSpec(sem_per_cluster=0, con_per_cluster=0)


@pytest.mark.unit
class TestGenerate:
    def test_grid_centres(self):
        centres = cluster_centres(4, 2000.0)
        assert centres.tolist() == [[-1000.0, -1000.0], [1000.0, -1000.0],
                                    [-1000.0, 1000.0], [1000.0, 1000.0]]
        assert cluster_centres(1, 2000.0).tolist() == [[0.0, 0.0]]

    def test_users_inside_square(self):
        spec = ScenarioSpec(clusters=4, seed=3)
        instance = generate(spec)
        centres = cluster_centres(4, spec.cluster_spacing_m)
        assert instance.n_users == 32
        for n, cluster in enumerate(instance.clusters):
            for user in cluster.users:
                assert abs(user.x - centres[n, 0]) <= 500.0
                assert abs(user.y - centres[n, 1]) <= 500.0

    def test_seeded(self):
        spec = ScenarioSpec(clusters=2, seed=11)
        assert generate(spec) == generate(spec)
        other = generate(spec.model_copy(update={"seed": 12}))
        assert other.clusters[0].users != generate(spec).clusters[0].users

    def test_regular_layout(self):
        spec = ScenarioSpec(clusters=1, sem_per_cluster=1, con_per_cluster=1, layout="regular")
        users = generate(spec).clusters[0].users
        assert [(u.kind, u.x, u.y) for u in users] == [
            (UserKind.SEM, -250.0, -250.0),
            (UserKind.CON, 250.0, -250.0),
        ]

    def test_physics_and_budgets_applied(self):
        spec = ScenarioSpec(clusters=1)
        instance = generate(spec, budgets=Budgets(b_r_hz=5e6))
        assert instance.budgets.b_r_hz == 5e6
        assert instance.phys.beta0 == pytest.approx(1e-6)
        assert instance.clusters[0].sat_link.gain == pytest.approx(1e-16)
        assert instance.clusters[0].uav_height_m == 1000.0


@pytest.mark.unit
class TestTrajectory:
    def test_positions_centred_on_middle_longitude(self):
        lons, xs = satellite_positions(TrajectoryConfig())
        assert lons[0] == 0.0 and lons[-1] == 14.0
        assert xs[7] == pytest.approx(0.0, abs=1e-9)
        assert xs[-1] == pytest.approx(7 * 111e3)

    def test_gains_follow_distance(self):
        gains = trajectory_gains(TrajectoryConfig(), 1e-16, 0.0)
        assert gains == pytest.approx([0.9e-16, 1e-16, 0.9e-16])

    def test_instances_per_step(self):
        config = _config(trajectory=TrajectoryConfig(steps=3))
        family = trajectory_instances(config)
        assert [lon for lon, _ in family] == [0.0, 7.0, 14.0]
        assert all(instance.n_clusters == 3 for _, instance in family)
        reference = SatelliteLink.from_coefficient_db(-80.0).gain
        middle = family[1][1]
        assert middle.clusters[1].sat_link.gain == pytest.approx(reference)


@pytest.mark.unit
class TestSweepInstances:
    def test_budget_axis(self):
        instance = sweep_instance(_config(), "p_r_w", 20.0)
        assert instance.budgets.p_r_w == 20.0

    def test_users_per_cluster_axis(self):
        instance = sweep_instance(_config(), "users_per_cluster", 2)
        assert all(len(c.users) == 2 for c in instance.clusters)

    def test_cluster_axis_keeps_population(self):
        config = _config(scenario=ScenarioSpec(clusters=4, sem_per_cluster=2, con_per_cluster=2))
        instance = sweep_instance(config, "clusters", 2)
        assert instance.n_clusters == 2 and instance.n_users == 16

    def test_cluster_axis_needs_even_split(self):
        config = _config(scenario=ScenarioSpec(clusters=4, sem_per_cluster=2, con_per_cluster=2))
        with pytest.raises(ConfigurationError):
            sweep_instance(config, "clusters", 3)

    def test_unknown_axis(self):
        with pytest.raises(ConfigurationError):
            sweep_instance(_config(), "altitude", 1.0)

    def test_values_must_ascend(self):
        with pytest.raises(ConfigurationError):
            sweep(_config(), "b_r_hz", [5e6, 2e6])
        with pytest.raises(ValueError):
            SweepConfig(values=[5e6, 2e6])


@pytest.mark.slow
class TestExperiments:
    def test_sweep_rows(self):
        config = _config(scenario=ScenarioSpec(clusters=1, sem_per_cluster=1, con_per_cluster=1))
        rows = sweep(config, "b_r_hz", [5e6, 10e6], modes=[BaselineMode.JOINT, BaselineMode.FIXED_LOCATION])
        assert [(r.axis, r.mode) for r in rows] == [
            (5e6, "joint"), (5e6, "fixed-l"), (10e6, "joint"), (10e6, "fixed-l"),
        ]
        assert all(isinstance(r, SweepRow) and r.sum_rate_bps > 0 for r in rows)
        assert set(rows[0].to_dict()) == {"axis", "mode", "sum_rate_bps", "iters",
                                          "max_residual", "wall_ms", "status"}

    def test_saturation_in_uav_bandwidth(self):
        scenario = ScenarioSpec(clusters=2, sem_per_cluster=2, con_per_cluster=2, seed=0)
        config = _config(scenario=scenario, budgets=Budgets(b_s_hz=4e6))
        rate = {r.axis: r.sum_rate_bps for r in sweep(config, "b_r_hz", [2e6, 5e6, 20e6, 30e6])}
        assert rate[5e6] > rate[2e6]
        assert rate[30e6] - rate[20e6] < 0.25 * (rate[5e6] - rate[2e6])
        wider = config.model_copy(update={"budgets": Budgets(b_s_hz=8e6)})
        assert sweep(wider, "b_r_hz", [30e6])[0].sum_rate_bps > rate[30e6]

    def test_semantic_users_raise_sum_rate(self):
        # 1 MHz and 1 W per UAV leave the downlinks as the bottleneck
        scenario = ScenarioSpec(clusters=2, sem_per_cluster=2, con_per_cluster=2, seed=0)
        config = _config(scenario=scenario, budgets=Budgets(b_r_hz=1e6, p_r_w=1.0))
        rate = {r.axis: r.sum_rate_bps for r in compare_scenarios(config)}
        assert set(rate) == {m.value for m in MixMode}
        assert rate["sem_only"] >= 1.5 * rate["con_only"]
        assert rate["sem_only"] >= rate["sem_con_clusters"] * (1 - 1e-6)
        assert rate["sem_con_clusters"] >= rate["hybrid"] * (1 - 1e-6)
        assert rate["hybrid"] >= rate["con_only"] * (1 - 1e-6)

    def test_more_clusters_serve_more(self):
        scenario = ScenarioSpec(clusters=4, sem_per_cluster=2, con_per_cluster=2, seed=0)
        rate = {r.axis: r.sum_rate_bps for r in sweep(_config(scenario=scenario), "clusters", [1, 2, 4])}
        assert rate[4] > rate[1]
        assert rate[4] >= rate[2] * (1 - 1e-6)
        assert rate[2] >= rate[1] * (1 - 1e-6)

    @pytest.mark.parametrize("axis,values", [
        ("b_r_hz", [2e6, 5e6, 10e6, 20e6, 30e6]),
        ("p_r_w", [1.0, 5.0, 10.0, 20.0, 50.0]),
    ])
    def test_joint_dominates_baselines(self, axis, values):
        scenario = ScenarioSpec(clusters=5, sem_per_cluster=4, con_per_cluster=4, seed=0)
        config = _config(scenario=scenario, solver=SolverConfig())
        rows = sweep(config, axis, values, modes=list(BaselineMode))
        for value in values:
            rate = {r.mode: r.sum_rate_bps for r in rows if r.axis == value}
            assert set(rate) == {m.value for m in BaselineMode}
            for mode, bps in rate.items():
                assert rate["joint"] - bps >= -1e-6 * bps, (value, mode)

    def test_trajectory_peaks_overhead(self):
        scenario = ScenarioSpec(sem_per_cluster=1, con_per_cluster=1, layout="regular")
        config = _config(scenario=scenario, trajectory=TrajectoryConfig(steps=5))
        rows = trajectory_sweep(config)
        series = np.array([r.sum_rate_bps for r in rows])
        assert [r.axis for r in rows] == [0.0, 3.5, 7.0, 10.5, 14.0]
        assert int(np.argmax(series)) == 2
        assert series[0] < series[1] < series[2] > series[3] > series[4]
        for i in range(2):
            assert abs(series[i] - series[4 - i]) <= 0.01 * series[i]

    def test_placement_rows(self):
        config = _config(scenario=ScenarioSpec(clusters=1, sem_per_cluster=1, con_per_cluster=1))
        rows = placement_study(config)
        assert [r["layout"] for r in rows] == ["regular", "random"]
        for row in rows:
            assert row["displacement_m"] >= 0
            assert row["sum_rate_bps"] > 0
