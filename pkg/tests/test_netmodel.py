"""Tests for link primitives, the sum rate and constraint residuals."""

import numpy as np
import pytest
from pydantic import ValidationError

from semrelay.core.exceptions import ConfigurationError, DomainError
from semrelay.core.models import Budgets, NetworkInstance, PhysConstants, SatelliteLink, UserKind
from semrelay.core.netmodel import (
    Allocation,
    air_channel_gain,
    bit_rate,
    build_arrays,
    compute_load,
    compute_reserve,
    constraint_residuals,
    snr_linear,
    snr_s2r_db,
    sum_rate,
    transmit_budget,
)

from .conftest import make_cluster

PHYS = PhysConstants()


def _allocation(arrays, b_s=2e6, p_s=500.0, b_u=None, p_u=None):
    k = arrays.n_users
    return Allocation(
        b_s2r=np.full(arrays.n_clusters, b_s),
        p_s2r=np.full(arrays.n_clusters, p_s),
        b_user=np.asarray(b_u if b_u is not None else np.full(k, 1e6), dtype=float),
        p_user=np.asarray(p_u if p_u is not None else np.full(k, 1.0), dtype=float),
        uav_xy=arrays.centroid.copy(),
    )


@pytest.mark.unit
class TestLinkPrimitives:
    def test_gain_directly_overhead(self):
        assert air_channel_gain([0.0, 0.0, 1000.0], [0.0, 0.0], PHYS) == pytest.approx(1e-12)

    def test_gain_rejects_coincident_points(self):
        with pytest.raises(DomainError):
            air_channel_gain([0.0, 0.0, 0.0], [0.0, 0.0], PHYS)

    def test_gain_rejects_non_finite(self):
        with pytest.raises(DomainError):
            air_channel_gain([np.nan, 0.0, 1000.0], [0.0, 0.0], PHYS)

    def test_snr(self):
        assert snr_linear(1.0, 1e-12, 1e6, PHYS) == pytest.approx(100.0)
        assert snr_s2r_db(1.0, 1e-12, 1e6, PHYS) == pytest.approx(20.0)

    def test_zero_power_gives_minus_infinity_db(self):
        assert snr_s2r_db(0.0, 1e-16, 1e6, PHYS) == -np.inf

    def test_zero_bandwidth_rejected(self):
        with pytest.raises(DomainError):
            snr_linear(1.0, 1e-12, 0.0, PHYS)

    def test_bit_rate(self):
        assert bit_rate(1e6, 1.0) == pytest.approx(1e6)
        assert bit_rate(0.0, 5.0) == 0.0

    def test_compute_load_in_gcycles(self):
        # (2 * 1e9 + 4 * 1e9) / 2 cycles per second
        assert compute_load(1e9, 1e9, PHYS) == pytest.approx(3.0)

    def test_satellite_coefficient_in_db(self):
        assert SatelliteLink.from_coefficient_db(-80.0).gain == pytest.approx(1e-16)


@pytest.mark.unit
class TestNetworkArrays:
    def test_flattening(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        assert arrays.n_clusters == 1 and arrays.n_users == 2
        assert arrays.is_sem.tolist() == [True, False]
        assert arrays.weight.tolist() == [3.0, 1.0]
        assert arrays.compute_per_bit == pytest.approx([1e-9, 2e-9])
        assert arrays.centroid[0] == pytest.approx([25.0, -25.0])

    def test_symmetric_centroid(self, symmetric_instance):
        assert build_arrays(symmetric_instance).centroid[0] == pytest.approx([0.0, 0.0])


@pytest.mark.unit
class TestSumRate:
    def test_idle_allocation_is_zero(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        assert sum_rate(tiny_instance, Allocation.zeros(arrays), arrays) == 0.0

    def test_semantic_weight_applies(self, symmetric_instance):
        arrays = build_arrays(symmetric_instance)
        alloc = _allocation(arrays)
        con_rate = sum_rate(symmetric_instance, alloc, arrays)
        sem_cluster = make_cluster(0, [(UserKind.SEM, -500.0, 0.0), (UserKind.SEM, 500.0, 0.0)])
        sem_instance = NetworkInstance(clusters=[sem_cluster])
        assert sum_rate(sem_instance, alloc) == pytest.approx(3.0 * con_rate)

    def test_invariant_under_user_relabelling(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        alloc = _allocation(arrays, b_u=[3e6, 5e6], p_u=[2.0, 7.0])
        users = list(reversed(tiny_instance.clusters[0].users))
        swapped = NetworkInstance(clusters=[tiny_instance.clusters[0].model_copy(update={"users": users})])
        swapped_alloc = _allocation(build_arrays(swapped), b_u=[5e6, 3e6], p_u=[7.0, 2.0])
        assert sum_rate(swapped, swapped_alloc) == pytest.approx(sum_rate(tiny_instance, alloc), rel=1e-12)


@pytest.mark.unit
class TestConstraintResiduals:
    def test_idle_allocation_is_feasible(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        res = constraint_residuals(tiny_instance, Allocation.zeros(arrays), arrays=arrays)
        assert res.satisfied(0.0, ("C1", "C2", "C3", "C4", "C5"))

    def test_budget_violation_reported(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        alloc = _allocation(arrays, b_s=2 * tiny_instance.budgets.b_s_hz)
        res = constraint_residuals(tiny_instance, alloc, arrays=arrays)
        assert "C2" in res.violated(1e-9)
        assert res.max_violation(("C2",)) == pytest.approx(1.0)

    def test_residuals_do_not_raise_on_infeasible_points(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        alloc = _allocation(arrays, b_u=[1e9, 1e9], p_u=[1e3, 1e3])
        res = constraint_residuals(tiny_instance, alloc, arrays=arrays)
        assert {"C1", "C3", "C5"} <= set(res.violated(1e-9))


@pytest.mark.unit
class TestComputeReserve:
    def test_reserve_is_small_at_defaults(self, tiny_instance):
        reserve = compute_reserve(tiny_instance)
        # nu_max = 2e-9 * 12 * 1e7 * 0.9365 Gcycles/s
        nu_max = 2e-9 * 12.0 * 1e7 * 0.9365
        assert reserve[0] == pytest.approx(1e-3 * nu_max ** 3)
        assert transmit_budget(tiny_instance)[0] == pytest.approx(10.0 - reserve[0])

    def test_budget_below_reserve_rejected(self, tiny_instance):
        starved = tiny_instance.with_budgets(p_r_w=1e-6)
        with pytest.raises(ConfigurationError) as exc:
            transmit_budget(starved)
        assert exc.value.config_key == "budgets.p_r_w"


@pytest.mark.unit
class TestModels:
    def test_negative_budget_rejected(self):
        with pytest.raises(ValidationError):
            Budgets(p_r_w=-1.0)

    def test_duplicate_cluster_indices_rejected(self):
        cluster = make_cluster(0, [(UserKind.CON, 0.0, 0.0)])
        with pytest.raises(ValidationError):
            NetworkInstance(clusters=[cluster, cluster])

    def test_non_finite_user_rejected(self):
        with pytest.raises(ValidationError):
            make_cluster(0, [(UserKind.CON, float("inf"), 0.0)])
