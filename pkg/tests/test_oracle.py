"""Tests for the brute-force oracle."""

import numpy as np
import pytest

from semrelay.core.exceptions import OracleRefusalError
from semrelay.core.models import BaselineMode, NetworkInstance, UserKind
from semrelay.core.netmodel import Allocation, build_arrays, sum_rate
from semrelay.oracle.grid import GridSpec, check_size, feasible, grid_search
from semrelay.solver.ao import alternating_optimize

from .conftest import make_cluster


@pytest.mark.unit
class TestGuards:
    def test_refuses_three_clusters(self, instance_factory):
        instance = instance_factory(clusters=3, sem=1, con=0)
        with pytest.raises(OracleRefusalError) as exc:
            grid_search(instance)
        assert exc.value.clusters == 3

    def test_refuses_four_users(self, instance_factory):
        with pytest.raises(OracleRefusalError):
            check_size(instance_factory(clusters=1, sem=2, con=2))

    def test_grid_spec_validated(self):
        with pytest.raises(ValueError):
            GridSpec(resolution=2)


@pytest.mark.unit
class TestFeasibility:
    def test_idle_allocation_feasible_with_zero_objective(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        alloc = Allocation.zeros(arrays)
        ok, _ = feasible(tiny_instance, alloc)
        assert ok
        assert sum_rate(tiny_instance, alloc, arrays) == 0.0

    def test_over_budget_allocation_rejected(self, tiny_instance):
        arrays = build_arrays(tiny_instance)
        alloc = Allocation.zeros(arrays)
        alloc.p_s2r[:] = 2 * tiny_instance.budgets.p_s_w
        ok, res = feasible(tiny_instance, alloc)
        assert not ok
        assert res.violated(1e-12) == ["C4"]


@pytest.mark.slow
class TestGridSearch:
    def test_single_conventional_user_binds_rate_balance(self):
        instance = NetworkInstance(clusters=[make_cluster(0, [(UserKind.CON, 0.0, 0.0)])])
        result = grid_search(instance, GridSpec(refine_rounds=4))
        ok, res = feasible(instance, result.allocation, 1e-9)
        assert ok
        assert result.objective > 0
        assert abs(res.relative("C1")[0]) <= 1e-6

    def test_incumbent_is_feasible_and_refinement_monotone(self, tiny_instance):
        result = grid_search(tiny_instance)
        ok, _ = feasible(tiny_instance, result.allocation, 1e-9)
        assert ok
        assert all(b >= a for a, b in zip(result.history, result.history[1:]))
        assert result.objective == pytest.approx(result.grid_objective, rel=1e-6)
        allocation, objective = result
        assert objective == result.objective

    def test_symmetric_users_receive_equal_shares(self, symmetric_instance):
        result = grid_search(symmetric_instance, GridSpec(resolution=11, refine_rounds=2))
        alloc = result.allocation
        assert alloc.b_user[0] == pytest.approx(alloc.b_user[1], rel=0.1)
        assert alloc.p_user[0] == pytest.approx(alloc.p_user[1], rel=0.1)


@pytest.mark.slow
@pytest.mark.integration
class TestSolverAgreement:
    def test_joint_solver_matches_oracle_on_tiny_instance(self, tiny_instance, solver_config):
        report = alternating_optimize(tiny_instance, solver_config, BaselineMode.JOINT)
        oracle = grid_search(tiny_instance)
        assert feasible(tiny_instance, report.allocation, 1e-9)[0]
        assert feasible(tiny_instance, oracle.allocation, 1e-9)[0]
        assert oracle.objective <= report.objective * 1.02
        assert oracle.objective >= report.objective * 0.98
        assert np.isfinite(report.objective)

    def test_cluster_order_does_not_change_result(self):
        near = [(UserKind.SEM, 120.0, -60.0)]
        far = [(UserKind.CON, -200.0, 80.0)]
        grid = GridSpec(resolution=21, refine_rounds=2)
        forward = NetworkInstance(clusters=[
            make_cluster(0, near),
            make_cluster(1, far, x0=4000.0, gain=5e-17),
        ])
        backward = NetworkInstance(clusters=[
            make_cluster(0, far, x0=4000.0, gain=5e-17),
            make_cluster(1, near),
        ])
        first, second = grid_search(forward, grid), grid_search(backward, grid)
        assert first.grid_objective == pytest.approx(second.grid_objective, rel=1e-9)
        assert first.objective == pytest.approx(second.objective, rel=1e-6)
