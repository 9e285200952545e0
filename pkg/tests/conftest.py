"""
Test configuration and fixtures.

This module provides pytest configuration and shared fixtures for testing
the semantic relay optimizer.
"""

import json
import os
from pathlib import Path

import pytest

# Set test environment variables
os.environ["SEMRELAY_LOG_LEVEL"] = "DEBUG"

from semrelay.core.models import (  # noqa: E402
    Budgets,
    Cluster,
    GroundUser,
    NetworkInstance,
    SatelliteLink,
    ScenarioSpec,
    SolverConfig,
    UserKind,
)
from semrelay.scenarios.generator import generate  # noqa: E402

# Satellite coefficient of -80 dB on |h|
SAT_GAIN = 1e-16


def make_cluster(index, users, x0=0.0, y0=0.0, gain=SAT_GAIN):
    return Cluster(
        index=index,
        users=[GroundUser(kind=kind, x=x0 + x, y=y0 + y) for kind, x, y in users],
        sat_link=SatelliteLink(gain=gain),
    )


@pytest.fixture
def tiny_instance():
    """One cluster with one semantic and one conventional user."""
    cluster = make_cluster(0, [(UserKind.SEM, -250.0, 100.0), (UserKind.CON, 300.0, -150.0)])
    return NetworkInstance(clusters=[cluster])


@pytest.fixture
def symmetric_instance():
    """Two conventional users mirrored about the origin."""
    cluster = make_cluster(0, [(UserKind.CON, -500.0, 0.0), (UserKind.CON, 500.0, 0.0)])
    return NetworkInstance(clusters=[cluster])


@pytest.fixture
def instance_factory():
    """Seeded generated instance with optional budget overrides."""
    def factory(clusters=2, sem=2, con=2, seed=0, mix="hybrid", layout="random", **budgets):
        spec = ScenarioSpec(clusters=clusters, sem_per_cluster=sem, con_per_cluster=con,
                            seed=seed, mix=mix, layout=layout)
        return generate(spec, budgets=Budgets(**budgets))
    return factory


@pytest.fixture
def solver_config():
    return SolverConfig()


@pytest.fixture
def fast_config():
    """Single-start solver for tests that only need the joint loop."""
    return SolverConfig(multi_start=False)


@pytest.fixture
def sample_config():
    """Provide a tiny run configuration for testing."""
    return {
        "scenario": {
            "clusters": 1,
            "sem_per_cluster": 1,
            "con_per_cluster": 1,
            "layout": "regular",
            "seed": 0,
        },
        "budgets": {"b_s_hz": 1e7, "p_s_w": 1000.0, "b_r_hz": 1e7, "p_r_w": 10.0},
        "physics": {"beta0_db": -60.0, "sat_coefficient_db": -80.0},
        "modes": ["joint"],
    }


@pytest.fixture
def temp_config_file(tmp_path, sample_config):
    """Write a configuration dictionary to a temporary JSON file."""
    def write(overrides=None, name="run.json"):
        data = json.loads(json.dumps(sample_config))
        for section, values in (overrides or {}).items():
            if isinstance(values, dict) and isinstance(data.get(section), dict):
                data[section].update(values)
            else:
                data[section] = values
        path = tmp_path / name
        with open(path, "w") as f:
            json.dump(data, f)
        return str(path)
    return write


# Example configurations shipped with the project
CONFIG_DIR = Path(__file__).parent.parent / "config"
