"""
Core network model of the satellite-UAV-ground relay system.

This module contains:
- Pydantic models for users, clusters, budgets and run configuration
- The semantic similarity curve and semantic/bit-rate conversions
- Vectorised link budgets, sum rate and constraint residuals
- Custom exceptions for error handling
"""

from .exceptions import (
    ConfigurationError,
    DomainError,
    OracleRefusalError,
    SemRelayError,
    SolverError,
)
from .models import (
    BaselineMode,
    Budgets,
    Cluster,
    GroundUser,
    MixMode,
    NetworkInstance,
    PhysConstants,
    RunConfig,
    SatelliteLink,
    SemanticParams,
    SolverConfig,
    UserKind,
)
from .netmodel import Allocation, ConstraintResiduals, NetworkArrays, build_arrays, constraint_residuals, sum_rate

__all__ = [
    # Models
    "BaselineMode",
    "Budgets",
    "Cluster",
    "GroundUser",
    "MixMode",
    "NetworkInstance",
    "PhysConstants",
    "RunConfig",
    "SatelliteLink",
    "SemanticParams",
    "SolverConfig",
    "UserKind",
    # Network model
    "Allocation",
    "ConstraintResiduals",
    "NetworkArrays",
    "build_arrays",
    "constraint_residuals",
    "sum_rate",
    # Exceptions
    "ConfigurationError",
    "DomainError",
    "OracleRefusalError",
    "SemRelayError",
    "SolverError",
]
