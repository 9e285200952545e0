"""
Custom exceptions for the semantic relay optimizer.

This module defines specific exception classes for the kinds of failure that
can occur while building network instances, evaluating link models, solving
the allocation problem, or running the brute-force oracle.
"""

from typing import Any, Dict, Optional


class SemRelayError(Exception):
    """Base exception class for all semrelay errors."""

    def __init__(self, message: str, error_code: Optional[str] = None,
                 details: Optional[Dict[str, Any]] = None):
        """
        Initialize semrelay error.

        Args:
            message: Human-readable error message
            error_code: Machine-readable error code for categorization
            details: Additional error details for debugging
        """
        super().__init__(message)
        self.message = message
        self.error_code = error_code or "SEMRELAY_ERROR"
        self.details = details or {}

    def __str__(self) -> str:
        if self.error_code:
            return f"[{self.error_code}] {self.message}"
        return self.message


class ConfigurationError(SemRelayError):
    """Raised when configuration is missing, invalid, or inconsistent."""

    def __init__(self, message: str, config_key: Optional[str] = None,
                 config_file: Optional[str] = None):
        """
        Initialize configuration error.

        Args:
            message: Error description
            config_key: Dotted path of the problematic configuration field
            config_file: Path to the configuration file
        """
        details = {}
        if config_key:
            details["config_key"] = config_key
        if config_file:
            details["config_file"] = config_file

        super().__init__(
            message=message,
            error_code="CONFIGURATION_ERROR",
            details=details
        )
        self.config_key = config_key
        self.config_file = config_file


class DomainError(SemRelayError):
    """Raised when a model function is evaluated outside its domain."""

    def __init__(self, message: str, quantity: Optional[str] = None,
                 value: Any = None):
        """
        Initialize domain error.

        Args:
            message: Error description
            quantity: Name of the offending argument or bound
            value: The offending value
        """
        details = {}
        if quantity:
            details["quantity"] = quantity
        if value is not None:
            details["value"] = repr(value)

        super().__init__(
            message=message,
            error_code="DOMAIN_ERROR",
            details=details
        )
        self.quantity = quantity
        self.value = value


class OracleRefusalError(SemRelayError):
    """Raised when an instance is too large for exhaustive search."""

    def __init__(self, message: str, clusters: Optional[int] = None,
                 users: Optional[int] = None):
        details = {}
        if clusters is not None:
            details["clusters"] = clusters
        if users is not None:
            details["users"] = users

        super().__init__(
            message=message,
            error_code="ORACLE_REFUSAL",
            details=details
        )
        self.clusters = clusters
        self.users = users


class SolverError(SemRelayError):
    """Raised when a block solve fails numerically."""

    def __init__(self, message: str, subproblem: Optional[str] = None,
                 cluster: Optional[int] = None):
        details: Dict[str, Any] = {}
        if subproblem:
            details["subproblem"] = subproblem
        if cluster is not None:
            details["cluster"] = cluster

        super().__init__(
            message=message,
            error_code="SOLVER_ERROR",
            details=details
        )
        self.subproblem = subproblem
        self.cluster = cluster


# Exception hierarchy for easy catching
CORE_EXCEPTIONS = (
    SemRelayError,
    ConfigurationError,
    DomainError,
    SolverError,
)

ORACLE_EXCEPTIONS = (
    OracleRefusalError,
)

ALL_EXCEPTIONS = CORE_EXCEPTIONS + ORACLE_EXCEPTIONS
