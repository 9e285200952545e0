"""Configuration, logging and environment helpers."""

from .config import get_config_value, load_config, merge_configs
from .logging import StructuredLogger, get_logger, setup_logging

__all__ = [
    "get_config_value",
    "load_config",
    "merge_configs",
    "StructuredLogger",
    "get_logger",
    "setup_logging",
]
