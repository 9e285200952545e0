"""
Configuration management utilities.

This module provides functions for loading, validating, and accessing
run configurations stored as JSON files, plus environment overrides.
"""

import json
from pathlib import Path
from typing import Any, Dict, Union

from ..core.exceptions import ConfigurationError


def load_config(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load configuration from a JSON file.

    Args:
        config_path: Path to the configuration file

    Returns:
        Dictionary containing configuration data

    Raises:
        ConfigurationError: If file cannot be loaded or parsed
    """
    config_path = Path(config_path)

    if not config_path.exists():
        raise ConfigurationError(
            f"Configuration file not found: {config_path}",
            config_file=str(config_path)
        )

    if config_path.suffix.lower() != ".json":
        raise ConfigurationError(
            f"Unsupported configuration file format: {config_path.suffix}",
            config_file=str(config_path)
        )

    try:
        with open(config_path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"Invalid JSON in configuration file (line {e.lineno}, column {e.colno}): {e.msg}",
            config_file=str(config_path)
        )
    except OSError as e:
        raise ConfigurationError(
            f"Error loading configuration file: {e}",
            config_file=str(config_path)
        )

    if not isinstance(data, dict):
        raise ConfigurationError(
            "Configuration root must be a JSON object",
            config_file=str(config_path)
        )
    return data


def get_config_value(config: Dict[str, Any], key_path: str,
                     default: Any = None) -> Any:
    """
    Get a configuration value using dot notation.

    Args:
        config: Configuration dictionary
        key_path: Dot-separated path to the value (e.g., "budgets.b_r_hz")
        default: Default value if key is not found

    Returns:
        Configuration value or default

    Example:
        >>> config = {"budgets": {"b_r_hz": 1e7}}
        >>> get_config_value(config, "budgets.b_r_hz")
        10000000.0
        >>> get_config_value(config, "budgets.p_r_w", 10.0)
        10.0
    """
    value: Any = config

    try:
        for key in key_path.split("."):
            value = value[key]
        return value
    except (KeyError, TypeError):
        return default


def merge_configs(*configs: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge multiple configuration dictionaries.

    Later configurations override earlier ones. Nested sections are merged
    recursively rather than replaced.

    Args:
        *configs: Configuration dictionaries to merge

    Returns:
        Merged configuration dictionary
    """
    merged: Dict[str, Any] = {}

    for config in configs:
        if not config:
            continue
        for key, value in config.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = merge_configs(merged[key], value)
            else:
                merged[key] = value

    return merged
