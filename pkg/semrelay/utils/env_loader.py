"""
Environment configuration loader.

This module loads environment variables from .env files and exposes typed
accessors for the SEMRELAY_* settings.
"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv


def load_environment_variables(env_file: Optional[str] = None) -> bool:
    """
    Load environment variables from a .env file if available.

    Variables already present in the environment are left untouched.

    Args:
        env_file: Path to .env file (defaults to .env in current directory)

    Returns:
        True if a file was found and loaded
    """
    env_path = Path(env_file or ".env")
    if not env_path.exists():
        return False
    return load_dotenv(env_path, override=False)


def get_env_var(key: str, default: Optional[str] = None) -> Optional[str]:
    """
    Get environment variable with optional default.

    Args:
        key: Environment variable name
        default: Default value if not found

    Returns:
        Environment variable value or default
    """
    return os.environ.get(key, default)


def get_default_seed() -> Optional[int]:
    """Seed override from SEMRELAY_SEED, if set to an integer."""
    raw = get_env_var("SEMRELAY_SEED")
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        return None
