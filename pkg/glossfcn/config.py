"""
Environment configuration for glossfcn.
Centralizes paths and run defaults that come from the environment.
"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from .errors import ConfigError

# Load environment variables from project root
PROJECT_ROOT = Path(__file__).parent.parent
load_dotenv(PROJECT_ROOT / ".env", override=False)

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


def env_int(name: str, default: int) -> Optional[int]:
    """Integer environment variable, or None when it is not a number"""
    try:
        return int(os.getenv(name, str(default)))
    except ValueError:
        return None


class GlossConfig:
    """Configuration class for data, run and logging locations"""

    # Storage
    DATA_DIR = os.getenv("GLOSSFCN_DATA_DIR", "data/synth")
    RUNS_DIR = os.getenv("GLOSSFCN_RUNS_DIR", "runs")

    # Logging
    LOG_LEVEL = os.getenv("GLOSSFCN_LOG_LEVEL", "INFO").upper()

    # Run defaults; a malformed seed is reported by validate()
    PRESET = os.getenv("GLOSSFCN_PRESET", "tiny")
    SEED = env_int("GLOSSFCN_SEED", 1)

    @classmethod
    def validate(cls):
        """Validate the environment-derived settings"""
        problems = []
        if cls.LOG_LEVEL not in LOG_LEVELS:
            problems.append("GLOSSFCN_LOG_LEVEL")
        if cls.PRESET not in {"tiny", "full"}:
            problems.append("GLOSSFCN_PRESET")
        if cls.SEED is None or cls.SEED < 0:
            problems.append("GLOSSFCN_SEED")

        if problems:
            raise ConfigError(f"Invalid environment settings: {problems}")

        return True
