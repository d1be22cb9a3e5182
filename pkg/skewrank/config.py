"""Configuration management for skewrank."""

import logging
import os

from dotenv import load_dotenv

from .errors import ConfigurationError

# Load environment variables
load_dotenv()

def _env_flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).lower() == "true"

class Config:
    """Application configuration."""

    # Debug Configuration
    DEBUG: bool = _env_flag("SKEWRANK_DEBUG")

    # Solver defaults
    DEFAULT_RANK: int = 2
    DEFAULT_STEP_LENGTH: float = 1.0
    DEFAULT_TOLERANCE: float = 1e-4  # relative to ||b||_2
    DEFAULT_MAX_ITERATIONS: int = 500

    # Dense SVD is used up to this many items, svds above it
    DENSE_SVD_MAX_N: int = int(os.getenv("SKEWRANK_DENSE_SVD_MAX_N", "400"))

    # Numerical tolerances
    SKEW_TOLERANCE: float = 1e-10
    GAP_RTOL: float = 1e-6
    CENTER_TOLERANCE: float = 1e-10
    RECOVERY_THRESHOLD: float = 1e-3

    # File formats
    DELIMITER: str = os.getenv("SKEWRANK_DELIMITER", ",")

    # Experiment defaults
    DEFAULT_TRIALS: int = 50
    DEFAULT_BETA: float = 1.0
    DEFAULT_SEED: int = 0

    # Histogram bins for comparison support
    SUPPORT_BIN_EDGES: list[int] = [1, 2, 5, 10, 30, 100, 1000, 10000]

def setup_logging(verbose: bool = False) -> None:
    """Set up logging configuration."""
    level = logging.DEBUG if (Config.DEBUG or verbose) else logging.INFO

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(),
        ],
    )


def validate_config() -> None:
    """Validate numeric configuration values."""
    if Config.DENSE_SVD_MAX_N < 1:
        raise ConfigurationError(
            f"SKEWRANK_DENSE_SVD_MAX_N must be positive, got {Config.DENSE_SVD_MAX_N}"
        )
    if Config.DEFAULT_RANK < 2 or Config.DEFAULT_RANK % 2:
        raise ConfigurationError(
            f"Default rank must be even and >= 2, got {Config.DEFAULT_RANK}"
        )
    if Config.DEFAULT_STEP_LENGTH <= 0 or Config.DEFAULT_TOLERANCE <= 0:
        raise ConfigurationError("Step length and tolerance must be positive")
    if not Config.DELIMITER:
        raise ConfigurationError("SKEWRANK_DELIMITER must not be empty")

logger = logging.getLogger(__name__)

# Validate configuration on import
try:
    validate_config()
except ConfigurationError as e:
    logger.error(f"Configuration error: {e}")
    # Don't raise here so the CLI can report it with an exit code
