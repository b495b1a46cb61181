import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


@dataclass
class Config:
    """Configuration settings for the WR(lambda) toolkit"""

    # IRLS settings
    MAX_ITER: int = int(os.getenv("WRATIO_MAX_ITER", "100"))
    TOL: float = float(os.getenv("WRATIO_TOL", "1e-8"))
    SCORE_TOL: float = 1e-7  # Max-abs score required on top of the deviance test
    MAX_HALVINGS: int = 20  # Step halvings before a fit is declared stuck
    SEPARATION_BOUND: float = 30.0  # |beta| above this raises a separation warning
    MEAN_CLAMP: float = 1e-12  # Fitted means live in [eps, 1 - eps]

    # Study harness defaults
    LAMBDA_GRID: tuple[float, ...] = tuple(round(0.1 * k, 1) for k in range(11))
    CURVE_STEP: float = 0.01  # Prevalence step for curve generation
    SWEEP_GRID_STEP: float = 0.01
    SWEEP_LAMBDA_STEPS: int = 100
    SIM_WORKERS: int = int(os.getenv("WRATIO_WORKERS", "1"))

    # Output settings
    CSV_FLOAT_FORMAT: str = "%.17g"  # 17 significant digits keeps output byte-checkable
    LOG_LEVEL: str = os.getenv("WRATIO_LOG_LEVEL", "WARNING")


config = Config()


def configure_logging(level: str | int | None = None) -> None:
    """Send log records to standard error, one line per record."""
    logging.basicConfig(
        level=level if level is not None else config.LOG_LEVEL,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
