"""Shared pytest fixtures for the WR(lambda) toolkit tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure backend modules can be imported
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import Config
from glm_irls import Dataset

LAMBDAS = [0.0, 0.25, 0.5, 0.75, 1.0]


# ---------------------------------------------------------------------------
# Dataset helpers
# ---------------------------------------------------------------------------


def two_group(n0: int, k0: int, n1: int, k1: int) -> Dataset:
    """k0 events among n0 unexposed rows, then k1 events among n1 exposed rows."""
    outcome = np.concatenate(
        [
            np.repeat([1.0, 0.0], [k0, n0 - k0]),
            np.repeat([1.0, 0.0], [k1, n1 - k1]),
        ]
    )
    exposure = np.repeat([0.0, 1.0], [n0, n1])
    return Dataset(outcome=outcome, exposure=exposure)


def two_group_csv_text(n0: int, k0: int, n1: int, k1: int) -> str:
    lines = ["y,a"]
    lines += ["1,0"] * k0 + ["0,0"] * (n0 - k0)
    lines += ["1,1"] * k1 + ["0,1"] * (n1 - k1)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def two_group_dataset():
    """160 unexposed rows with 40 events, 160 exposed rows with 80 (p0=0.25, p1=0.5)."""
    return two_group(160, 40, 160, 80)


@pytest.fixture
def two_group_csv(tmp_path):
    """The two-group dataset as a CSV file with columns y (outcome) and a (exposure)."""
    path = tmp_path / "two_group.csv"
    path.write_text(two_group_csv_text(160, 40, 160, 80), encoding="utf-8")
    return path


@pytest.fixture
def covariate_dataset():
    """n=200 rows, binary exposure and two continuous covariates, logistic truth."""
    rng = np.random.default_rng(20240601)
    n = 200
    exposure = (rng.random(n) < 0.5).astype(float)
    x = rng.normal(size=(n, 2))
    eta = -0.5 + 0.7 * exposure + 0.8 * x[:, 0] - 0.4 * x[:, 1]
    outcome = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    return Dataset(
        outcome=outcome,
        exposure=exposure,
        covariates=x,
        covariate_names=["x1", "x2"],
    )


@pytest.fixture
def test_config():
    """Fresh Config so tests can mutate settings freely."""
    return Config()
