from enum import Enum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Aranda-Ordaz transformation parameter, closed interval [0, 1]
TransformParam = Annotated[float, Field(ge=0.0, le=1.0)]

# Outcome probability, open interval (0, 1)
Probability = Annotated[float, Field(gt=0.0, lt=1.0)]

MAX_SEED = 2**64 - 1


class LemmaBranch(str, Enum):
    """Side of RR on which WR(lambda) falls"""

    OVER = "Over"  # WR(lambda) > RR
    UNDER = "Under"  # WR(lambda) < RR
    EQUAL = "Equal"  # p0 == p1


class RiskPair(BaseModel):
    """Outcome risks without (p0) and with (p1) exposure"""

    model_config = ConfigDict(frozen=True)

    p0: float  # Risk if unexposed
    p1: float  # Risk if exposed

    @field_validator("p0", "p1")
    @classmethod
    def _inside_unit_interval(cls, value: float, info) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"{info.field_name} must lie strictly inside (0,1)")
        return value

    def swapped(self) -> "RiskPair":
        """The same pair with exposure labels exchanged"""
        return RiskPair(p0=self.p1, p1=self.p0)


class MeasureReport(BaseModel):
    """RR, OR, CLR and the WR(lambda)/B(lambda) curves for one RiskPair"""

    p0: float
    p1: float
    rr: float
    or_: float
    clr: float
    wr: dict[float, float]  # lambda -> WR(lambda)
    b: dict[float, float]  # lambda -> B(lambda), always >= 1


class CurveSpec(BaseModel):
    """Fixed true risk ratio swept over baseline prevalence p0.

    Grid points with rr * p0 >= 1 are dropped at construction and counted in
    ``excluded``.
    """

    rr: float = Field(gt=0.0)
    prevalence_grid: list[Probability]
    lambdas: list[TransformParam] = Field(min_length=1)
    excluded: int = 0

    @model_validator(mode="before")
    @classmethod
    def _drop_inadmissible(cls, data):
        if isinstance(data, dict) and "rr" in data and "prevalence_grid" in data:
            rr = float(data["rr"])
            grid = [float(p) for p in data["prevalence_grid"]]
            kept = [p for p in grid if rr * p < 1.0]
            data = {**data, "prevalence_grid": kept, "excluded": len(grid) - len(kept)}
        return data

    @field_validator("prevalence_grid")
    @classmethod
    def _sorted(cls, grid: list[float]) -> list[float]:
        return sorted(grid)


class SimSpec(BaseModel):
    """Two-arm Bernoulli Monte Carlo design"""

    n_per_group: int = Field(ge=10)
    p0: Probability
    rr: float = Field(gt=0.0)
    lambdas: list[TransformParam] = Field(min_length=1)
    replications: int = Field(ge=1)
    seed: int = Field(ge=0, le=MAX_SEED)

    @model_validator(mode="after")
    def _exposed_risk_admissible(self) -> "SimSpec":
        if not self.rr * self.p0 < 1.0:
            raise ValueError("rr * p0 must be below 1")
        return self

    @property
    def p1(self) -> float:
        return self.rr * self.p0


class WorstCase(BaseModel):
    """Grid point with the largest B(1)"""

    p0: float
    p1: float
    lam: float
    value: float


class SweepReport(BaseModel):
    """Counts of sign-law, B-monotonicity and CLR-versus-OR violations on a grid"""

    grid_step: float
    lambda_steps: int
    pairs_checked: int = Field(gt=0)
    lemma1_violations: int = Field(ge=0)
    monotonicity_violations: int = Field(ge=0)
    corollary_violations: int = Field(ge=0)
    worst_case: WorstCase | None = None

    @property
    def passed(self) -> bool:
        return (
            self.lemma1_violations == 0
            and self.monotonicity_violations == 0
            and self.corollary_violations == 0
        )
