"""
Sampler configuration and run report schemas.
"""

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SamplerKind(str, Enum):
    """Markov chain used to produce samples"""
    BW = "bw"
    HR = "hr"


class TerminationReason(str, Enum):
    """Why a billiard trajectory stopped"""
    LENGTH = "length"
    ESCAPED = "escaped"
    BO_BUDGET = "bo_budget"
    REFLECTION_CAP = "reflection_cap"
    NONSMOOTH = "nonsmooth"
    DRIFT = "drift"


class SamplerConfig(BaseModel):
    """Trajectory-length scale, reflection cap, restart policy and seed of one chain"""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(..., gt=0, description="Mean trajectory length")
    max_reflections: int = Field(..., ge=1, description="Reflection cap R")
    seed: int = Field(..., ge=0, lt=2 ** 64, description="64-bit RNG seed")
    length_redraw_after: int = Field(
        default=3, ge=0,
        description="Consecutive reflection-cap restarts before the length is redrawn; 0 keeps it",
    )


class Budget(BaseModel):
    """Stop rule for a chain: a sample count or a Boundary Oracle call count"""

    model_config = ConfigDict(frozen=True)

    samples: Optional[int] = Field(default=None, ge=0)
    bo_calls: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def check_exactly_one(self) -> "Budget":
        if (self.samples is None) == (self.bo_calls is None):
            raise ValueError("budget needs exactly one of samples or bo_calls")
        return self


class CheckResult(BaseModel):
    """Comparison of a measured value with its expected value"""

    name: str
    observed: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    passed: bool
    detail: Optional[str] = None


class RunReport(BaseModel):
    """
    Outcome of a chain or a scenario.

    Chain reports carry samples and per-sample statistics; scenario reports
    nest the chain reports they were built from under `runs`.
    """

    scenario: Optional[Dict[str, Any]] = None
    sampler: Optional[SamplerKind] = None
    body: Optional[Dict[str, Any]] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    rng: Dict[str, Any] = Field(default_factory=dict)
    budget: Optional[Dict[str, Any]] = None
    start: Optional[List[float]] = None
    samples: Optional[List[List[float]]] = None
    n_samples: int = 0
    bo_calls: int = 0
    oracle_calls: int = 0
    bo_overshoot: int = 0
    reflections: List[int] = Field(default_factory=list)
    restarts: List[int] = Field(default_factory=list)
    length_redraws: int = 0
    reflection_histogram: Dict[int, int] = Field(default_factory=dict)
    restart_histogram: Dict[int, int] = Field(default_factory=dict)
    precondition: Optional[Dict[str, Any]] = None
    metrics: Dict[str, Any] = Field(default_factory=dict)
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckResult] = Field(default_factory=list)
    runs: Dict[str, "RunReport"] = Field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def deterministic_dump(self) -> Dict[str, Any]:
        """Report contents without wall times (identical for identical seeds)"""
        data = self.model_dump(mode="json", exclude={"wall_time"})
        for key in data.get("runs", {}):
            data["runs"][key] = self.runs[key].deterministic_dump()
        return data


RunReport.model_rebuild()
