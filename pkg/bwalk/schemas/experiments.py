"""
Experiment scenario schemas.

A Scenario names one of the built-in experiments, carries its parameters as
a free-form mapping (validated against the per-scenario parameter model
before the run) and optionally overrides the expected values the run is
checked against.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bwalk.schemas.sampling import CheckResult, SamplerKind


class ScenarioName(str, Enum):
    """Built-in experiments"""
    ANGLE = "angle"
    ORTHANT = "orthant"
    CUSP = "cusp"
    STRIP = "strip"
    CUBE = "cube"
    SIMPLEX = "simplex"
    TOROID = "toroid"
    ELLIPSE = "ellipse"
    BOX = "box"
    CUSTOM = "custom"


class Expectation(BaseModel):
    """
    Expected value of a scenario metric.

    `value` with `tolerance` (absolute, or relative to |value| when
    `relative`) checks closeness; `at_least` / `at_most` check one-sided
    bounds. All given conditions must hold. `note` is appended to the check
    detail.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    value: Optional[float] = None
    tolerance: float = Field(default=0.0, ge=0)
    relative: bool = False
    at_least: Optional[float] = None
    at_most: Optional[float] = None
    note: Optional[str] = None

    @model_validator(mode="after")
    def check_condition(self) -> "Expectation":
        if self.value is None and self.at_least is None and self.at_most is None:
            raise ValueError("expectation needs value, at_least or at_most")
        return self

    @property
    def absolute_tolerance(self) -> float:
        if self.relative and self.value is not None:
            return self.tolerance * abs(self.value)
        return self.tolerance

    def check(self, name: str, observed: Optional[float]) -> CheckResult:
        if observed is None or (isinstance(observed, float) and math.isnan(observed)):
            return CheckResult(name=name, observed=None, expected=self.value,
                               tolerance=self.absolute_tolerance, passed=False,
                               detail=self._detail(["metric not produced"]))
        observed = float(observed)
        passed = True
        details = []
        if self.value is not None:
            passed &= abs(observed - self.value) <= self.absolute_tolerance
            details.append(f"|x - {self.value:g}| <= {self.absolute_tolerance:g}")
        if self.at_least is not None:
            passed &= observed >= self.at_least
            details.append(f"x >= {self.at_least:g}")
        if self.at_most is not None:
            passed &= observed <= self.at_most
            details.append(f"x <= {self.at_most:g}")
        return CheckResult(name=name, observed=observed, expected=self.value,
                           tolerance=self.absolute_tolerance if self.value is not None else None,
                           passed=bool(passed), detail=self._detail(details))

    def _detail(self, parts: List[str]) -> str:
        return "; ".join([", ".join(parts)] + ([self.note] if self.note else []))


class Scenario(BaseModel):
    """One experiment run request"""

    name: ScenarioName
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)
    expected: Optional[Dict[str, Expectation]] = Field(
        default=None, description="Overrides and additions to the built-in expectations")
    retain_samples: bool = Field(default=False, description="Keep chain samples in the report")

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={
            "example": {"name": "angle", "parameters": {"alphas": [0.7853981633974483]},
                        "seed": 7}
        },
    )


# ---------------------------------------------------------------------------
# per-scenario parameters
# ---------------------------------------------------------------------------

class _Parameters(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AngleParameters(_Parameters):
    """Corner escape in plane angles"""

    alphas: List[float] = Field(
        default_factory=lambda: [math.pi / 2, math.pi / 4, math.pi / 10, math.pi / 50])
    trials: int = Field(default=5000, ge=2)
    start: List[float] = Field(default_factory=lambda: [0.0, 0.1])
    law_iterations: List[int] = Field(default_factory=lambda: [1, 2, 5])
    law_trials: int = Field(default=10_000, ge=1)
    law_tolerance: float = Field(default=0.02, gt=0)
    hr_reading: Literal["chord", "point"] = "chord"
    cap: Optional[int] = Field(default=None, ge=1)

    @field_validator("alphas")
    @classmethod
    def validate_alphas(cls, v: List[float]) -> List[float]:
        if not v or any(not 0.0 < a < math.pi for a in v):
            raise ValueError("alphas must be a non-empty list in (0, pi)")
        return v


class OrthantParameters(_Parameters):
    """Corner escape from the positive orthant"""

    bw_dims: List[int] = Field(default_factory=lambda: list(range(2, 51)))
    bw_trials: int = Field(default=1000, ge=1)
    hr_dims: List[int] = Field(default_factory=lambda: list(range(2, 9)))
    hr_trials: int = Field(default=100_000, ge=1)
    sigmas: float = Field(default=3.0, gt=0)

    @field_validator("bw_dims", "hr_dims")
    @classmethod
    def validate_dims(cls, v: List[int]) -> List[int]:
        if any(n < 2 for n in v):
            raise ValueError("orthant dimensions must be at least 2")
        return v


class CuspParameters(_Parameters):
    """Deep trajectories into the concave cusp, or plain sampling in it"""

    mode: Literal["table", "sample"] = "table"
    epsilons: List[float] = Field(
        default_factory=lambda: [1e-3, 5e-4, 4e-4, 3e-4, 2e-4, 1.1e-4, 1.01e-4])
    length: float = Field(default=1.0, gt=0)
    x_start: float = Field(default=0.9, gt=0, lt=1)
    cap: Optional[int] = Field(default=None, ge=1, description="Reflections before censoring")
    tolerance: float = Field(default=0.05, ge=0)
    samples: int = Field(default=200, ge=1)
    tau: Optional[float] = Field(default=None, gt=0)


class StripParameters(_Parameters):
    """Horizontal travel per BO call in the long strip"""

    M: float = Field(default=1000.0, gt=0)
    bo_per_walker: int = Field(default=100, ge=2)
    walkers: int = Field(default=10_000, ge=1)
    tolerance: float = Field(default=0.20, ge=0)


class CubeParameters(_Parameters):
    """Unit cube uniformity and serial correlation"""

    n: int = Field(default=10, ge=1, le=62)
    protocol: Literal["budget", "samples"] = "budget"
    bo_budget: int = Field(default=20_000, ge=1)
    bw_samples: int = Field(default=1000, ge=2)
    tau: Optional[float] = Field(default=None, gt=0)
    max_reflections: Optional[int] = Field(default=None, ge=1)
    bins: int = Field(default=10, ge=2)
    pass_share: float = Field(default=0.8, ge=0, le=1)


class SimplexParameters(_Parameters):
    """Standard simplex uniformity over nested shells and vertex cells"""

    mode: Literal["tables", "figure"] = "tables"
    n: Optional[int] = Field(default=None, ge=1)
    bo_budget: int = Field(default=20_000, ge=1)
    samples: int = Field(default=300, ge=1)
    tau: Optional[float] = Field(default=None, gt=0)
    length_redraw_after: Optional[int] = Field(default=None, ge=0)
    levels: int = Field(default=10, ge=2)
    repeats: int = Field(default=20, ge=1)
    grid: int = Field(default=50, ge=2)
    bw_threshold: float = Field(default=16.9, gt=0)
    hr_threshold: float = Field(default=100.0, gt=0)
    table_share: float = Field(default=0.8, ge=0, le=1)
    figure_share: float = Field(default=0.9, ge=0, le=1)


class ToroidParameters(_Parameters):
    """Toroid sampling cost and angular uniformity"""

    n: int = Field(default=10, ge=2)
    r: float = Field(default=1.0 / 3.0, gt=0, lt=1)
    bw_samples: int = Field(default=500, ge=2)
    tau: Optional[float] = Field(default=None, gt=0)
    tau_rule: Literal["diameter", "tube"] = Field(
        default="diameter", description="Default tau: body diameter, or tube diameter 2r")
    bins: int = Field(default=12, ge=2)
    max_reflections: Optional[int] = Field(default=None, ge=1)


class EllipseParameters(_Parameters):
    """Nonsmooth restarts in the truncated ellipses"""

    variants: List[Literal["convex", "nonconvex"]] = Field(
        default_factory=lambda: ["convex", "nonconvex"])
    focus_launches: int = Field(default=1000, ge=1)
    length: float = Field(default=5.0, ge=4.0)
    uniform_starts: int = Field(default=1000, ge=1)
    tau: Optional[float] = Field(default=None, gt=0)


class BoxParameters(_Parameters):
    """Ill-shaped box with and without Dikin rounding"""

    half_widths: List[float] = Field(default_factory=lambda: [1.0, 10.0, 100.0])
    samples: int = Field(default=2000, ge=2)
    bins: int = Field(default=10, ge=2)
    sampler: SamplerKind = SamplerKind.BW

    @field_validator("half_widths")
    @classmethod
    def validate_half_widths(cls, v: List[float]) -> List[float]:
        if not v or any(a <= 0 for a in v):
            raise ValueError("half widths must be positive")
        return v


class CustomParameters(_Parameters):
    """Any body descriptor with any sampler"""

    body: Dict[str, Any]
    sampler: SamplerKind = SamplerKind.BW
    samples: Optional[int] = Field(default=None, ge=0)
    bo_budget: Optional[int] = Field(default=None, ge=0)
    tau: Optional[float] = Field(default=None, gt=0)
    max_reflections: Optional[int] = Field(default=None, ge=1)
    precondition: Optional[Literal["dikin"]] = None
    start: Optional[List[float]] = None
    chains: int = Field(default=1, ge=1)
    length_redraw_after: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def check_budget(self) -> "CustomParameters":
        if (self.samples is None) == (self.bo_budget is None):
            raise ValueError("custom scenario needs exactly one of samples or bo_budget")
        return self


SCENARIO_PARAMETERS: Dict[ScenarioName, Type[_Parameters]] = {
    ScenarioName.ANGLE: AngleParameters,
    ScenarioName.ORTHANT: OrthantParameters,
    ScenarioName.CUSP: CuspParameters,
    ScenarioName.STRIP: StripParameters,
    ScenarioName.CUBE: CubeParameters,
    ScenarioName.SIMPLEX: SimplexParameters,
    ScenarioName.TOROID: ToroidParameters,
    ScenarioName.ELLIPSE: EllipseParameters,
    ScenarioName.BOX: BoxParameters,
    ScenarioName.CUSTOM: CustomParameters,
}
