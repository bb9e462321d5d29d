"""
Diagnostics schemas: partitions, chi-square results and escape statistics.
"""

from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field


class _Partition(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class CubeHalving(_Partition):
    """2^n equal subcubes of the unit cube"""

    kind: Literal["cube_halving"] = "cube_halving"
    n: int = Field(..., ge=1, le=62)


class AxisSlabs(_Partition):
    """k equal slabs of [0, 1) along one axis"""

    kind: Literal["axis_slabs"] = "axis_slabs"
    axis: int = Field(..., ge=0)
    bins: int = Field(default=10, ge=1)


class NestedSimplex(_Partition):
    """Equal-volume shells between nested simplices S_alpha"""

    kind: Literal["nested_simplex"] = "nested_simplex"
    n: int = Field(..., ge=1)
    levels: int = Field(default=10, ge=2)


class SimplexVertexCells(_Partition):
    """Nearest-vertex cells of the standard simplex"""

    kind: Literal["simplex_vertex_cells"] = "simplex_vertex_cells"
    n: int = Field(..., ge=1)


PartitionSpec = Annotated[
    Union[CubeHalving, AxisSlabs, NestedSimplex, SimplexVertexCells],
    Field(discriminator="kind"),
]


class ChiSquareResult(BaseModel):
    """Pearson chi-square statistic with the counts it was computed from"""

    statistic: float = Field(..., ge=0)
    dof: int
    observed: List[float]
    expected: List[float]
    band: Optional[Tuple[float, float]] = None
    passed: Optional[bool] = None


class CellTransitionResult(BaseModel):
    """Consecutive-sample cell changes against independent-uniform references"""

    leave: float
    stay: float
    reference_leave: float
    reference_stay: float
    pairs: int


class EscapeStatistics(BaseModel):
    """Reflections (BW) or iterations (HR) needed to leave a corner"""

    sampler: str
    trials: int
    mean: Optional[float] = None
    std: Optional[float] = None
    max: Optional[int] = None
    bo_mean: Optional[float] = None
    censored: int = 0
    counts: List[int] = Field(default_factory=list)

    @property
    def standard_error(self) -> Optional[float]:
        completed = self.trials - self.censored
        if self.std is None or completed < 1:
            return None
        return self.std / completed ** 0.5
