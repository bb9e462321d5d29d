# Schemas package for bwalk
#
# Pydantic schemas for:
# - Body descriptors
# - Sampler configuration, budgets and run reports
# - Partitions and diagnostics results
# - Experiment scenarios and their parameters

from .bodies import *
from .diagnostics import *
from .experiments import *
from .sampling import *

__all__ = [
    # Bodies
    "BODY_TYPES",
    "AngleTriangleDescriptor",
    "AxisBoxDescriptor",
    "BallDescriptor",
    "BodyDescriptor",
    "ConcaveCuspDescriptor",
    "EllipsoidDescriptor",
    "OrthantDescriptor",
    "PolytopeDescriptor",
    "StandardSimplexDescriptor",
    "StripDescriptor",
    "ToroidDescriptor",
    "TruncatedEllipseDescriptor",
    "UnitCubeDescriptor",
    "body_descriptor_adapter",

    # Sampling
    "Budget",
    "CheckResult",
    "RunReport",
    "SamplerConfig",
    "SamplerKind",
    "TerminationReason",

    # Diagnostics
    "AxisSlabs",
    "CellTransitionResult",
    "ChiSquareResult",
    "CubeHalving",
    "EscapeStatistics",
    "NestedSimplex",
    "PartitionSpec",
    "SimplexVertexCells",

    # Experiments
    "SCENARIO_PARAMETERS",
    "AngleParameters",
    "BoxParameters",
    "CubeParameters",
    "CuspParameters",
    "CustomParameters",
    "EllipseParameters",
    "Expectation",
    "OrthantParameters",
    "Scenario",
    "ScenarioName",
    "SimplexParameters",
    "StripParameters",
    "ToroidParameters",
]
