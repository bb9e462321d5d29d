"""
Exception hierarchy for the bwalk sampler.

Every error raised by the library derives from BilliardWalkError so callers
(and the CLI exit-code mapping) can catch one base class.
"""

from typing import Any, Dict, Optional


class BilliardWalkError(Exception):
    """Base exception for sampler errors"""
    pass


class InvalidDimensionError(BilliardWalkError):
    """Dimension is zero, too small, or does not match the body"""
    pass


class InvalidConfigError(BilliardWalkError):
    """Sampler, scenario or body parameter outside its valid range"""
    pass


class BodyBuildError(BilliardWalkError):
    """Body descriptor failed validation"""
    pass


class EmptyInteriorError(BodyBuildError):
    """Region defined by the descriptor has no interior point"""
    pass


class NotPositiveDefiniteError(BodyBuildError):
    """Ellipsoid matrix is not symmetric positive-definite"""
    pass


class PreconditionError(BilliardWalkError):
    """Point handed to an oracle or sampler is not strictly interior"""
    pass


class UnsupportedBodyError(BilliardWalkError):
    """Operation is not available for this body (e.g. sampling an unbounded body)"""
    pass


class PathologicalGeometryError(BilliardWalkError):
    """Restart cap exceeded while producing one sample"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConvergenceError(BilliardWalkError):
    """Newton centering did not reach the requested tolerance"""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class RankDeficiencyError(BilliardWalkError):
    """Barrier Hessian is numerically singular"""
    pass


class InvalidPartitionError(BilliardWalkError):
    """Partition or histogram input is inconsistent"""
    pass


class OutOfBodyError(InvalidPartitionError):
    """Sample lies outside the range covered by the partition"""
    pass


class ReportWriteError(BilliardWalkError):
    """Report could not be written to the requested path"""
    pass
