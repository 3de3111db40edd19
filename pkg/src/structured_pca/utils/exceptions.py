"""
Exception hierarchy. Each failure an operation can report is its own class,
grouped under one base per subsystem; the CLI prints the class name.
"""


class StructuredPCAError(Exception):
    """Base exception for all toolkit errors."""

    pass


# Matrix primitives


class MatrixError(StructuredPCAError):
    """Base exception for dense matrix operations."""

    pass


class NonFiniteEntries(MatrixError):
    """Raised when a matrix contains NaN or infinite entries."""

    pass


class NonSquare(MatrixError):
    """Raised when a square matrix is required."""

    pass


class NotSymmetric(MatrixError):
    """Raised when a symmetric matrix is required."""

    pass


class FailedToConverge(MatrixError):
    """Raised when LAPACK fails to converge."""

    pass


class EmptyNullSpace(MatrixError):
    """Raised when a matrix has full column rank and no null space."""

    pass


class RankDeficient(MatrixError):
    """Raised when a matrix must have full column rank but does not."""

    pass


class IllConditioned(RankDeficient):
    """Raised when a pseudo-inverse would amplify errors beyond tolerance."""

    pass


class RankDeficientBase(MatrixError):
    """Raised when a projection base does not have full row rank."""

    pass


# Structure bookkeeping


class StructureError(StructuredPCAError):
    """Base exception for masks and constraint models."""

    pass


class InvalidMask(StructureError):
    """Raised when a structure mask violates its invariants."""

    pass


class InvalidModel(StructureError):
    """Raised when a constraint model violates its invariants."""

    pass


class SupportOutOfRange(StructureError):
    """Raised when a support index set is not ascending or out of range."""

    pass


# Data generation


class DataGenerationError(StructuredPCAError):
    """Base exception for synthetic data generation."""

    pass


class DegenerateSignal(DataGenerationError):
    """Raised when noise cannot be calibrated because the signal is constant."""

    pass


class InvalidGenSpec(DataGenerationError):
    """Raised when a generation spec is inconsistent."""

    pass


# Identification


class IdentificationError(StructuredPCAError):
    """Base exception for model identification."""

    pass


class TooFewSamples(IdentificationError):
    """Raised when N < n."""

    pass


class DegenerateCovariance(IdentificationError):
    """Raised when the sample covariance carries no information."""

    pass


class StructureInfeasible(IdentificationError):
    """Raised when a stage cannot find enough independent candidates."""

    pass


class KnownRowsRankDeficient(IdentificationError):
    """Raised when the known constraint rows are dependent or leave no room."""

    pass


class DimensionMismatch(IdentificationError):
    """Raised when argument shapes are inconsistent."""

    pass


# Metrics


class MetricError(StructuredPCAError):
    """Base exception for evaluation metrics."""

    pass


class RankDeficientEstimate(MetricError):
    """Raised when an estimate does not have full row rank."""

    pass


class ShapeMismatch(MetricError):
    """Raised when compared matrices have incompatible shapes."""

    pass


class LengthMismatch(MetricError):
    """Raised when per-method run arrays have different lengths."""

    pass


# Experiments, configuration and files


class ExperimentError(StructuredPCAError):
    """Base exception for experiment orchestration."""

    pass


class UnknownCase(ExperimentError):
    """Raised when a case name is not in the registry."""

    pass


class ConfigurationError(StructuredPCAError):
    """Raised for unusable experiment files, CLI argument combinations or settings."""

    pass


class ArtifactError(StructuredPCAError):
    """Raised when an input file is malformed."""

    pass
