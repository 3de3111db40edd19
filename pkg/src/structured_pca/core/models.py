"""
Data models for identification results.

Defines data structures for datasets, estimates, metric reports and fault
reports. Each carries a ``to_dict`` for JSON serialization.
"""

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import NDArray

from structured_pca.core.matops import Mat
from structured_pca.core.structure import ConstraintModel, EquationLabel, RowPermutation


class Method(StrEnum):
    """Identification methods."""

    PCA = "pca"
    SPCA = "spca"
    CPCA = "cpca"
    CSPCA = "cspca"


def snr_to_json(snr: float) -> float | str:
    """JSON-safe SNR value (infinity becomes the string ``"inf"``)."""
    return "inf" if math.isinf(snr) else snr


@dataclass
class DataSet:
    """Noise-free and noisy samples (n x N) with noise provenance."""

    x: Mat
    y: Mat
    sigma: float
    seed: int
    snr: float
    rng_algorithm: str = "PCG64"
    coeff_law: str = "standard-normal"
    per_channel: bool = False

    def __post_init__(self) -> None:
        if self.x.shape != self.y.shape:
            raise ValueError(f"x {self.x.shape} and y {self.y.shape} differ in shape")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def n_samples(self) -> int:
        return self.x.shape[1]

    def to_dict(self) -> dict[str, Any]:
        """Provenance only; the matrices are written as CSV."""
        return {
            "n_variables": self.n,
            "n_samples": self.n_samples,
            "sigma": self.sigma,
            "snr": snr_to_json(self.snr),
            "seed": self.seed,
            "rng_algorithm": self.rng_algorithm,
            "coeff_law": self.coeff_law,
            "noise_mode": "per-channel" if self.per_channel else "homoscedastic",
        }


@dataclass
class StageDiagnostics:
    """Eigen-analysis of one estimation stage."""

    rows: list[int]
    support: list[int]
    eigenvalues: NDArray[np.float64]
    accepted: int
    label: str | None = None
    known: list[int] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "rows": self.rows,
            "support": self.support,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "accepted": self.accepted,
        }
        if self.label is not None:
            d["label"] = self.label
            d["known"] = self.known
        return d


@dataclass
class IdentifyResult:
    """Estimated constraint model plus per-stage diagnostics."""

    model: ConstraintModel
    method: Method
    stages: list[StageDiagnostics]
    permutation: RowPermutation
    labels: list[EquationLabel] | None = None

    @property
    def a_hat(self) -> Mat:
        return self.model.a

    @property
    def eigenvalues(self) -> list[NDArray[np.float64]]:
        return [s.eigenvalues for s in self.stages]

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "method": self.method.value,
            "m": self.model.m,
            "n": self.model.n,
            "permutation": self.permutation.to_list(),
            "stages": [s.to_dict() for s in self.stages],
        }
        if self.labels is not None:
            d["labels"] = [lab.to_dict() for lab in self.labels]
        return d


@dataclass
class ThetaReport:
    """Subspace dependence between a true and an estimated model."""

    per_row: tuple[float, ...]
    normalized_mode: bool
    theta: float = field(init=False)

    def __post_init__(self) -> None:
        self.theta = float(sum(self.per_row))

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta": self.theta,
            "per_row": list(self.per_row),
            "normalized_mode": self.normalized_mode,
        }


@dataclass(frozen=True)
class ReconciliationError:
    """Distance of reconciled data from the measurements and from the noise-free data."""

    meas: float
    true: float | None
    norm: str = "spectral"

    def to_dict(self) -> dict[str, Any]:
        return {"error_meas": self.meas, "error_true": self.true, "norm": self.norm}


@dataclass
class FaultReport:
    """Per-sample constraint residuals and fault flags."""

    residuals: NDArray[np.float64]
    tolerance: float
    norm: str = "l1"
    adjustments: NDArray[np.float64] | None = None
    oracle: NDArray[np.bool_] | None = None
    flags: NDArray[np.bool_] = field(init=False)

    def __post_init__(self) -> None:
        self.flags = self.residuals > self.tolerance

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flags))

    @property
    def true_positive(self) -> int | None:
        if self.oracle is None:
            return None
        return int(np.count_nonzero(self.flags & self.oracle))

    @property
    def false_positive(self) -> int | None:
        if self.oracle is None:
            return None
        return int(np.count_nonzero(self.flags & ~self.oracle))

    @property
    def false_negative(self) -> int | None:
        if self.oracle is None:
            return None
        return int(np.count_nonzero(~self.flags & self.oracle))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "tolerance": self.tolerance,
            "norm": self.norm,
            "n_samples": int(self.residuals.size),
            "n_flagged": self.n_flagged,
            "flagged_samples": np.flatnonzero(self.flags).tolist(),
            "residuals": [float(r) for r in self.residuals],
        }
        if self.oracle is not None:
            d["true_positive"] = self.true_positive
            d["false_positive"] = self.false_positive
            d["false_negative"] = self.false_negative
        return d
