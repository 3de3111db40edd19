"""
Built-in case studies.

Each case bundles a true constraint matrix, its structure mask and the
Monte-Carlo defaults behind the reference comparisons in configs/.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from structured_pca.core.artifacts import read_mask, read_matrix
from structured_pca.core.structure import ConstraintModel, StructureMask
from structured_pca.utils.exceptions import UnknownCase

logger = logging.getLogger(__name__)

DEFAULT_SNR_GRID = (10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 5000.0)
DEFAULT_SAMPLES = 1000


@dataclass(frozen=True)
class ReferenceTheta:
    """A published mean theta (raw mode) for one method at one SNR."""

    method: str
    snr: float
    theta: float


@dataclass(frozen=True)
class CaseStudy:
    """A named true model with its structure and sweep defaults."""

    name: str
    description: str
    matrix: tuple[tuple[float, ...], ...]
    structure: tuple[tuple[int, ...], ...] | None = None
    default_runs: int = 100
    known_rows: tuple[int, ...] = ()
    snr_grid: tuple[float, ...] = DEFAULT_SNR_GRID
    n_samples: int = DEFAULT_SAMPLES
    reference: tuple[ReferenceTheta, ...] = ()

    def mask(self) -> StructureMask:
        if self.structure is None:
            return StructureMask.from_matrix(self.matrix)
        return StructureMask(self.structure)

    def model(self) -> ConstraintModel:
        return ConstraintModel(np.array(self.matrix, dtype=np.float64), self.mask())


# Flow-mixing network: five flows, three node balances.
FLOW_MIX = CaseStudy(
    name="flow-mix",
    description="Flow-mixing network, 3 node balances over 5 flows",
    matrix=(
        (1, -1, 0, 0, 1),
        (0, 1, -1, 0, 0),
        (0, 0, 1, -1, -1),
    ),
    default_runs=1000,
    known_rows=(0,),
    snr_grid=(10.0,),
    # 100 samples per run reproduces the published SNR 10 levels
    n_samples=100,
    reference=(
        ReferenceTheta("pca", 10.0, 0.1293),
        ReferenceTheta("spca", 10.0, 0.1188),
        ReferenceTheta("cpca", 10.0, 0.0747),
    ),
)

# Same network with nodes lumped into an overall balance.
FLOW_MIX_EQUIV = CaseStudy(
    name="flow-mix-equiv",
    description="Flow-mixing network with the third balance replaced by the lumped overall balance",
    matrix=(
        (1, -1, 0, 0, 1),
        (0, 1, -1, 0, 0),
        (1, 0, 0, -1, 0),
    ),
    default_runs=1000,
    known_rows=(0,),
)

CS1 = CaseStudy(
    name="cs1",
    description="Nested supports of growing size, 3 constraints over 6 variables",
    matrix=(
        (1, 1, 0, 0, 0, 0),
        (1, 2, 3, 0, 0, 0),
        (3, 1, -1, 2, 0, 0),
    ),
    default_runs=500,
)

CS3 = CaseStudy(
    name="cs3",
    description="Repeated and sub-structured supports, 4 constraints over 6 variables",
    matrix=(
        (3, 1, -1, 2, 0, -6),
        (2, 1, -2, 1, 0, 0),
        (1, 1, -1, 0, 0, 0),
        (1, -3, 1, 1, 0, 0),
    ),
    structure=(
        (1, 1, 1, 1, 0, 1),
        (1, 1, 1, 1, 0, 0),
        (1, 1, 1, 0, 0, 0),
        (1, 1, 1, 1, 0, 0),
    ),
    default_runs=100,
)

CASES: dict[str, CaseStudy] = {c.name: c for c in (FLOW_MIX, FLOW_MIX_EQUIV, CS1, CS3)}


def list_cases() -> list[CaseStudy]:
    return list(CASES.values())


def get_case(name: str) -> CaseStudy:
    """
    Raises:
        UnknownCase: If no case has this name
    """
    try:
        return CASES[name]
    except KeyError:
        raise UnknownCase(f"unknown case {name!r}; available: {', '.join(CASES)}") from None


def registry_lookup(name: str) -> tuple[ConstraintModel, StructureMask]:
    """True model and structure mask of a built-in case."""
    case = get_case(name)
    mask = case.mask()
    return ConstraintModel(np.array(case.matrix, dtype=np.float64), mask), mask


def load_model_files(
    model_path: Path, mask_path: Path | None = None
) -> tuple[ConstraintModel, StructureMask]:
    """
    Model from a matrix CSV, with the mask file if given, else the
    matrix's own non-zero pattern.
    """
    a = read_matrix(model_path)
    mask = read_mask(mask_path) if mask_path is not None else StructureMask.from_matrix(a)
    logger.debug(f"Loaded {a.shape[0]}x{a.shape[1]} model from {model_path}")
    return ConstraintModel(a, mask), mask
