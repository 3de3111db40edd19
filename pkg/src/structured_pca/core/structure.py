"""
Structure masks, constraint models, and the combinatorial bookkeeping the
structure-aware estimators need: restructuring, group counts, supports,
S/C equation labels and row embedding.

Row and column indices are 0-based.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from structured_pca.core.matops import Mat, as_matrix, numeric_rank
from structured_pca.utils.exceptions import (
    InvalidMask,
    InvalidModel,
    SupportOutOfRange,
)

logger = logging.getLogger(__name__)

Label = Literal["S", "C"]


class StructureMask:
    """
    m x n boolean sparsity pattern of a constraint matrix.

    ``True`` marks an entry that may be non-zero. Instances are immutable.
    """

    __slots__ = ("_mask",)

    def __init__(self, mask: ArrayLike) -> None:
        arr = np.array(mask, dtype=bool)
        if arr.ndim != 2:
            raise InvalidMask(f"mask must be 2-D, got shape {arr.shape}")
        m, n = arr.shape
        if m == 0:
            raise InvalidMask("mask has no rows")
        if m >= n:
            raise InvalidMask(f"mask must have fewer rows than columns, got {m}x{n}")
        counts = arr.sum(axis=1)
        short = np.flatnonzero(counts < 2)
        if short.size:
            raise InvalidMask(
                f"rows {short.tolist()} have fewer than 2 non-zero entries"
            )
        arr.setflags(write=False)
        self._mask = arr

    @classmethod
    def from_matrix(cls, a: ArrayLike) -> "StructureMask":
        """Mask of the exactly non-zero entries of ``a``."""
        return cls(as_matrix(a) != 0.0)

    @property
    def mask(self) -> NDArray[np.bool_]:
        """Read-only boolean array."""
        return self._mask

    @property
    def m(self) -> int:
        return self._mask.shape[0]

    @property
    def n(self) -> int:
        return self._mask.shape[1]

    def row_counts(self) -> NDArray[np.int_]:
        """Non-zero count f(i) of every row."""
        return self._mask.sum(axis=1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StructureMask):
            return NotImplemented
        return np.array_equal(self._mask, other._mask)

    def __hash__(self) -> int:
        return hash((self._mask.shape, self._mask.tobytes()))

    def __repr__(self) -> str:
        rows = ["".join("x" if v else "0" for v in row) for row in self._mask]
        return f"StructureMask({rows})"


@dataclass(frozen=True)
class RowPermutation:
    """
    Row reordering: output row k comes from input row ``perm[k]``.
    """

    perm: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"not a permutation: {self.perm}")

    @classmethod
    def identity(cls, m: int) -> "RowPermutation":
        return cls(tuple(range(m)))

    @property
    def is_identity(self) -> bool:
        return self.perm == tuple(range(len(self.perm)))

    def inverse(self) -> "RowPermutation":
        inv = [0] * len(self.perm)
        for k, src in enumerate(self.perm):
            inv[src] = k
        return RowPermutation(tuple(inv))

    def apply(self, rows: NDArray) -> NDArray:
        """Reorder rows into permuted order."""
        return rows[list(self.perm)]

    def restore(self, rows: NDArray) -> NDArray:
        """Map rows in permuted order back to the original order."""
        out = np.empty_like(rows)
        out[list(self.perm)] = rows
        return out

    def to_list(self) -> list[int]:
        return list(self.perm)


class ConstraintModel:
    """
    m x n constraint matrix with independent rows, optionally tied to the
    structure mask it conforms to.
    """

    __slots__ = ("_a", "_mask")

    def __init__(self, a: ArrayLike, mask: StructureMask | None = None) -> None:
        arr = as_matrix(a, "constraint matrix").copy()
        m, n = arr.shape
        if mask is not None:
            if mask.mask.shape != arr.shape:
                raise InvalidModel(
                    f"matrix shape {arr.shape} does not match mask shape {mask.mask.shape}"
                )
            off = (arr != 0.0) & ~mask.mask
            if np.any(off):
                raise InvalidModel(
                    f"non-zero entries outside the mask at {np.argwhere(off).tolist()}"
                )
        rank = numeric_rank(arr)
        if rank != m:
            raise InvalidModel(f"constraint rows are dependent: rank {rank} < {m}")
        arr.setflags(write=False)
        self._a = arr
        self._mask = mask

    @property
    def a(self) -> Mat:
        return self._a

    @property
    def mask(self) -> StructureMask | None:
        return self._mask

    @property
    def m(self) -> int:
        return self._a.shape[0]

    @property
    def n(self) -> int:
        return self._a.shape[1]

    def __repr__(self) -> str:
        return f"ConstraintModel(m={self.m}, n={self.n}, masked={self._mask is not None})"


@dataclass(frozen=True)
class EquationLabel:
    """Support, sub-structured predecessors and S/C label of one equation."""

    phi: tuple[int, ...]
    psi: tuple[int, ...]
    label: Label

    def to_dict(self) -> dict:
        return {"phi": list(self.phi), "psi": list(self.psi), "label": self.label}


def restructure(mask: StructureMask) -> tuple[StructureMask, RowPermutation]:
    """
    Sort rows ascending by non-zero count (stable).

    Returns:
        The reordered mask and the permutation mapping output row -> input row
    """
    order = np.argsort(mask.row_counts(), kind="stable")
    perm = RowPermutation(tuple(int(i) for i in order))
    return StructureMask(perm.apply(mask.mask)), perm


def support(mask: StructureMask, i: int) -> tuple[int, ...]:
    """Ascending column indices of the non-zero pattern of row ``i``."""
    return tuple(int(j) for j in np.flatnonzero(mask.mask[i]))


def group_count(mask: StructureMask, i: int) -> int:
    """Number of rows whose support equals the support of row ``i``."""
    row = mask.mask[i]
    return int(np.sum(np.all(mask.mask == row, axis=1)))


def label_equations(mask: StructureMask) -> list[EquationLabel]:
    """
    Label each equation of a sorted mask as S (no sub-structured
    predecessor) or C.

    psi_i collects the earlier rows j whose support is a subset of phi_i.

    Raises:
        InvalidMask: If rows are not in ascending non-zero-count order
    """
    counts = mask.row_counts()
    if np.any(np.diff(counts) < 0):
        raise InvalidMask("rows must be sorted ascending by non-zero count; restructure first")

    phis = [support(mask, i) for i in range(mask.m)]
    sets = [frozenset(p) for p in phis]
    labels: list[EquationLabel] = []
    for i, phi in enumerate(phis):
        psi = tuple(j for j in range(i) if sets[j] <= sets[i])
        labels.append(EquationLabel(phi=phi, psi=psi, label="C" if psi else "S"))
    return labels


def embed_row(sub_row: ArrayLike, columns: Sequence[int], n: int) -> NDArray[np.float64]:
    """
    Widen ``sub_row`` to length ``n`` with zeros outside ``columns``.

    Raises:
        SupportOutOfRange: If columns are not strictly ascending within [0, n)
    """
    values = np.asarray(sub_row, dtype=np.float64).ravel()
    cols = np.asarray(columns, dtype=int)
    if values.size != cols.size:
        raise SupportOutOfRange(f"{values.size} values for {cols.size} support columns")
    if cols.size and (cols[0] < 0 or cols[-1] >= n or np.any(np.diff(cols) <= 0)):
        raise SupportOutOfRange(f"support {cols.tolist()} is not strictly ascending within [0, {n})")
    out = np.zeros(n)
    out[cols] = values
    return out
