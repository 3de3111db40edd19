"""
Constraint-matrix estimators.

Four estimators share one covariance/eigenvector core:

- ``pca_identify``: plain PCA, smallest-eigenvalue eigenvectors of the
  sample covariance.
- ``spca_identify``: structural PCA, one PCA per distinct row support with
  rank-based filtering of the candidate eigenvectors.
- ``cpca_identify``: constrained PCA, PCA in the null space of known rows.
- ``cspca_identify``: structural PCA for rows without sub-structured
  predecessors, constrained PCA (using the already-estimated predecessors
  as known rows) for the others.

All functions are pure: identical inputs and options give bitwise-identical
results.
"""

import logging
from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field

from structured_pca.core.matops import (
    Mat,
    as_matrix,
    null_space_basis,
    numeric_rank,
    pinv_apply,
    row_space_residual,
    sym_eig,
)
from structured_pca.core.models import IdentifyResult, Method, StageDiagnostics
from structured_pca.core.structure import (
    ConstraintModel,
    RowPermutation,
    StructureMask,
    embed_row,
    label_equations,
    restructure,
    support,
)
from structured_pca.utils.exceptions import (
    DegenerateCovariance,
    DimensionMismatch,
    IdentificationError,
    KnownRowsRankDeficient,
    StructureInfeasible,
    TooFewSamples,
)

if TYPE_CHECKING:
    from structured_pca.config.settings import Settings

logger = logging.getLogger(__name__)


class IdentifyOptions(BaseModel):
    """Estimator options shared by all methods."""

    model_config = ConfigDict(frozen=True)

    rank_tol_rel: float = Field(default=0.1, gt=0.0, lt=1.0)
    eig_tol: float | None = Field(default=None, gt=0.0)
    center_data: bool = False

    @classmethod
    def from_settings(cls, settings: "Settings", **overrides: object) -> "IdentifyOptions":
        """Options seeded from RANK_TOL_REL / CENTER_DATA, with explicit overrides."""
        values: dict[str, object] = {
            "rank_tol_rel": settings.identify.rank_tol_rel,
            "center_data": settings.identify.center_data,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(values)


DEFAULT_OPTIONS = IdentifyOptions()


def _check_data(y: ArrayLike) -> Mat:
    data = as_matrix(y, "data")
    n, n_samples = data.shape
    if n_samples < n:
        raise TooFewSamples(f"{n_samples} samples for {n} variables; need at least {n}")
    return data


def _covariance(y: Mat, center: bool) -> Mat:
    if center:
        y = y - y.mean(axis=1, keepdims=True)
    s = (y @ y.T) / y.shape[1]
    if not np.any(s):
        raise DegenerateCovariance("sample covariance is identically zero")
    return s


def _check_mask(data: Mat, mask: StructureMask) -> None:
    if mask.n != data.shape[0]:
        raise DimensionMismatch(f"mask has {mask.n} columns but data has {data.shape[0]} variables")


def _first_acceptable(
    candidates: Sequence[np.ndarray], accumulated: list[np.ndarray], n: int, opts: IdentifyOptions
) -> np.ndarray | None:
    """First candidate that lies farther than rank_tol_rel from the accumulated row space."""
    base = np.vstack(accumulated) if accumulated else np.zeros((0, n))
    for cand in candidates:
        if row_space_residual(base, cand, opts.eig_tol) > opts.rank_tol_rel:
            return cand
    return None


def pca_identify(y: ArrayLike, m: int, opts: IdentifyOptions = DEFAULT_OPTIONS) -> IdentifyResult:
    """
    Estimate m constraints as the smallest-eigenvalue eigenvectors of S = Y Y^T / N.

    Args:
        y: n x N data
        m: Number of constraints
        opts: Estimator options

    Returns:
        IdentifyResult with orthonormal rows

    Raises:
        TooFewSamples: If N < n
        DimensionMismatch: If m is not in [1, n)
        DegenerateCovariance: If the covariance is zero
    """
    data = _check_data(y)
    n = data.shape[0]
    if not 0 < m < n:
        raise DimensionMismatch(f"m={m} must satisfy 0 < m < n={n}")

    w, u = sym_eig(_covariance(data, opts.center_data))
    a_hat = u[:, :m].T
    logger.debug(f"PCA eigenvalues: {np.array2string(w, precision=4)}", extra={"method": "pca"})

    stage = StageDiagnostics(rows=list(range(m)), support=list(range(n)), eigenvalues=w, accepted=m)
    return IdentifyResult(
        model=ConstraintModel(a_hat),
        method=Method.PCA,
        stages=[stage],
        permutation=RowPermutation.identity(m),
    )


def noise_variance_estimate(y: ArrayLike, m: int, opts: IdentifyOptions = DEFAULT_OPTIONS) -> float:
    """Mean of the m smallest covariance eigenvalues."""
    result = pca_identify(y, m, opts)
    return float(np.mean(result.stages[0].eigenvalues[:m]))


def spca_identify(
    y: ArrayLike, mask: StructureMask, opts: IdentifyOptions = DEFAULT_OPTIONS
) -> IdentifyResult:
    """
    Structural PCA.

    Rows are processed in ascending support size. Only the first row of each
    distinct support runs an eigen-analysis; it extracts g constraints for
    all g rows sharing that support, accepting eigenvectors (ascending
    eigenvalue) that add a new direction to the rows estimated so far.

    Raises:
        StructureInfeasible: If a support yields fewer acceptable candidates than rows
        TooFewSamples: If N < n
    """
    data = _check_data(y)
    _check_mask(data, mask)
    n = mask.n
    sorted_mask, perm = restructure(mask)

    rows: list[np.ndarray | None] = [None] * mask.m
    accumulated: list[np.ndarray] = []
    stages: list[StageDiagnostics] = []

    for i in range(sorted_mask.m):
        if rows[i] is not None:
            continue
        phi = support(sorted_mask, i)
        group = [k for k in range(i, sorted_mask.m) if np.array_equal(sorted_mask.mask[k], sorted_mask.mask[i])]

        w, u = sym_eig(_covariance(data[list(phi)], opts.center_data))
        accepted: list[np.ndarray] = []
        for k in range(u.shape[1]):
            cand = embed_row(u[:, k], phi, n)
            if _first_acceptable([cand], accumulated + accepted, n, opts) is not None:
                accepted.append(cand)
                if len(accepted) == len(group):
                    break

        if len(accepted) < len(group):
            raise StructureInfeasible(
                f"support {list(phi)} yielded {len(accepted)} independent constraints, "
                f"needed {len(group)}"
            )

        for k, row in zip(group, accepted, strict=True):
            rows[k] = row
        accumulated.extend(accepted)
        stages.append(
            StageDiagnostics(
                rows=[perm.perm[k] for k in group],
                support=list(phi),
                eigenvalues=w,
                accepted=len(accepted),
            )
        )
        logger.debug(
            f"sPCA support {list(phi)}: accepted {len(accepted)} of {len(phi)} candidates",
            extra={"method": "spca", "stage": len(stages) - 1},
        )

    a_hat = perm.restore(np.vstack(rows))
    return IdentifyResult(
        model=ConstraintModel(a_hat, mask),
        method=Method.SPCA,
        stages=stages,
        permutation=perm,
    )


def cpca_identify(
    y: ArrayLike, a_kn: ArrayLike, l: int, opts: IdentifyOptions = DEFAULT_OPTIONS  # noqa: E741
) -> IdentifyResult:
    """
    Constrained PCA: estimate ``l`` further constraints given known rows.

    The data are projected onto the null space of ``a_kn``, PCA runs in the
    reduced space and the l smallest-eigenvalue directions are mapped back.
    Known rows are returned first and unchanged; estimated rows are
    unit-normalized.

    Raises:
        KnownRowsRankDeficient: If ``a_kn`` lacks full row rank
        DimensionMismatch: If widths differ, l < 1 or the total row count reaches n
    """
    data = _check_data(y)
    n = data.shape[0]
    known = np.asarray(a_kn, dtype=np.float64)
    known = np.zeros((0, n)) if known.size == 0 else as_matrix(known, "known rows")
    if known.shape[1] != n:
        raise DimensionMismatch(f"known rows have {known.shape[1]} columns, data has {n} variables")
    k = known.shape[0]
    if l < 1 or k + l >= n:
        raise DimensionMismatch(f"need l >= 1 and known + l < n; got known={k}, l={l}, n={n}")
    if k and numeric_rank(known, opts.eig_tol) < k:
        raise KnownRowsRankDeficient(f"{k} known rows are linearly dependent")

    a_new, w = _constrained_directions(data, known, opts)
    a_hat = a_new[:l]
    a_hat = a_hat / np.linalg.norm(a_hat, axis=1, keepdims=True)
    logger.debug(
        f"cPCA projected eigenvalues: {np.array2string(w, precision=4)}", extra={"method": "cpca"}
    )

    stage = StageDiagnostics(rows=list(range(k, k + l)), support=list(range(n)), eigenvalues=w, accepted=l)
    return IdentifyResult(
        model=ConstraintModel(np.vstack([known, a_hat])),
        method=Method.CPCA,
        stages=[stage],
        permutation=RowPermutation.identity(k + l),
    )


def _constrained_directions(data: Mat, known: Mat, opts: IdentifyOptions) -> tuple[Mat, np.ndarray]:
    """
    All eigen-directions of the data projected onto the null space of
    ``known``, mapped back to the original variables (rows, ascending
    eigenvalue, not normalized).
    """
    b = null_space_basis(known, opts.eig_tol)
    projected = pinv_apply(b, data)
    w, u = sym_eig(_covariance(projected, opts.center_data))
    b_pinv = pinv_apply(b, np.eye(data.shape[0]))
    return u.T @ b_pinv, w


def cspca_identify(
    y: ArrayLike, mask: StructureMask, opts: IdentifyOptions = DEFAULT_OPTIONS
) -> IdentifyResult:
    """
    Combined structural/constrained PCA.

    Equations are sorted by support size and labeled. S rows are estimated
    like structural PCA on their support; C rows by constrained PCA on their
    support with the already-estimated sub-structured rows as known
    constraints, one row at a time.

    Raises:
        StructureInfeasible: If no candidate adds a new direction
        KnownRowsRankDeficient: If the sub-structured rows cannot serve as known rows
    """
    data = _check_data(y)
    _check_mask(data, mask)
    n = mask.n
    sorted_mask, perm = restructure(mask)
    labels = label_equations(sorted_mask)

    accumulated: list[np.ndarray] = []
    stages: list[StageDiagnostics] = []

    for i, lab in enumerate(labels):
        phi = list(lab.phi)
        sub = data[phi]
        if lab.label == "S":
            w, u = sym_eig(_covariance(sub, opts.center_data))
            candidates = [embed_row(u[:, k], phi, n) for k in range(u.shape[1])]
        else:
            known = np.vstack([accumulated[j] for j in lab.psi])[:, phi]
            if known.shape[0] >= len(phi) or numeric_rank(known, opts.eig_tol) < known.shape[0]:
                raise KnownRowsRankDeficient(
                    f"equation {perm.perm[i]}: {known.shape[0]} sub-structured rows "
                    f"do not leave a null space on support {phi}"
                )
            directions, w = _constrained_directions(sub, known, opts)
            candidates = [
                embed_row(d / np.linalg.norm(d), phi, n) for d in directions if np.linalg.norm(d) > 0.0
            ]

        row = _first_acceptable(candidates, accumulated, n, opts)
        if row is None:
            raise StructureInfeasible(
                f"equation {perm.perm[i]} ({lab.label}): no candidate on support {phi} "
                "adds a new constraint"
            )
        accumulated.append(row)
        stages.append(
            StageDiagnostics(
                rows=[perm.perm[i]],
                support=phi,
                eigenvalues=w,
                accepted=1,
                label=lab.label,
                known=[perm.perm[j] for j in lab.psi],
            )
        )
        logger.debug(
            f"CSPCA equation {perm.perm[i]} labeled {lab.label}, psi={list(lab.psi)}",
            extra={"method": "cspca", "stage": i},
        )

    a_hat = perm.restore(np.vstack(accumulated))
    return IdentifyResult(
        model=ConstraintModel(a_hat, mask),
        method=Method.CSPCA,
        stages=stages,
        permutation=perm,
        labels=labels,
    )


def identify(
    method: Method | str,
    y: ArrayLike,
    *,
    m: int | None = None,
    mask: StructureMask | None = None,
    a_kn: ArrayLike | None = None,
    l: int | None = None,  # noqa: E741
    opts: IdentifyOptions = DEFAULT_OPTIONS,
) -> IdentifyResult:
    """
    Run one estimator by name.

    ``m`` defaults to the mask row count. For cPCA, ``l`` defaults to
    ``m`` minus the number of known rows.

    Raises:
        IdentificationError: If the inputs the method needs are missing
    """
    method = Method(method)
    if m is None and mask is not None:
        m = mask.m

    if method is Method.PCA:
        if m is None:
            raise IdentificationError("pca needs the number of constraints m")
        return pca_identify(y, m, opts)

    if method in (Method.SPCA, Method.CSPCA):
        if mask is None:
            raise IdentificationError(f"{method} needs a structure mask")
        fn = spca_identify if method is Method.SPCA else cspca_identify
        return fn(y, mask, opts)

    if a_kn is None:
        raise IdentificationError("cpca needs known constraint rows")
    known = np.asarray(a_kn, dtype=np.float64)
    n_known = 0 if known.size == 0 else as_matrix(known).shape[0]
    if l is None:
        if m is None:
            raise IdentificationError("cpca needs l or the total number of constraints m")
        l = m - n_known  # noqa: E741
    return cpca_identify(y, known, l, opts)
