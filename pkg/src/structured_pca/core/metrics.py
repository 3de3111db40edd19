"""Comparison of estimated and true constraint models."""

from collections.abc import Mapping, Sequence
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from structured_pca.core.matops import Mat, as_matrix, numeric_rank, row_space_basis
from structured_pca.core.models import ReconciliationError, ThetaReport
from structured_pca.utils.exceptions import LengthMismatch, RankDeficientEstimate, ShapeMismatch

MatrixNorm = Literal["spectral", "fro"]


def subspace_dependence(
    a0: ArrayLike, a_hat: ArrayLike, normalize_rows: bool = False
) -> ThetaReport:
    """
    Sum over true rows of the distance to the estimated row space.

    Args:
        a0: True model (m x n)
        a_hat: Estimate (m' x n), full row rank
        normalize_rows: Scale each true row to unit norm first

    Raises:
        ShapeMismatch: If column counts differ
        RankDeficientEstimate: If a_hat lacks full row rank
    """
    true = as_matrix(a0, "true model")
    est = as_matrix(a_hat, "estimate")
    if true.shape[1] != est.shape[1]:
        raise ShapeMismatch(f"true model has {true.shape[1]} columns, estimate has {est.shape[1]}")

    rank = numeric_rank(est)
    if rank < est.shape[0]:
        raise RankDeficientEstimate(f"estimate has {est.shape[0]} rows but rank {rank}")

    if normalize_rows:
        true = true / np.linalg.norm(true, axis=1, keepdims=True)

    q = row_space_basis(est)
    residual = true - (true @ q.T) @ q
    per_row = tuple(float(v) for v in np.linalg.norm(residual, axis=1))
    return ThetaReport(per_row=per_row, normalized_mode=normalize_rows)


def best_instance_counts(theta_runs: Mapping[str, Sequence[float]]) -> dict[str, int]:
    """
    Per method, the number of runs in which it has the strictly smallest theta.

    Ties and runs where any method is missing (NaN) count for no method.

    Raises:
        LengthMismatch: If methods have different run counts
    """
    names = list(theta_runs)
    counts = dict.fromkeys(names, 0)
    if not names:
        return counts

    lengths = {name: len(theta_runs[name]) for name in names}
    if len(set(lengths.values())) > 1:
        raise LengthMismatch(f"run counts differ between methods: {lengths}")

    table = np.array([np.asarray(theta_runs[name], dtype=np.float64) for name in names])
    for column in table.T:
        if np.any(np.isnan(column)):
            continue
        best = column.min()
        winners = np.flatnonzero(column == best)
        if winners.size == 1:
            counts[names[winners[0]]] += 1
    return counts


def reconcile(a_hat: ArrayLike, y: ArrayLike) -> Mat:
    """
    Project every sample onto the null space of ``a_hat``.

    Returns ``(I - Q^T Q) Y`` with Q an orthonormal basis of the row space,
    so ``a_hat @ result`` vanishes to rounding.

    Raises:
        ShapeMismatch: If the model width differs from the variable count
    """
    a = as_matrix(a_hat, "model")
    data = as_matrix(y, "data")
    if a.shape[1] != data.shape[0]:
        raise ShapeMismatch(f"model has {a.shape[1]} columns, data has {data.shape[0]} variables")
    q = row_space_basis(a)
    return data - q.T @ (q @ data)


def _matrix_norm(m: Mat, norm: MatrixNorm) -> float:
    return float(np.linalg.norm(m, 2 if norm == "spectral" else "fro"))


def reconciliation_error(
    a_hat: ArrayLike, y: ArrayLike, x: ArrayLike | None = None, norm: MatrixNorm = "spectral"
) -> ReconciliationError:
    """
    How far the data reconciled with ``a_hat`` lie from the measurements
    and, when given, from the noise-free data.

    Args:
        a_hat: Constraint matrix used for reconciliation
        y: Noisy measurements (n x N)
        x: Noise-free data (n x N), optional
        norm: ``spectral`` (matrix 2-norm) or ``fro``

    Raises:
        ShapeMismatch: If ``x`` and ``y`` differ in shape or the model width does not match
    """
    data = as_matrix(y, "data")
    y_hat = reconcile(a_hat, data)
    meas = _matrix_norm(data - y_hat, norm)
    if x is None:
        return ReconciliationError(meas=meas, true=None, norm=norm)
    clean = as_matrix(x, "noise-free data")
    if clean.shape != data.shape:
        raise ShapeMismatch(f"noise-free data {clean.shape} and measurements {data.shape} differ")
    return ReconciliationError(meas=meas, true=_matrix_norm(clean - y_hat, norm), norm=norm)
