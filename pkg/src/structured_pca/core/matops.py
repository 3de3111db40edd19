"""
Dense real-matrix primitives.

Every decomposition routes through an SVD or a symmetric eigensolver from
``scipy.linalg``. Inputs are plain ``numpy`` arrays; functions never mutate
their arguments.
"""

import logging

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike, NDArray

from structured_pca.utils.exceptions import (
    EmptyNullSpace,
    FailedToConverge,
    IllConditioned,
    MatrixError,
    NonFiniteEntries,
    NonSquare,
    NotSymmetric,
    RankDeficient,
    RankDeficientBase,
)

logger = logging.getLogger(__name__)

Mat = NDArray[np.float64]

EPS = np.finfo(np.float64).eps
SYMMETRY_TOL = 1e-10
MAX_CONDITION = 1e12


def as_matrix(a: ArrayLike, name: str = "matrix") -> Mat:
    """
    Convert input to a 2-D float64 array with finite entries.

    1-D input is treated as a single row.

    Raises:
        MatrixError: If the input has more than two dimensions
        NonFiniteEntries: If any entry is NaN or infinite
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise MatrixError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntries(f"{name} contains NaN or infinite entries")
    return arr


def fix_column_signs(u: Mat) -> Mat:
    """Flip each column so that its largest-magnitude entry is positive."""
    if u.size == 0:
        return u.copy()
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def _singular_values(a: Mat) -> NDArray[np.float64]:
    if a.size == 0:
        return np.zeros(0)
    try:
        return la.svd(a, compute_uv=False)
    except la.LinAlgError as e:
        raise FailedToConverge(f"SVD did not converge: {e}") from e


def _rank_from_singular_values(s: NDArray[np.float64], shape: tuple[int, int], tol: float | None) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    rel = max(shape) * EPS if tol is None else tol
    return int(np.count_nonzero(s > rel * s[0]))


def numeric_rank(a: ArrayLike, tol: float | None = None) -> int:
    """
    Count singular values above ``tol * sigma_max``.

    Args:
        a: Matrix of any shape
        tol: Relative tolerance; defaults to ``max(rows, cols) * eps``

    Returns:
        Numeric rank (0 for the zero matrix)
    """
    mat = as_matrix(a)
    return _rank_from_singular_values(_singular_values(mat), mat.shape, tol)


def sym_eig(s: ArrayLike) -> tuple[NDArray[np.float64], Mat]:
    """
    Eigendecomposition of a symmetric matrix.

    Eigenvalues are returned ascending, eigenvector columns aligned with
    them and sign-normalized (largest-magnitude entry positive).

    Raises:
        NonSquare: If ``s`` is not square
        NotSymmetric: If ``s`` deviates from symmetry beyond 1e-10 * max|s|
        FailedToConverge: If LAPACK fails
    """
    mat = as_matrix(s, "covariance")
    if mat.shape[0] != mat.shape[1]:
        raise NonSquare(f"expected a square matrix, got {mat.shape}")
    scale = float(np.max(np.abs(mat))) if mat.size else 0.0
    if scale > 0.0 and np.max(np.abs(mat - mat.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")

    try:
        w, u = la.eigh(0.5 * (mat + mat.T))
    except la.LinAlgError as e:
        raise FailedToConverge(f"eigensolver did not converge: {e}") from e

    return w, fix_column_signs(u)


def null_space_basis(a: ArrayLike, tol: float | None = None) -> Mat:
    """
    Orthonormal basis of the right null space of ``a``.

    Args:
        a: m x n matrix
        tol: Relative rank tolerance (see ``numeric_rank``)

    Returns:
        n x k matrix, k = n - rank(a), orthonormal columns

    Raises:
        EmptyNullSpace: If ``a`` has full column rank
    """
    mat = as_matrix(a)
    n = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(n)

    try:
        _, s, vt = la.svd(mat, full_matrices=True)
    except la.LinAlgError as e:
        raise FailedToConverge(f"SVD did not converge: {e}") from e

    rank = _rank_from_singular_values(s, mat.shape, tol)
    if rank >= n:
        raise EmptyNullSpace(f"matrix of shape {mat.shape} has rank {rank}; null space is empty")
    return fix_column_signs(vt[rank:].T.copy())


def row_space_basis(a: ArrayLike, tol: float | None = None) -> Mat:
    """
    Orthonormal basis of the row space of ``a``, returned as rows (r x n).
    """
    mat = as_matrix(a)
    if mat.shape[0] == 0:
        return np.zeros((0, mat.shape[1]))
    try:
        _, s, vt = la.svd(mat, full_matrices=False)
    except la.LinAlgError as e:
        raise FailedToConverge(f"SVD did not converge: {e}") from e
    rank = _rank_from_singular_values(s, mat.shape, tol)
    return vt[:rank]


def row_space_residual(a: ArrayLike, b: ArrayLike, tol: float | None = None) -> float:
    """
    Distance of row vector ``b`` from the row space of ``a``.

    Computes ``||b - b a^T (a a^T)^-1 a||`` through an orthonormal basis of
    the row space. An empty ``a`` (zero rows) has the trivial row space.

    Raises:
        RankDeficientBase: If ``a`` does not have full row rank
    """
    vec = as_matrix(b, "row").ravel()
    base = np.asarray(a, dtype=np.float64)
    if base.size == 0:
        return float(np.linalg.norm(vec))

    base = as_matrix(base, "base")
    if base.shape[1] != vec.size:
        raise MatrixError(f"row of length {vec.size} does not match base width {base.shape[1]}")
    q = row_space_basis(base, tol)
    if q.shape[0] < base.shape[0]:
        raise RankDeficientBase(
            f"base has {base.shape[0]} rows but numeric rank {q.shape[0]}"
        )
    return float(np.linalg.norm(vec - (vec @ q.T) @ q))


def pinv_apply(a: ArrayLike, y: ArrayLike) -> Mat:
    """
    Least-squares solution Z of ``a Z = y`` for full-column-rank ``a``.

    Equivalent to ``(a^T a)^-1 a^T y`` without forming the normal equations.

    Raises:
        RankDeficient: If ``a`` lacks full column rank
        IllConditioned: If cond(a) exceeds 1e12
    """
    mat = as_matrix(a)
    rhs = np.asarray(y, dtype=np.float64)
    if rhs.ndim == 1:
        rhs = rhs.reshape(-1, 1)
    rhs = as_matrix(rhs, "rhs")
    if rhs.shape[0] != mat.shape[0]:
        raise MatrixError(f"row mismatch: a is {mat.shape}, y is {rhs.shape}")

    s = _singular_values(mat)
    if _rank_from_singular_values(s, mat.shape, None) < mat.shape[1]:
        raise RankDeficient(f"matrix of shape {mat.shape} lacks full column rank")
    cond = s[0] / s[-1]
    if cond > MAX_CONDITION:
        raise IllConditioned(f"condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")

    z, *_ = la.lstsq(mat, rhs)
    return z
