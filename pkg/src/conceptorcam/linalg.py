"""Dense linear-algebra substrate for conceptor learning.

Everything here operates on float64 numpy arrays and is pure: inputs are
validated, never mutated, and identical inputs give bit-identical outputs.
The four primitives are column correlation, ridge-regularized inverse
application, a truncated Moore-Penrose pseudo-inverse, and symmetric
spectra, plus the squared Frobenius norm used by the loss functions.
"""

import numpy as np
import scipy.linalg

# Largest tolerated elementwise asymmetry before a matrix is rejected.
SYMMETRY_TOL = 1e-8

# Singular values below this fraction of the largest are truncated to zero.
PINV_RELATIVE_CUTOFF = 1e-10


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Return ``values`` as a finite, non-empty 2-D float64 array.

    Raises ValueError on wrong rank, empty axes, or non-finite entries.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Return ``values`` as a finite, non-empty 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def require_symmetric(matrix: np.ndarray, tol: float = SYMMETRY_TOL,
                      name: str = "matrix") -> None:
    """Raise ValueError unless ``matrix`` is square and symmetric within ``tol``."""
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got shape {matrix.shape}")
    drift = float(np.max(np.abs(matrix - matrix.T)))
    if drift > tol:
        raise ValueError(f"{name} is not symmetric: max |A - A.T| = {drift:.3e}")


def correlation(evidence) -> np.ndarray:
    """Average outer-product correlation of the columns of ``evidence``.

    For an M-by-K matrix whose columns are state snapshots this returns
    (1/K) * Z @ Z.T, explicitly symmetrized so downstream symmetry checks
    never trip on accumulation order. The result is positive semidefinite.
    """
    z = as_matrix(evidence, "evidence")
    k = z.shape[1]
    r = z @ z.T / k
    return (r + r.T) / 2.0


def ridge_inverse_apply(matrix, alpha: float) -> np.ndarray:
    """Return ``R @ inv(R + alpha**-2 * I)`` without forming the inverse.

    ``matrix`` must be symmetric positive semidefinite within tolerance and
    ``alpha`` strictly positive, which makes the ridge term positive definite.
    Solved via a Cholesky factorization of the ridge matrix; the symmetrized
    solution is returned. Eigenvalues map as sigma -> sigma / (sigma + alpha**-2),
    so the result always has spectrum inside [0, 1).
    """
    r = as_matrix(matrix, "matrix")
    require_symmetric(r)
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValueError(f"alpha must be a positive real, got {alpha!r}")
    ridge = r + alpha ** -2.0 * np.eye(r.shape[0])
    try:
        solved = scipy.linalg.solve(ridge, r, assume_a="pos")
    except scipy.linalg.LinAlgError as err:
        # Unreachable for genuinely PSD input; signals a corrupted matrix.
        raise ValueError(f"ridge factorization failed: {err}") from err
    # inv(ridge) and r commute, so the exact product is symmetric; restore
    # that exactly under floating point.
    return (solved + solved.T) / 2.0


def pseudo_inverse(matrix) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with relative singular-value truncation.

    Computed from the SVD; singular values below PINV_RELATIVE_CUTOFF times
    the largest are treated as exact zeros. Total on finite matrices: the
    zero matrix maps to the zero matrix of transposed shape.
    """
    a = as_matrix(matrix, "matrix")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[0] <= 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    recip = np.zeros_like(s)
    keep = s >= PINV_RELATIVE_CUTOFF * s[0]
    recip[keep] = 1.0 / s[keep]
    return (vt.T * recip) @ u.T


def sym_eigenvalues(matrix) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in ascending order."""
    a = as_matrix(matrix, "matrix")
    require_symmetric(a)
    return scipy.linalg.eigvalsh(a)


def frobenius_sq(matrix) -> float:
    """Squared Frobenius norm: the sum of squared entries."""
    a = as_matrix(matrix, "matrix")
    return float(np.sum(a * a))
