"""Small complex linear-algebra helpers used across the solvers.

All vectorizations are column-major (Fortran order), matching the identity
vec(B A C) = (C^T kron B) vec(A) used when assembling quadratic forms.
SVD/EVD wrappers fix the phase of each vector (first element of significant
magnitude made real-positive) so every decomposition-based design is
deterministic and reproducible.
"""

import warnings

import numpy as np

from .errors import InvalidInputError, NumericalError


def vec(A: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return A.reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return v.reshape(rows, cols, order="F")


def herm(A: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A^H)/2."""
    return 0.5 * (A + A.conj().T)


def is_hermitian(A: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = np.linalg.norm(A) + 1e-300
    return np.linalg.norm(A - A.conj().T) <= rtol * scale


def _fix_column_phases(U: np.ndarray) -> np.ndarray:
    """Return diag phases that make the dominant entry of each column real-positive."""
    n = U.shape[1]
    phases = np.ones(n, dtype=complex)
    for j in range(n):
        col = U[:, j]
        idx = int(np.argmax(np.abs(col)))
        pivot = col[idx]
        if np.abs(pivot) > 0:
            phases[j] = np.conj(pivot) / np.abs(pivot)
    return phases


def svd_fixed(A: np.ndarray, full_matrices: bool = False):
    """SVD A = U @ diag(s) @ Vh with deterministic phases.

    Every column of U gets a real-positive dominant entry; the leading
    min(A.shape) rows of Vh absorb the conjugate phases so the product is
    unchanged, and any extra rows of Vh (null-space directions) are
    phase-fixed independently.
    """
    U, s, Vh = np.linalg.svd(A, full_matrices=full_matrices)
    r = min(A.shape)
    ph = _fix_column_phases(U)
    U = U * ph[np.newaxis, :]
    Vh[:r] = Vh[:r] * np.conj(ph[:r, np.newaxis])
    if Vh.shape[0] > r:
        row_ph = _fix_column_phases(Vh[r:].T)
        Vh[r:] = Vh[r:] * row_ph[:, np.newaxis]
    return U, s, Vh


def eigh_desc(A: np.ndarray):
    """Hermitian eigendecomposition, eigenvalues descending, phase-fixed vectors."""
    vals, vecs = np.linalg.eigh(herm(A))
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = vecs * _fix_column_phases(vecs)[np.newaxis, :]
    return vals, vecs


def hermitian_sqrt(A: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Principal square root (or inverse square root) of a Hermitian PSD matrix.

    Eigenvalues below ``eps * max(eig)`` are treated as zero; the inverse root
    of a rank-deficient matrix falls back to the pseudo-inverse with a warning.
    """
    vals, vecs = np.linalg.eigh(herm(A))
    tol = max(A.shape) * np.finfo(float).eps * max(vals.max(initial=0.0), 0.0)
    vals = np.clip(vals, 0.0, None)
    if inverse:
        if np.any(vals <= tol):
            warnings.warn("rank-deficient Gram matrix: using pseudo-inverse square root",
                          RuntimeWarning, stacklevel=2)
        inv = np.where(vals > tol, 1.0 / np.sqrt(np.where(vals > tol, vals, 1.0)), 0.0)
        return (vecs * inv[np.newaxis, :]) @ vecs.conj().T
    return (vecs * np.sqrt(vals)[np.newaxis, :]) @ vecs.conj().T


def solve_hpd(A: np.ndarray, B: np.ndarray, reg_cond: float = 1e12,
              warn_context: str = "") -> np.ndarray:
    """Solve A X = B for Hermitian positive (semi)definite A.

    If A is conditioned worse than ``reg_cond`` it is regularized by
    ``1e-12 * tr(A)/n * I`` before solving (with a warning when
    ``warn_context`` is set); failure after that raises
    :class:`NumericalError`.
    """
    A = herm(A)
    n = A.shape[0]
    vals = np.linalg.eigvalsh(A)
    vmax = float(vals[-1])
    vmin = float(vals[0])
    if vmax <= 0:
        A = A + 1e-300 * np.eye(n)
    elif vmin <= 0 or vmax / max(vmin, 1e-300) > reg_cond:
        if warn_context:
            warnings.warn(f"regularized ill-conditioned system in {warn_context}",
                          RuntimeWarning, stacklevel=2)
        A = A + (1e-12 * np.trace(A).real / n) * np.eye(n)
    try:
        return np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NumericalError(f"singular {n}x{n} system after regularization") from exc


def logdet_hpd(A: np.ndarray) -> float:
    """log-determinant of a Hermitian positive definite matrix (natural log)."""
    sign, ld = np.linalg.slogdet(herm(A))
    if sign.real <= 0:
        raise NumericalError("matrix is not positive definite in logdet")
    return float(ld)


def require_hermitian(A: np.ndarray, rtol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {A.shape}")
    if not is_hermitian(A, rtol):
        raise InvalidInputError(f"{name} is not Hermitian within tolerance {rtol}")
    return herm(A)
