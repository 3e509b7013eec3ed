"""Dense Hermitian linear algebra used by every other module.

All routines take plain ``numpy`` arrays. Numerical rank is always decided
relative to the largest eigenvalue magnitude, ``|lam| > rank_tol * max|lam|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPositive

DEFAULT_RANK_TOL = 1e-9
HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues in ascending order and matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis (as columns) of a subspace of ``C^dim_ambient``."""

    dim_ambient: int
    basis: np.ndarray
    tol_used: float

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def residual(self, vec) -> float:
        """Norm of the component of ``vec`` inside this subspace."""
        if self.rank == 0:
            return 0.0
        return float(np.linalg.norm(self.basis.conj().T @ np.asarray(vec)))


def as_hermitian(h, name: str = "matrix") -> np.ndarray:
    """Return ``h`` as a complex square array, symmetrized.

    Raises ``InvalidInput`` for non-square or non-finite input, or when the
    anti-Hermitian part exceeds ``HERMITICITY_TOL`` relative to the norm.
    """
    a = np.asarray(getattr(h, "mat", h), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    skew = np.linalg.norm(a - a.conj().T)
    if skew > HERMITICITY_TOL * max(1.0, np.linalg.norm(a)):
        raise InvalidInput(f"{name} violates hermiticity (|H - H^dag| = {skew:.3e})")
    return 0.5 * (a + a.conj().T)


def _canonical_phase(u: np.ndarray) -> np.ndarray:
    # rotate every column so its largest-magnitude entry is real and >= 0
    idx = np.argmax(np.abs(u), axis=0)
    pivots = u[idx, np.arange(u.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.where(pivots == 0, 1, np.abs(pivots)), 1.0)
    return u / phases


def hermitian_eig(h) -> EigDecomposition:
    """Eigendecomposition with ascending eigenvalues and canonical phases."""
    a = as_hermitian(h)
    w, u = np.linalg.eigh(a)
    return EigDecomposition(w, _canonical_phase(u))


def range_kernel(h, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[SubspaceBasis, SubspaceBasis]:
    """Split ``C^d`` into the numerical range and kernel of ``h``.

    An eigenvalue counts towards the range iff ``|lam| > rank_tol * max|lam|``.
    The zero matrix has an empty range and a full kernel.
    """
    if rank_tol <= 0:
        raise InvalidInput("rank_tol must be positive")
    dec = hermitian_eig(h)
    w, u = dec.eigenvalues, dec.eigenvectors
    scale = np.max(np.abs(w)) if w.size else 0.0
    mask = np.abs(w) > rank_tol * scale if scale > 0 else np.zeros(w.shape, bool)
    d = u.shape[0]
    return (SubspaceBasis(d, u[:, mask], rank_tol), SubspaceBasis(d, u[:, ~mask], rank_tol))


def pinv_on_range(h, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a positive semidefinite ``h``.

    Raises ``NotPositive`` if an eigenvalue lies below ``-rank_tol * max|lam|``.
    """
    dec = hermitian_eig(h)
    w, u = dec.eigenvalues, dec.eigenvectors
    scale = np.max(np.abs(w)) if w.size else 0.0
    if scale == 0:
        return np.zeros_like(u)
    if w[0] < -rank_tol * scale:
        raise NotPositive(f"matrix has negative eigenvalue {w[0]:.3e}")
    keep = w > rank_tol * scale
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    out = (u * inv) @ u.conj().T
    return 0.5 * (out + out.conj().T)


def min_eigenvalue(h) -> float:
    return float(np.linalg.eigvalsh(as_hermitian(h))[0])


def is_psd(h, tol: float = 1e-9) -> bool:
    """True iff the smallest eigenvalue is at least ``-tol * max(1, ||h||_F)``."""
    a = as_hermitian(h)
    return min_eigenvalue(a) >= -tol * max(1.0, np.linalg.norm(a))


def psd_sqrt(h) -> np.ndarray:
    """Principal square root of a PSD matrix (negative noise clipped)."""
    w, u = np.linalg.eigh(as_hermitian(h))
    return (u * np.sqrt(np.clip(w, 0, None))) @ u.conj().T


def trace_norm(h) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(as_hermitian(h)))))
