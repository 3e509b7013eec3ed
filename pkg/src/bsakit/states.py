"""Bipartite states, partial transposition and standard state families.

Vectors on ``C^m (x) C^n`` use the Kronecker ordering ``index = i_A * n + i_B``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .linalg import as_hermitian, min_eigenvalue

TRACE_TOL = 1e-10
NORM_TOL = 1e-12


@dataclass(frozen=True)
class BipartiteDims:
    m: int
    n: int

    def __post_init__(self):
        if int(self.m) < 2 or int(self.n) < 2:
            raise InvalidInput(f"local dimensions must be >= 2, got {self.m}x{self.n}")

    @property
    def total(self) -> int:
        return self.m * self.n


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive semidefinite matrix on an ``m x n`` bipartite space.

    Hermiticity is enforced by symmetrization; trace and positivity are
    checked and reported by name when violated.
    """

    mat: np.ndarray
    dims: BipartiteDims
    tol: float = 1e-9

    def __post_init__(self):
        if not isinstance(self.dims, BipartiteDims):
            object.__setattr__(self, "dims", BipartiteDims(*self.dims))
        a = as_hermitian(self.mat, "density matrix")
        if a.shape[0] != self.dims.total:
            raise InvalidInput(
                f"dimension mismatch: matrix is {a.shape[0]}x{a.shape[0]} but dims are "
                f"{self.dims.m}x{self.dims.n}"
            )
        tr = np.trace(a).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidInput(f"trace invariant violated: Tr = {tr:.12g}")
        lo = min_eigenvalue(a)
        if lo < -self.tol * max(1.0, np.linalg.norm(a)):
            raise InvalidInput(f"positivity invariant violated: min eigenvalue {lo:.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "mat", a)

    @classmethod
    def from_operator(cls, op, dims, tol: float = 1e-9) -> "DensityMatrix":
        """Normalize a nonzero PSD operator to unit trace."""
        a = as_hermitian(op)
        tr = np.trace(a).real
        if tr <= 0:
            raise InvalidInput("operator has non-positive trace")
        return cls(a / tr, dims, tol)

    @property
    def m(self) -> int:
        return self.dims.m

    @property
    def n(self) -> int:
        return self.dims.n

    @property
    def dim(self) -> int:
        return self.dims.total

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def _unit(v, name):
    v = np.asarray(v, dtype=complex).ravel()
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm == 0:
        raise InvalidInput(f"{name} must be a nonzero finite vector")
    return v / nrm


def _fix_phase(v):
    nz = np.flatnonzero(np.abs(v) > 1e-14)
    if nz.size == 0:
        return v
    p = v[nz[0]]
    return v * (abs(p) / p)


@dataclass(frozen=True)
class ProductVector:
    """Normalized pair ``(e, f)`` standing for ``|e, f>``.

    Inputs are normalized and phase-fixed so the first nonzero component of
    each factor is real and nonnegative.
    """

    e: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        e = _fix_phase(_unit(self.e, "e"))
        f = _fix_phase(_unit(self.f, "f"))
        e.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "f", f)

    @property
    def dims(self) -> BipartiteDims:
        return BipartiteDims(self.e.size, self.f.size)

    def vector(self) -> np.ndarray:
        return np.kron(self.e, self.f)

    def conj_alice(self) -> "ProductVector":
        """The vector ``|e*, f>`` (Alice factor conjugated)."""
        return ProductVector(self.e.conj(), self.f)

    def projector(self) -> np.ndarray:
        v = self.vector()
        return np.outer(v, v.conj())


def product_state(pv: ProductVector) -> np.ndarray:
    """State vector ``e (x) f``."""
    return pv.vector()


def pure_state(psi) -> np.ndarray:
    """Validate a normalized state vector (tolerance 1e-12)."""
    v = np.asarray(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
        raise InvalidInput(f"state vector not normalized (norm {np.linalg.norm(v):.15g})")
    return v


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    return np.outer(v, v.conj())


def _split_dims(op, dims):
    if dims is None:
        dims = getattr(op, "dims", None)
    if dims is None:
        raise InvalidInput("bipartite dims are required")
    if not isinstance(dims, BipartiteDims):
        dims = BipartiteDims(*dims)
    return dims


def partial_transpose(rho, side: str = "A", dims=None) -> np.ndarray:
    """Partial transpose on Alice (``"A"``) or Bob (``"B"``).

    Alice rule: ``<m,mu| rho^TA |n,nu> = <n,mu| rho |m,nu>``. Accepts a
    ``DensityMatrix`` or a raw operator together with ``dims``.
    """
    dims = _split_dims(rho, dims)
    a = np.asarray(getattr(rho, "mat", rho), dtype=complex)
    t = a.reshape(dims.m, dims.n, dims.m, dims.n)
    if side == "A":
        t = t.transpose(2, 1, 0, 3)
    elif side == "B":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise InvalidInput(f"side must be 'A' or 'B', got {side!r}")
    return t.reshape(dims.total, dims.total)


def is_ppt(rho: DensityMatrix, tol: float | None = None) -> bool:
    """Peres test: is the Alice partial transpose positive semidefinite?"""
    tol = rho.tol if tol is None else tol
    pt = partial_transpose(rho, "A")
    return min_eigenvalue(pt) >= -tol * max(1.0, np.linalg.norm(pt))


# -- standard families ------------------------------------------------------

SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
QUBITS = BipartiteDims(2, 2)


def werner(p: float) -> DensityMatrix:
    """``p * P_{psi-} + (1 - p) * I / 4``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInput(f"Werner parameter must lie in [0, 1], got {p}")
    return DensityMatrix(p * projector(SINGLET) + (1 - p) * np.eye(4) / 4, QUBITS)


def bell_state() -> DensityMatrix:
    return DensityMatrix(projector(SINGLET), QUBITS)


def pure_density(psi, dims) -> DensityMatrix:
    v = _unit(psi, "psi")
    return DensityMatrix(projector(v), dims)


def random_density(dims, rank: int, seed: int) -> DensityMatrix:
    """Gaussian-induced random state ``G G^dag / Tr(G G^dag)`` with ``G`` of shape ``(mn, rank)``."""
    dims = dims if isinstance(dims, BipartiteDims) else BipartiteDims(*dims)
    d = dims.total
    if not 1 <= rank <= d:
        raise InvalidInput(f"rank must be in [1, {d}], got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    w = g @ g.conj().T
    return DensityMatrix(w / np.trace(w).real, dims)


def _random_unit(rng, k):
    v = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return v / np.linalg.norm(v)


def random_product_vector(dims, seed) -> ProductVector:
    """Haar-random ``|e, f>``; ``seed`` may be an int or a ``numpy`` Generator."""
    dims = dims if isinstance(dims, BipartiteDims) else BipartiteDims(*dims)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ProductVector(_random_unit(rng, dims.m), _random_unit(rng, dims.n))


def random_unitary(k: int, rng) -> np.ndarray:
    """Haar unitary via QR of a complex Ginibre matrix."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def separable_mixture(weights, vectors, dims) -> DensityMatrix:
    """Normalized mixture of product projectors."""
    op = sum(w * pv.projector() for w, pv in zip(weights, vectors))
    return DensityMatrix.from_operator(op, dims)


def schmidt_coefficients(psi, dims) -> np.ndarray:
    """Singular values of the ``m x n`` reshaping, descending."""
    dims = dims if isinstance(dims, BipartiteDims) else BipartiteDims(*dims)
    v = pure_state(psi)
    return np.linalg.svd(v.reshape(dims.m, dims.n), compute_uv=False)


def leading_product(psi, dims) -> ProductVector:
    """Closest product vector to ``psi`` (leading Schmidt term)."""
    dims = dims if isinstance(dims, BipartiteDims) else BipartiteDims(*dims)
    u, s, vh = np.linalg.svd(np.asarray(psi, dtype=complex).reshape(dims.m, dims.n))
    return ProductVector(u[:, 0], vh[0])


def local_unitary(rho: DensityMatrix, u_a, u_b) -> DensityMatrix:
    u = np.kron(u_a, u_b)
    return DensityMatrix(u @ rho.mat @ u.conj().T, rho.dims, rho.tol)
