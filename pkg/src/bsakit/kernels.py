"""Closed-form subtraction kernels: single and pair maximal weights.

All kernels accept a raw (possibly unnormalized) PSD operator or a
``DensityMatrix``. Range membership of a vector is decided by the norm of its
projection onto the numerical kernel, compared against ``rank_tol``.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidInput, RangeViolation
from .linalg import DEFAULT_RANK_TOL, as_hermitian
from .states import pure_state

log = logging.getLogger(__name__)

POSITIVITY_TOL = 1e-9
COLLINEAR_TOL = 1e-12


class RangeInverse:
    """Spectral data of a PSD operator: range basis, inverse eigenvalues, kernel basis."""

    def __init__(self, op, rank_tol: float = DEFAULT_RANK_TOL):
        a = as_hermitian(op)
        w, u = np.linalg.eigh(a)
        scale = np.max(np.abs(w)) if w.size else 0.0
        keep = w > rank_tol * scale if scale > 0 else np.zeros(w.shape, bool)
        self.op = a
        self.rank_tol = rank_tol
        self.scale = scale
        self.range = u[:, keep]
        self.inv_evals = 1.0 / w[keep]
        self.kernel = u[:, ~keep]
        self.min_eig = float(w[0]) if w.size else 0.0

    def kernel_residual(self, psi) -> float:
        if self.kernel.shape[1] == 0:
            return 0.0
        return float(np.linalg.norm(self.kernel.conj().T @ psi))

    def in_range(self, psi) -> bool:
        return self.range.shape[1] > 0 and self.kernel_residual(psi) <= self.rank_tol

    def coords(self, psi) -> np.ndarray:
        return self.range.conj().T @ psi

    def form(self, psi, phi=None) -> complex:
        """``<psi| op^+ |phi>``."""
        x = self.coords(psi)
        y = x if phi is None else self.coords(phi)
        return complex(np.vdot(x, self.inv_evals * y))


def _subtract(op, pairs) -> np.ndarray:
    out = np.array(op, dtype=complex)
    for lam, psi in pairs:
        if lam:
            out -= lam * np.outer(psi, psi.conj())
    return out


def psd_margin(op) -> float:
    """Smallest eigenvalue relative to ``max(1, ||op||_F)``."""
    a = 0.5 * (op + op.conj().T)
    return float(np.linalg.eigvalsh(a)[0]) / max(1.0, np.linalg.norm(a))


def max_lambda(rho, psi, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Largest ``lam`` with ``rho - lam |psi><psi|`` still PSD.

    Zero when ``psi`` has a kernel component above ``rank_tol``; otherwise
    ``1 / <psi| rho^+ |psi>``.
    """
    psi = pure_state(psi)
    return _max_lambda(RangeInverse(rho, rank_tol), psi)


def _max_lambda(ri: RangeInverse, psi) -> float:
    if not ri.in_range(psi):
        return 0.0
    d = ri.form(psi).real
    return 1.0 / d if d > 0 else 0.0


def pair_max(rho, psi1, psi2, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[float, float]:
    """Maximal pair ``(lam1, lam2)`` for subtracting two projectors jointly.

    Returns the pair maximizing ``lam1 + lam2`` subject to
    ``rho - lam1 P1 - lam2 P2 >= 0``. The closed forms branch on range
    membership and on how the cross term ``|<psi1|rho^+|psi2>|`` compares to
    the diagonal entries; the result is checked for positivity afterwards and
    replaced by a bounded one-dimensional search if the check fails.
    """
    lam1, lam2, _ = pair_max_case(rho, psi1, psi2, rank_tol)
    return lam1, lam2


def pair_max_case(rho, psi1, psi2, rank_tol: float = DEFAULT_RANK_TOL):
    """Like :func:`pair_max` but also return the branch label ``"a"``..``"e"`` (or ``"numeric"``)."""
    psi1 = pure_state(psi1)
    psi2 = pure_state(psi2)
    if abs(np.vdot(psi1, psi2)) > 1.0 - COLLINEAR_TOL:
        raise InvalidInput("pair_max needs non-collinear vectors; use max_lambda")
    ri = RangeInverse(rho, rank_tol)
    return _pair_max(ri, psi1, psi2)


def _pair_closed_form(ri: RangeInverse, psi1, psi2):
    in1, in2 = ri.in_range(psi1), ri.in_range(psi2)
    if not in1 and not in2:
        return 0.0, 0.0, "a"
    if not in1:
        return 0.0, 1.0 / ri.form(psi2).real, "b"
    if not in2:
        return 1.0 / ri.form(psi1).real, 0.0, "b"
    d1 = ri.form(psi1).real
    d2 = ri.form(psi2).real
    c = abs(ri.form(psi1, psi2))
    if c <= 1e-13 * max(d1, d2):
        # orthogonal in the rho^+ metric: each weight is the reciprocal diagonal entry
        return 1.0 / d1, 1.0 / d2, "c"
    if d1 > c and d2 > c:
        det = d1 * d2 - c * c
        return (d2 - c) / det, (d1 - c) / det, "d"
    # one diagonal entry is dominated by the cross term: only that vector is worth using
    if d2 <= c:
        return 0.0, 1.0 / d2, "e"
    return 1.0 / d1, 0.0, "e"


def _pair_max(ri: RangeInverse, psi1, psi2, tol: float = POSITIVITY_TOL):
    lam1, lam2, case = _pair_closed_form(ri, psi1, psi2)
    if case == "c" and log.isEnabledFor(logging.DEBUG):
        literal = (1.0 / lam1, 1.0 / lam2)
        ok = psd_margin(_subtract(ri.op, [(literal[0], psi1), (literal[1], psi2)])) >= -tol
        log.debug("orthogonal pair: literal weights %s %s the positivity check; using reciprocals",
                  literal, "pass" if ok else "fail")
    if psd_margin(_subtract(ri.op, [(lam1, psi1), (lam2, psi2)])) >= -tol:
        return lam1, lam2, case
    log.debug("pair closed form (case %s) failed positivity; using bounded search", case)
    lam1, lam2 = _pair_numeric(ri, psi1, psi2)
    return lam1, lam2, "numeric"


def _pair_numeric(ri: RangeInverse, psi1, psi2):
    top = _max_lambda(ri, psi1)
    if top == 0.0:
        return 0.0, _max_lambda(ri, psi2)
    p1 = np.outer(psi1, psi1.conj())

    def second(l1):
        return _max_lambda(RangeInverse(ri.op - l1 * p1, ri.rank_tol), psi2)

    res = minimize_scalar(lambda l1: -(l1 + second(l1)), bounds=(0.0, top), method="bounded",
                          options={"xatol": 1e-13 * max(1.0, top)})
    best = max([(0.0, second(0.0)), (top, 0.0), (res.x, second(res.x))], key=sum)
    return float(best[0]), float(best[1])


def gram_matrix(rho, vectors, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Matrix of ``<psi_i| rho^+ |psi_j>``; every vector must lie in the range."""
    ri = RangeInverse(rho, rank_tol)
    vecs = [pure_state(v) for v in vectors]
    for i, v in enumerate(vecs):
        if not ri.in_range(v):
            raise RangeViolation(f"vector {i} lies outside the range", index=i)
    x = np.stack([ri.coords(v) for v in vecs], axis=1)
    g = x.conj().T @ (ri.inv_evals[:, None] * x)
    return 0.5 * (g + g.conj().T)


def manifold_residual(d, lambdas) -> float:
    """``det(I - D diag(lambdas))``; zero exactly on the boundary manifold.

    Equal to the alternating sum of principal minors
    ``1 - sum lam_i D_i + sum lam_i lam_j D_ij - ...``.
    """
    d = np.asarray(d, dtype=complex)
    lam = np.asarray(lambdas, dtype=float).ravel()
    if d.shape != (lam.size, lam.size):
        raise InvalidInput(f"Gram matrix shape {d.shape} does not match {lam.size} weights")
    return float(np.linalg.det(np.eye(lam.size) - d * lam[None, :]).real)
