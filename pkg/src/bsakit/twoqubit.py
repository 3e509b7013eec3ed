"""Two-qubit tools: remainder expansions, projector splits and range families.

The remainder of a two-qubit BSA is a single entangled pure state. Writing
it as ``N1 |e1,f1> + N2 |e2,f2>`` and reweighting the two terms gives a
family of splittings of its projector; whether a splitting can improve the
decomposition depends on product vectors lying in the range of ``rho_s``
with their Alice-conjugate in the range of ``rho_s^TA``. For rank-3 PPT
``rho_s`` those vectors form a one-parameter family, built explicitly in
:func:`rank3_product_family`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.polynomial.polynomial as poly

from .errors import Degenerate, InternalError, InvalidInput, WrongRank
from .linalg import DEFAULT_RANK_TOL, psd_sqrt, range_kernel
from .states import QUBITS, DensityMatrix, ProductVector, partial_transpose, pure_state

__all__ = [
    "RemainderExpansion", "remainder_expansion", "projector_split", "RangeFamilyPoint",
    "rank3_product_family", "family_residuals", "Theorem3Report", "theorem3_check", "concurrence",
]

SCHMIDT_TOL = 1e-9
MAX_ENTANGLED_TOL = 1e-8
COND_LIMIT = 1e10
SIGMA_Y = np.array([[0, -1j], [1j, 0]])


def _require_qubits(rho: DensityMatrix):
    if not isinstance(rho, DensityMatrix) or (rho.m, rho.n) != (2, 2):
        raise InvalidInput("a 2x2 DensityMatrix is required")


def _perp(v):
    # unit vector orthogonal to a unit 2-vector
    return np.array([-np.conj(v[1]), np.conj(v[0])])


# -- remainder expansion ---------------------------------------------------------------


@dataclass
class RemainderExpansion:
    """``psi_e = n1 |e1,f1> + n2 |e2,f2>`` with real ``n1, n2 >= 0``."""

    n1: float
    n2: float
    e1: np.ndarray
    f1: np.ndarray
    e2: np.ndarray
    f2: np.ndarray

    def state(self) -> np.ndarray:
        return self.n1 * np.kron(self.e1, self.f1) + self.n2 * np.kron(self.e2, self.f2)

    def overlap(self) -> complex:
        """``<e1|e2><f1|f2>``."""
        return complex(np.vdot(self.e1, self.e2) * np.vdot(self.f1, self.f2))


def remainder_expansion(psi_e, e2, f2) -> RemainderExpansion:
    """Expand an entangled two-qubit state with one product term fixed.

    The partner factors come from contracting ``psi_e`` with the vectors
    orthogonal to ``e2`` and ``f2`` (the dual-basis vectors that annihilate the
    fixed term); the moduli follow from the normalization of ``f1`` and
    ``f2``. The phases of ``N1`` and ``N2`` are absorbed into ``f1`` and ``f2``.

    Raises
    ------
    Degenerate
        If ``psi_e`` is a product state or the chosen ``(e2, f2)`` leaves a
        zero coefficient.
    """
    psi = pure_state(psi_e)
    if psi.size != 4:
        raise InvalidInput("remainder_expansion works on two-qubit states")
    e2 = np.asarray(e2, complex) / np.linalg.norm(e2)
    f2 = np.asarray(f2, complex) / np.linalg.norm(f2)
    mat = psi.reshape(2, 2)
    if np.linalg.svd(mat, compute_uv=False)[1] <= SCHMIDT_TOL:
        raise Degenerate("psi_e is a product state; the expansion has a zero coefficient")
    he2, hf2 = _perp(e2), _perp(f2)
    g1 = he2.conj() @ mat  # <he2|psi>, a Bob vector, equals N1 <he2|e1> f1
    h1 = mat @ hf2.conj()  # <hf2|psi>, an Alice vector, proportional to e1
    if np.linalg.norm(g1) <= SCHMIDT_TOL or np.linalg.norm(h1) <= SCHMIDT_TOL:
        raise Degenerate("(e2, f2) annihilates the partner term")
    f1 = g1 / np.linalg.norm(g1)
    e1 = h1 / np.linalg.norm(h1)
    he1 = _perp(e1)
    if abs(np.vdot(he2, e1)) <= SCHMIDT_TOL or abs(np.vdot(he1, e2)) <= SCHMIDT_TOL:
        raise Degenerate("e1 and e2 are collinear")
    # complex coefficients by solving psi = c1 e1 f1 + c2 e2 f2 exactly
    basis = np.stack([np.kron(e1, f1), np.kron(e2, f2)], axis=1)
    c, *_ = np.linalg.lstsq(basis, psi, rcond=None)
    if np.linalg.norm(basis @ c - psi) > 1e-9:
        raise InternalError("expansion does not reconstruct psi_e")
    f1 = f1 * np.exp(1j * np.angle(c[0]))
    f2 = f2 * np.exp(1j * np.angle(c[1]))
    return RemainderExpansion(float(abs(c[0])), float(abs(c[1])), e1, f1, e2, f2)


def projector_split(exp: RemainderExpansion, alpha: float):
    """Rewrite ``P_psi`` as three weighted projectors for a reweighting ``alpha``.

    Returns ``[(N(alpha)^2, P_psi(alpha)), (N1^2 (1 - alpha^2), P_e1f1),
    (N2^2 (1 - 1/alpha^2), P_e2f2)]``. The last weight is negative for
    ``alpha < 1``; the sum reconstructs ``P_psi`` exactly.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise InvalidInput(f"alpha must lie in (0, 1], got {alpha}")
    a, b = np.kron(exp.e1, exp.f1), np.kron(exp.e2, exp.f2)
    n1, n2 = exp.n1, exp.n2
    norm2 = alpha**2 * n1**2 + n2**2 / alpha**2 + 2 * n1 * n2 * exp.overlap().real
    vec = (alpha * n1 * a + n2 / alpha * b) / np.sqrt(norm2)
    return [
        (float(norm2), np.outer(vec, vec.conj())),
        (float(n1**2 * (1 - alpha**2)), np.outer(a, a.conj())),
        (float(n2**2 * (1 - 1 / alpha**2)), np.outer(b, b.conj())),
    ]


# -- rank-3 product family -------------------------------------------------------------


@dataclass
class RangeFamilyPoint:
    """One member ``|e(delta), f(delta)>`` of the range family.

    ``z`` is the Alice coordinate ``e ~ (1, z)`` in the rotated Alice basis;
    it is ``None`` for the kernel branch, where ``pv`` is a product vector in
    the kernel of ``rho_s``.
    """

    delta: float
    z: complex | None
    pv: ProductVector
    in_kernel: bool = False


@dataclass
class _FamilyFrame:
    rot: np.ndarray  # Alice basis, columns
    sqrt_c: np.ndarray
    frame: np.ndarray  # Bob basis diagonalizing B^+B - BB^+
    b: np.ndarray  # rescaled B in that frame
    psi: np.ndarray
    kernel_pv: ProductVector | None = None


def _blocks(mat):
    t = np.asarray(mat).reshape(2, 2, 2, 2)
    return t[0, :, 0, :], t[0, :, 1, :], t[1, :, 0, :], t[1, :, 1, :]


def _det_poly(coeffs):
    # det of sum_k x^k M_k for 2x2 matrices, as ascending coefficients
    a, b, c, d = ([m[i, j] for m in coeffs] for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))
    return poly.polysub(poly.polymul(a, d), poly.polymul(b, c))


def _alice_rotation(mat):
    """Alice basis ``{(1, a), (-a*, 1)}/norm`` in which the off-diagonal block is singular."""
    r00, r01, r10, r11 = _blocks(mat)
    # with x = conj(a) the off-diagonal block is (r01 + x (r11 - r00) - x^2 r10) / (1 + |a|^2)
    coeffs = _det_poly([r01, r11 - r00, -r10])
    coeffs = np.trim_zeros(coeffs, "b")
    if coeffs.size <= 1:
        x = 0.0
    else:
        roots = np.roots(coeffs[::-1])
        x = roots[np.argmin(np.abs(roots))]
    a = np.conj(x)
    return np.array([[1, -np.conj(a)], [a, 1]]) / np.sqrt(1 + abs(a) ** 2)


def _frame(rho_s: DensityMatrix, rank_tol: float) -> _FamilyFrame:
    rot = _alice_rotation(rho_s.mat)
    w = np.kron(rot, np.eye(2))
    mat = w.conj().T @ rho_s.mat @ w
    a, b, _, c = _blocks(mat)
    for block, col in ((a, 0), (c, 1)):
        ev = np.linalg.eigvalsh(block)
        if ev[0] <= ev[-1] / COND_LIMIT:
            f = np.linalg.eigh(block)[1][:, 0]
            pv = ProductVector(rot[:, col], f)
            return _FamilyFrame(rot, np.eye(2), np.eye(2), b, np.zeros(2), pv)
    sc = psd_sqrt(c)
    s = np.linalg.inv(sc)
    a2, b2 = s @ a @ s, s @ b @ s
    # rank 3 makes the Schur complement a - b b^+ a rank-one projector lam |psi><psi|
    evals, evecs = np.linalg.eigh(a2 - b2 @ b2.conj().T)
    psi = evecs[:, -1]
    m = b2.conj().T @ b2 - b2 @ b2.conj().T
    _, frame = np.linalg.eigh(m)
    frame = frame[:, ::-1]
    return _FamilyFrame(rot, sc, frame, frame.conj().T @ b2 @ frame, frame.conj().T @ psi)


def family_residuals(rho_s: DensityMatrix, pv: ProductVector, rank_tol: float = DEFAULT_RANK_TOL):
    """Kernel components of ``|e,f>`` for ``rho_s`` and of ``|e*,f>`` for ``rho_s^TA``."""
    _, k1 = range_kernel(rho_s.mat, rank_tol)
    _, k2 = range_kernel(partial_transpose(rho_s), rank_tol)
    r1 = float(np.linalg.norm(k1.basis.conj().T @ pv.vector())) if k1.rank else 0.0
    r2 = float(np.linalg.norm(k2.basis.conj().T @ pv.conj_alice().vector())) if k2.rank else 0.0
    return r1, r2


def _check_rank3(rho_s, rank_tol):
    r1 = range_kernel(rho_s.mat, rank_tol)[0].rank
    r2 = range_kernel(partial_transpose(rho_s), rank_tol)[0].rank
    if r1 != 3 or r2 != 3:
        raise WrongRank(f"need rank 3 for rho_s and its partial transpose, got {r1} and {r2}")


def rank3_product_family(rho_s: DensityMatrix, delta: float, rank_tol: float = DEFAULT_RANK_TOL,
                         _frame_cache=None) -> RangeFamilyPoint:
    """Product vector ``|e(delta), f(delta)>`` in the range of a rank-3 two-qubit PPT state.

    Steps: rotate Alice's basis so the off-diagonal block ``B`` is singular;
    rescale Bob by ``C^(-1/2)`` so the lower block is the identity; read
    ``|psi>`` off the rank-one Schur complement ``A - B B^+``; in the Bob frame
    diagonalizing ``B^+ B - B B^+`` solve ``(e^{i delta}, -1) (1 - zB)^-1 |psi> = 0``
    for ``z`` and undo the rescaling. Eliminating the inverse through the
    adjugate makes the equation linear in ``z``, so each ``delta`` has one
    solution.

    Raises
    ------
    WrongRank
        Unless both ``rho_s`` and its partial transpose have rank 3.
    """
    _require_qubits(rho_s)
    _check_rank3(rho_s, rank_tol)
    fr = _frame_cache or _frame(rho_s, rank_tol)
    if fr.kernel_pv is not None:
        return RangeFamilyPoint(float(delta), None, fr.kernel_pv, in_kernel=True)
    b, psi = fr.b, fr.psi
    adj = np.array([[b[1, 1], -b[0, 1]], [-b[1, 0], b[0, 0]]])
    row = np.array([np.exp(1j * delta), -1.0])
    num, den = row @ psi, row @ adj @ psi
    if abs(den) <= 1e-14 * max(1.0, abs(num)):
        raise Degenerate(f"family equation has no finite solution at delta={delta}")
    z = num / den
    v = np.linalg.solve(np.eye(2) - z * b, psi)
    f = fr.sqrt_c @ (fr.frame @ v)
    e = fr.rot @ np.array([1.0, z])
    return RangeFamilyPoint(float(delta), complex(z), ProductVector(e, f))


def family_points(rho_s: DensityMatrix, count: int, rank_tol: float = DEFAULT_RANK_TOL):
    """``count`` family points on a uniform ``delta`` grid of ``[0, 2 pi)``."""
    _require_qubits(rho_s)
    _check_rank3(rho_s, rank_tol)
    fr = _frame(rho_s, rank_tol)
    out = []
    for d in 2 * np.pi * np.arange(count) / count:
        try:
            out.append(rank3_product_family(rho_s, d, rank_tol, fr))
        except Degenerate:
            continue
    return out


# -- optimality condition for the two-qubit remainder --------------------------------


@dataclass
class Theorem3Report:
    """Outcome of the remainder-entanglement condition check.

    ``min_ratio`` and ``max_ratio`` are the extremes of ``N1/N2`` over the
    family points used as ``(e2, f2)``; no inequality direction is enforced.
    ``n1_greater`` and ``n2_greater`` count the points on each side of 1.
    """

    max_entangled: bool
    rank: int
    pt_rank: int
    rank_condition_violated: bool = False
    min_ratio: float | None = None
    max_ratio: float | None = None
    points: int = 0
    n1_greater: int = 0
    n2_greater: int = 0
    ratios: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def theorem3_check(rho_s: DensityMatrix, psi_e, delta_grid: int = 64,
                   rank_tol: float = DEFAULT_RANK_TOL, schmidt_tol: float = MAX_ENTANGLED_TOL) -> Theorem3Report:
    """Check the necessary condition on a two-qubit BSA ``(rho_s, psi_e)``.

    A maximally entangled ``psi_e`` passes outright. Otherwise ``rho_s`` must
    have rank 3; for each family point ``(e2, f2)`` the expansion of ``psi_e``
    is computed and the ratio ``N1/N2`` recorded.

    For solver output pass ``schmidt_tol`` and ``rank_tol`` at the solver's
    accuracy: the remainder vector is only accurate to about the square
    root of the weight accuracy.
    """
    _require_qubits(rho_s)
    psi = pure_state(psi_e)
    sv = np.linalg.svd(psi.reshape(2, 2), compute_uv=False)
    rank = range_kernel(rho_s.mat, rank_tol)[0].rank
    pt_rank = range_kernel(partial_transpose(rho_s), rank_tol)[0].rank
    rep = Theorem3Report(bool(abs(sv[0] - sv[1]) <= schmidt_tol), rank, pt_rank)
    if rep.max_entangled:
        return rep
    if rank != 3:
        rep.rank_condition_violated = True
        return rep
    if pt_rank != 3:
        return rep
    ratios = []
    for pt in family_points(rho_s, delta_grid, rank_tol):
        try:
            exp = remainder_expansion(psi, pt.pv.e, pt.pv.f)
        except Degenerate:
            continue
        ratios.append(exp.n1 / exp.n2)
    rep.points = len(ratios)
    rep.ratios = [float(r) for r in ratios]
    rep.n1_greater = sum(r > 1.0 for r in ratios)
    rep.n2_greater = sum(r < 1.0 for r in ratios)
    if ratios:
        rep.min_ratio, rep.max_ratio = float(min(ratios)), float(max(ratios))
    return rep


def concurrence(rho: DensityMatrix) -> float:
    """Two-qubit concurrence from the spin-flipped state."""
    _require_qubits(rho)
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    r = rho.mat @ yy @ rho.mat.conj() @ yy
    mu = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0.0, None))
    return float(max(0.0, mu[0] - mu[1] - mu[2] - mu[3]))
