"""The entanglement measure ``E = 1 - lam`` and checks of its defining properties.

Local measurements are products ``V_i = a_i (x) b_i``. A decomposition of
``rho`` can be pushed through an outcome without re-solving: the separable
part maps to a separable part of the post-measurement state, which bounds
the outcome's optimal weight from below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .bsa import (BsaDecomposition, SolverOptions, WeightedProductSet, _as_state, bsa_solve,
                  verify_optimality)
from .errors import InternalError, InvalidInput
from .linalg import psd_sqrt
from .states import BipartiteDims, DensityMatrix, ProductVector, local_unitary

__all__ = [
    "bsa_entanglement", "LocalPovm", "random_local_povm", "MonotonicityReport",
    "povm_monotonicity_check", "pushed_through", "local_unitary_invariance_check",
]

COMPLETENESS_TOL = 1e-9
SKIP_PROB = 1e-10
IDENTITY_TOL = 1e-8
SOFT_SLACK = -1e-3
STRUCTURAL_SLACK = -0.05


def bsa_entanglement(rho: DensityMatrix, opts: SolverOptions | None = None) -> float:
    """``1 - lam`` of the solved decomposition: an upper bound on the exact value."""
    return float(min(1.0, max(0.0, 1.0 - bsa_solve(rho, opts).lam)))


class LocalPovm:
    """Local measurement with outcomes ``V_i = a_i (x) b_i``.

    Completeness ``sum_i a_i a_i^+ (x) b_i b_i^+ = I`` is checked on
    construction, and so is trace preservation ``sum_i V_i^+ V_i = I``; the
    two coincide for normal factors such as the square-root effects built by
    :func:`random_local_povm`.
    """

    def __init__(self, elements):
        self.elements = [(np.asarray(a, complex), np.asarray(b, complex)) for a, b in elements]
        if not self.elements:
            raise InvalidInput("a POVM needs at least one element")
        m, n = self.elements[0][0].shape[0], self.elements[0][1].shape[0]
        for a, b in self.elements:
            if a.shape != (m, m) or b.shape != (n, n):
                raise InvalidInput("POVM elements must be square with consistent local dimensions")
        self.dims = BipartiteDims(m, n)
        for name, res in (("completeness", self.completeness_residual()),
                          ("trace preservation", self._residual(lambda x: x.conj().T @ x))):
            if res > COMPLETENESS_TOL:
                raise InvalidInput(f"{name} invariant violated: residual {res:.3e}")

    def _residual(self, sq) -> float:
        total = sum(np.kron(sq(a), sq(b)) for a, b in self.elements)
        return float(np.linalg.norm(total - np.eye(self.dims.total)))

    def completeness_residual(self) -> float:
        return self._residual(lambda x: x @ x.conj().T)

    def __len__(self) -> int:
        return len(self.elements)

    def kraus(self, i: int) -> np.ndarray:
        a, b = self.elements[i]
        return np.kron(a, b)


def _random_effects(rng, dim: int, count: int) -> list[np.ndarray]:
    # random PSD operators rescaled by the inverse square root of their sum
    gs = []
    for _ in range(count):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gs.append(g @ g.conj().T)
    s = np.linalg.inv(psd_sqrt(sum(gs)))
    return [psd_sqrt(s @ g @ s) for g in gs]


def random_local_povm(dims: BipartiteDims, k: int, seed: int) -> LocalPovm:
    """Seeded random ``k``-outcome local measurement.

    Alice's outcomes form a random POVM; each Alice outcome is paired with
    its own random Bob POVM, so completeness holds exactly. Factors are the
    square roots of the effects.
    """
    if int(k) < 1:
        raise InvalidInput("k must be at least 1")
    rng = np.random.default_rng(seed)
    k = int(k)
    n_alice = (k + 1) // 2
    counts = [k // n_alice + (1 if j < k % n_alice else 0) for j in range(n_alice)]
    elements = []
    for a, c in zip(_random_effects(rng, dims.m, n_alice), counts):
        for b in _random_effects(rng, dims.n, c):
            elements.append((a, b))
    return LocalPovm(elements)


@dataclass
class MonotonicityReport:
    """``lhs = E(rho)`` against ``rhs = sum_i p_i E(rho_i)``; ``slack = lhs - rhs``.

    ``identity_residual`` measures ``1 - lam = sum_i p_i (1 - lam_i)`` for the
    weights ``lam_i`` of the pushed-through decomposition, which holds exactly.
    """

    lhs: float
    rhs: float
    outcome_measures: list
    slack: float
    identity_residual: float = 0.0
    pushed_lambdas: list = field(default_factory=list)
    pushed_feasible: bool = True
    skipped: int = 0

    @property
    def within_tolerance(self) -> bool:
        return self.slack >= SOFT_SLACK

    @property
    def structural_violation(self) -> bool:
        return self.slack < STRUCTURAL_SLACK

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items()}
        out["outcome_measures"] = [[float(p), float(e)] for p, e in self.outcome_measures]
        out.update(within_tolerance=self.within_tolerance, structural_violation=self.structural_violation)
        return out


def pushed_through(dec: BsaDecomposition, rho: DensityMatrix, a, b):
    """Push a decomposition through the outcome ``a (x) b``.

    Returns ``(p, lam_i, e, f, w)``: the outcome probability, the pushed
    weight ``lam * Tr(V rho_s V^+) / p`` and the transformed product vectors
    with their weights in the post-measurement state.
    """
    v = np.kron(a, b)
    p = float(np.real(np.trace(v @ rho.mat @ v.conj().T)))
    es, fs, ws = [], [], []
    for w, pv in dec.weights:
        ea, fb = a @ pv.e, b @ pv.f
        mass = float(np.linalg.norm(ea) ** 2 * np.linalg.norm(fb) ** 2)
        if mass <= 0:
            continue
        es.append(ea / np.linalg.norm(ea))
        fs.append(fb / np.linalg.norm(fb))
        ws.append(w * mass)
    sep_mass = float(sum(ws))
    lam_i = sep_mass / p if p > 0 else 0.0
    ws = [w / p for w in ws] if p > 0 else ws
    return p, lam_i, np.array(es).reshape(-1, rho.m), np.array(fs).reshape(-1, rho.n), np.array(ws)


def povm_monotonicity_check(rho: DensityMatrix, povm: LocalPovm, opts: SolverOptions | None = None,
                            parent: BsaDecomposition | None = None) -> MonotonicityReport:
    """Compare ``E(rho)`` with the average entanglement after a local measurement.

    Each outcome is solved with the pushed-through product vectors as warm
    starts. Outcomes with probability below ``1e-10`` are skipped in the
    average but kept in the identity check.
    """
    rho = _as_state(rho)
    if not isinstance(povm, LocalPovm):
        povm = LocalPovm(povm)
    if povm.dims != rho.dims:
        raise InvalidInput("POVM dimensions do not match the state")
    opts = opts or SolverOptions()
    parent = parent or bsa_solve(rho, opts)
    lhs = 1.0 - parent.lam
    ident = 0.0
    rhs = 0.0
    outcomes, pushed = [], []
    feasible = True
    skipped = 0
    for a, b in povm.elements:
        p, lam_i, e, f, w = pushed_through(parent, rho, a, b)
        ident += p * (1.0 - lam_i) if p > 0 else 0.0
        if p < SKIP_PROB:
            skipped += 1
            continue
        v = np.kron(a, b)
        rho_i = DensityMatrix.from_operator(v @ rho.mat @ v.conj().T, rho.dims, max(rho.tol, 1e-8))
        left = rho_i.mat - (engine.kron_rows(e, f).T * w) @ engine.kron_rows(e, f).conj()
        feasible &= bool(np.linalg.eigvalsh(left)[0] >= -1e-9)
        sub = bsa_solve(rho_i, opts, seeds=(e, f) if e.shape[0] else None)
        e_i = 1.0 - sub.lam
        outcomes.append((p, e_i))
        pushed.append(float(lam_i))
        rhs += p * e_i
    return MonotonicityReport(
        lhs=float(lhs), rhs=float(rhs), outcome_measures=outcomes, slack=float(lhs - rhs),
        identity_residual=float(abs(lhs - ident)), pushed_lambdas=pushed, pushed_feasible=feasible,
        skipped=skipped)


def _require_unitary(u, name):
    u = np.asarray(u, complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0])) > 1e-10:
        raise InvalidInput(f"{name} is not unitary within 1e-10")
    return u


def local_unitary_invariance_check(rho: DensityMatrix, u_a, u_b, opts: SolverOptions | None = None) -> float:
    """``|E(rho) - E(rotated rho)|`` from independent solves.

    Also rotates every product vector of the decomposition of ``rho`` and
    checks that the result is a feasible, single- and pair-maximal
    decomposition of the rotated state; raises ``InternalError`` otherwise.
    """
    rho = _as_state(rho)
    u_a = _require_unitary(u_a, "u_a")
    u_b = _require_unitary(u_b, "u_b")
    if u_a.shape[0] != rho.m or u_b.shape[0] != rho.n:
        raise InvalidInput("unitary dimensions do not match the state")
    opts = opts or SolverOptions()
    rotated = local_unitary(rho, u_a, u_b)
    dec = bsa_solve(rho, opts)
    dec_r = bsa_solve(rotated, opts)
    if dec.weights.items:
        weights = WeightedProductSet((w, ProductVector(u_a @ pv.e, u_b @ pv.f)) for w, pv in dec.weights)
        sep = DensityMatrix.from_operator(weights.operator(rho.dim), rho.dims)
        rem = None if dec.remainder is None else local_unitary(dec.remainder, u_a, u_b)
        moved = BsaDecomposition(dec.lam, weights, sep, rem)
        rep = verify_optimality(rotated, moved, trials=0, opts=opts)
        if not (rep.singles_maximal and rep.pairs_maximal):
            raise InternalError(f"rotated decomposition lost maximality: {rep}")
    return float(abs(dec.lam - dec_r.lam))
