"""Best separable approximation of bipartite states.

The solver combines a conic solve of the fixed-set problem, pricing
of new product vectors against the dual operator, an exact Caratheodory
reduction of the mixture, and exact single/pair re-maximisation sweeps built
on the closed-form kernels in :mod:`bsakit.kernels`.

Examples
--------
>>> from bsakit.states import werner
>>> dec = bsa_solve(werner(0.8), SolverOptions(multistart=2, seed=1))
>>> round(dec.lam, 3)
0.3
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import engine
from .errors import InvalidInput
from .io import density_from_dict, density_to_dict, product_vector_from_dict, product_vector_to_dict
from .kernels import (COLLINEAR_TOL, RangeInverse, _max_lambda, _pair_max, gram_matrix,
                      manifold_residual, max_lambda, pair_max, pair_max_case, psd_margin)
from .linalg import trace_norm
from .states import DensityMatrix, ProductVector, partial_transpose

__all__ = [
    "WeightedProductSet", "BsaDecomposition", "SolverOptions", "OptimalityReport",
    "max_lambda", "pair_max", "pair_max_case", "gram_matrix", "manifold_residual",
    "osa_fixed_set", "bsa_solve", "verify_optimality", "remainder_product_gap",
    "uniqueness_check",
]

log = logging.getLogger(__name__)

RECONSTRUCTION_TOL = 1e-8
PRUNE_TOL = 1e-12
MAXIMALITY_TOL = 1e-7


class WeightedProductSet:
    """List of ``(weight, ProductVector)`` pairs with nonnegative weights."""

    def __init__(self, items=()):
        self.items: list[tuple[float, ProductVector]] = []
        for w, pv in items:
            w = float(w)
            if not np.isfinite(w) or w < 0:
                raise InvalidInput(f"weight must be nonnegative, got {w}")
            self.items.append((w, pv))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[tuple[float, ProductVector]]:
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.items], float)

    def total(self) -> float:
        return float(sum(w for w, _ in self.items))

    def vectors(self) -> np.ndarray:
        """Stacked product vectors, one per row."""
        if not self.items:
            return np.zeros((0, 0), complex)
        return np.array([pv.vector() for _, pv in self.items])

    def operator(self, dim: int) -> np.ndarray:
        """Unnormalized mixture ``sum_i w_i |e_i f_i><e_i f_i|``."""
        out = np.zeros((dim, dim), complex)
        for w, pv in self.items:
            v = pv.vector()
            out += w * np.outer(v, v.conj())
        return out


@dataclass
class SolverOptions:
    """Tolerances and search budget.

    ``vector_refine="local_search"`` lets the search move product vectors
    (pricing restarts around the active set, then insertion of product
    vectors found in the remainder's range); ``"none"`` solves the seeded
    candidate set only.
    """

    rank_tol: float = 1e-9
    positivity_tol: float = 1e-9
    sweep_tol: float = 1e-12
    max_sweeps: int = 30
    candidate_count: int = 50
    multistart: int = 4
    seed: int = 0
    vector_refine: str = "local_search"
    validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("rank_tol", "positivity_tol", "sweep_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be positive")
        for name in ("max_sweeps", "candidate_count", "multistart"):
            if int(getattr(self, name)) < 1:
                raise InvalidInput(f"{name} must be at least 1")
        if self.vector_refine not in ("none", "local_search"):
            raise InvalidInput(f"unknown vector_refine {self.vector_refine!r}")
        self.validated = True


@dataclass
class BsaDecomposition:
    """``rho = lam * separable_part + (1 - lam) * remainder``.

    ``separable_part`` is ``None`` when ``lam == 0`` and ``remainder`` is
    ``None`` when ``lam`` is 1 within the reconstruction tolerance.
    """

    lam: float
    weights: WeightedProductSet
    separable_part: DensityMatrix | None
    remainder: DensityMatrix | None
    converged: bool = True
    report: dict = field(default_factory=dict)

    @property
    def entanglement(self) -> float:
        return 1.0 - self.lam

    def reconstruct(self) -> np.ndarray:
        """``lam * rho_s + (1 - lam) * delta`` as a matrix."""
        dim = self._dim()
        out = np.zeros((dim, dim), complex)
        if self.separable_part is not None:
            out += self.lam * self.separable_part.mat
        if self.remainder is not None:
            out += (1.0 - self.lam) * self.remainder.mat
        return out

    def separable_operator(self) -> np.ndarray:
        """``lam * rho_s``, built directly from the weights."""
        return self.weights.operator(self._dim())

    def _dim(self) -> int:
        part = self.separable_part or self.remainder
        return part.dim

    def extra_fields(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        out = {
            "lambda": float(self.lam),
            "weights": [product_vector_to_dict(w, pv) for w, pv in self.weights],
            "remainder": None if self.remainder is None else density_to_dict(self.remainder),
            "converged": bool(self.converged),
            "report": self.report,
        }
        if self.separable_part is not None:
            out["m"], out["n"] = self.separable_part.m, self.separable_part.n
        elif self.remainder is not None:
            out["m"], out["n"] = self.remainder.m, self.remainder.n
        out.update(self.extra_fields())
        return out

    @classmethod
    def from_dict(cls, obj: dict, tol: float = 1e-9):
        """Rebuild from :meth:`to_dict` output, re-validating every invariant."""
        try:
            lam = float(obj["lambda"])
            items = [product_vector_from_dict(w) for w in obj["weights"]]
            rem = obj.get("remainder")
            remainder = None if rem is None else density_from_dict(rem, tol)
            converged = bool(obj.get("converged", True))
            report = dict(obj.get("report", {}))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise InvalidInput(f"malformed decomposition: {exc}") from exc
        weights = WeightedProductSet(items)
        if abs(weights.total() - lam) > RECONSTRUCTION_TOL:
            raise InvalidInput(f"weight invariant violated: sum {weights.total():.12g} != lambda {lam:.12g}")
        sep = None
        if items:
            dims = items[0][1].dims
            sep = DensityMatrix.from_operator(weights.operator(dims.total), dims, tol)
        return cls(lam, weights, sep, remainder, converged, report)


@dataclass
class OptimalityReport:
    singles_maximal: bool
    pairs_maximal: bool
    worst_single_slack: float
    worst_pair_slack: float
    perturbation_gain: float

    def to_dict(self) -> dict:
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in self.__dict__.items()}


# -- assembling results -------------------------------------------------------------------


def _as_state(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    raise InvalidInput("expected a DensityMatrix")


def _remainder_state(delta, left: float, dims, tol, floor, ppt=False) -> DensityMatrix | None:
    if left <= RECONSTRUCTION_TOL:
        return None
    clean = engine.clean(delta, floor)
    if ppt:
        clean = _ppt_clean(clean, dims, floor)
    tr = np.trace(clean).real
    if tr <= 0:
        return None
    return DensityMatrix(clean / tr, dims, tol)


def _ppt_clean(delta, dims, floor, iters: int = 200):
    # alternate between the cleaned-spectrum matrices and the PPT cone; both
    # are met to roundoff after a few dozen steps, moving delta by about floor
    scale = max(1.0, float(np.trace(delta).real))
    for _ in range(iters):
        w, u = np.linalg.eigh(partial_transpose(delta, "A", dims))
        if w[0] >= -1e-15 * scale:
            break
        pt = (u * np.clip(w, 0.0, None)) @ u.conj().T
        delta = engine.clean(partial_transpose(pt, "A", dims), floor)
    return delta


def assemble(cls, rho: DensityMatrix, e, f, lam, converged: bool, report: dict, **extra):
    """Turn raw solver output into a validated decomposition of class ``cls``."""
    keep = np.asarray(lam) > PRUNE_TOL
    e, f, lam = np.asarray(e)[keep], np.asarray(f)[keep], np.asarray(lam, float)[keep]
    weights = WeightedProductSet((w, ProductVector(a, b)) for w, a, b in zip(lam, e, f))
    total = weights.total()
    if total > 1.0:
        # only reachable through roundoff at a separable state
        weights = WeightedProductSet((w / total, pv) for w, pv in weights)
        total = 1.0
    sep_op = weights.operator(rho.dim)
    sep = DensityMatrix.from_operator(sep_op, rho.dims) if len(weights) else None
    delta = rho.mat - sep_op
    rem = _remainder_state(delta, 1.0 - total, rho.dims, max(rho.tol, 1e-9), noise_floor(rho.mat),
                           ppt=getattr(cls, "ppt_remainder", False))
    if rem is None and len(weights) and total < 1.0:
        # absorb the negligible remainder into the separable part
        weights = WeightedProductSet((w / total, pv) for w, pv in weights)
        total = 1.0
    return cls(total, weights, sep, rem, bool(converged), report, **extra)


# -- the generic search ---------------------------------------------------------------


@dataclass
class Kernels:
    """Feasibility model used by the search: plain (PSD) or PPT-preserving."""

    ppt: bool
    single: Callable  # (delta, e, f) -> weight
    pair: Callable  # (delta, e1, f1, e2, f2) -> (w1, w2)
    check: Callable  # (delta) -> bool


def plain_kernels(opts: SolverOptions) -> Kernels:
    tol = opts.rank_tol

    def single(delta, e, f):
        return _max_lambda(RangeInverse(delta, tol), np.kron(e, f))

    def pair(delta, e1, f1, e2, f2):
        p1, p2 = np.kron(e1, f1), np.kron(e2, f2)
        if abs(np.vdot(p1, p2)) > 1.0 - COLLINEAR_TOL:
            return single(delta, e1, f1), 0.0
        a, b, _ = _pair_max(RangeInverse(delta, tol), p1, p2, opts.positivity_tol)
        return a, b

    def check(delta):
        return psd_margin(delta) >= -opts.positivity_tol

    return Kernels(False, single, pair, check)


def _polish(mat, e, f, lam, kern: Kernels, opts: SolverOptions, basis):
    vecs = engine.kron_rows(e, f)
    keep, lam = engine.caratheodory_reduce(basis, vecs, lam)
    e, f, lam = e[keep], f[keep], lam[keep]
    lam, sweeps, ok = engine.polish(
        mat, engine.kron_rows(e, f), lam,
        lambda d, i: kern.single(d, e[i], f[i]),
        lambda d, i, j: kern.pair(d, e[i], f[i], e[j], f[j]),
        kern.check, max_sweeps=opts.max_sweeps, sweep_tol=opts.sweep_tol, prune=PRUNE_TOL,
        floor=noise_floor(mat, opts))
    keep = lam > 0
    return e[keep], f[keep], lam[keep], sweeps, ok


def noise_floor(mat, opts: SolverOptions | None = None) -> float:
    """Eigenvalue level below which a remainder direction counts as exactly zero.

    Zeroing up to ``d`` eigenvalues of this size moves the matrix by at most
    half the reconstruction tolerance in Frobenius norm.
    """
    rank_tol = opts.rank_tol if opts else 1e-9
    scale = float(np.max(np.abs(np.linalg.eigvalsh(mat))))
    return max(rank_tol * scale, 0.5 * RECONSTRUCTION_TOL / np.sqrt(mat.shape[0]))


def _insertions(mat, dims, e, f, lam, kern, opts, rng):
    """Product vectors in the range of the running remainder (and of its partial transpose)."""
    delta = engine.remainder_of(mat, engine.kron_rows(e, f), lam)
    scale = np.max(np.abs(np.linalg.eigvalsh(mat)))
    cons = engine.constraints_for(delta / scale, dims, opts.rank_tol, kern.ppt)
    if all(c.rank == 0 for c in cons):
        return e[:0], f[:0]
    se, sf = engine.random_factors(rng, opts.candidate_count, dims)
    se, sf = engine.snap_to_range(cons, dims, se, sf, opts.rank_tol)
    if se.shape[0] == 0:
        return se, sf
    se, sf = engine.dedupe(se, sf)
    gains = np.array([kern.single(delta, a, b) for a, b in zip(se, sf)])
    order = np.argsort(-gains, kind="stable")  # equal gains: lower index first
    order = order[gains[order] > PRUNE_TOL][: 2 * dims.total]
    return se[order], sf[order]


def search(rho: DensityMatrix, opts: SolverOptions, kern: Kernels, rng, seeds=None):
    """One start of the full search. Returns ``(e, f, lam, converged, report)``."""
    mat, dims = rho.mat, rho.dims
    cons = engine.constraints_for(mat, dims, opts.rank_tol, kern.ppt)
    e, f = engine.seed_candidates(mat, cons, dims, rng, opts.candidate_count, opts.rank_tol)
    if seeds is not None and len(seeds[0]):
        e2, f2 = engine.snap_to_range(cons, dims, *seeds, opts.rank_tol)
        e, f = engine.dedupe(np.concatenate([e2, e]), np.concatenate([f2, f]))
    report = {"seeds": int(e.shape[0])}
    if e.shape[0] == 0:
        report.update(active=0, sweeps=0, insertions=0)
        return e, f, np.zeros(0), True, report
    refine = opts.vector_refine == "local_search"
    res = engine.column_generation(dims, cons, e, f, rank_tol=opts.rank_tol, rng=rng,
                                   generate=refine, refine=refine)
    e, f, lam, sweeps, ok = _polish(mat, res.e, res.f, res.lam, kern, opts, cons[0].basis)
    inserted = 0
    clean = True
    if refine:
        for _ in range(5):
            ne, nf = _insertions(mat, dims, e, f, lam, kern, opts, rng)
            if ne.shape[0] == 0:
                break
            before = lam.sum()
            inserted += ne.shape[0]
            e2, f2 = np.concatenate([e, ne]), np.concatenate([f, nf])
            lam2 = np.concatenate([lam, np.zeros(ne.shape[0])])
            e2, f2, lam2, s2, ok = _polish(mat, e2, f2, lam2, kern, opts, cons[0].basis)
            sweeps += s2
            if lam2.sum() >= before:
                e, f, lam = e2, f2, lam2
            if lam2.sum() - before < opts.sweep_tol:
                break
        else:
            clean = False
    converged = bool(res.converged and ok and clean)
    report.update(active=int(lam.size), sweeps=int(sweeps), insertions=int(inserted),
                  generated=int(res.generated), dual_estimate=_finite(res.dual_estimate), rounds=int(res.rounds))
    return e, f, lam, converged, report


def _finite(x):
    return float(x) if np.isfinite(x) else None


def worker_count(jobs: int) -> int:
    env = os.environ.get("BSAKIT_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer BSAKIT_THREADS=%r", env)
    return max(1, min(jobs, cap))


def multistart(rho, opts: SolverOptions, kern: Kernels, seeds=None):
    """Best of ``opts.multistart`` independent starts; ties go to the lowest start index."""

    def one(start):
        rng = np.random.default_rng([opts.seed, start])
        return search(rho, opts, kern, rng, seeds)

    starts = range(opts.multistart)
    workers = worker_count(opts.multistart)
    if workers == 1:
        results = [one(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, starts))
    totals = [float(np.sum(r[2])) for r in results]
    best = int(np.argmax(totals))
    e, f, lam, converged, report = results[best]
    report = dict(report, starts=opts.multistart, best_start=best,
                  start_lambdas=[round(t, 12) for t in totals])
    return e, f, lam, converged, report


# -- public operations ----------------------------------------------------------------


def _split_candidates(candidates, dims):
    pvs = list(candidates)
    if not pvs:
        raise InvalidInput("candidate set is empty")
    e = np.array([pv.e for pv in pvs], complex)
    f = np.array([pv.f for pv in pvs], complex)
    if e.shape[1] != dims.m or f.shape[1] != dims.n:
        raise InvalidInput("dimension mismatch between candidates and state")
    return e, f


def fixed_set(rho: DensityMatrix, candidates, opts: SolverOptions, kern: Kernels, cls):
    """Shared body of the plain and PPT fixed-set solvers."""
    mat, dims = rho.mat, rho.dims
    e, f = _split_candidates(candidates, dims)
    cons = engine.constraints_for(mat, dims, opts.rank_tol, kern.ppt)
    res = engine.kernel_residuals(cons, e, f)
    ok = res <= opts.rank_tol
    if not np.all(ok):
        log.warning("dropping %d candidate(s) outside the range", int(np.count_nonzero(~ok)))
    e, f = e[ok], f[ok]
    report = {"candidates": int(ok.size), "admitted": int(ok.sum())}
    if e.shape[0] == 0:
        return assemble(cls, rho, e, f, np.zeros(0), True, dict(report, sweeps=0))
    e, f = engine.dedupe(e, f)
    bar = engine.column_generation(dims, cons, e, f, rank_tol=opts.rank_tol, refine=False)
    e, f, lam, sweeps, conv = _polish(mat, bar.e, bar.f, bar.lam, kern, opts, cons[0].basis)
    report.update(sweeps=int(sweeps), active=int(lam.size))
    return assemble(cls, rho, e, f, lam, conv, report)


def osa_fixed_set(rho: DensityMatrix, candidates, opts: SolverOptions | None = None) -> BsaDecomposition:
    """Optimal separable approximation over a fixed list of product vectors.

    Candidates outside the range of ``rho`` are dropped with a warning. On
    exit every weight is single-maximal and every pair is pair-maximal on its
    add-back matrix, up to the sweep tolerance.
    """
    opts = opts or SolverOptions()
    return fixed_set(_as_state(rho), candidates, opts, plain_kernels(opts), BsaDecomposition)


def bsa_solve(rho: DensityMatrix, opts: SolverOptions | None = None, seeds=None) -> BsaDecomposition:
    """Best separable approximation by multistart search over product vectors.

    Parameters
    ----------
    rho : DensityMatrix
    opts : SolverOptions, optional
    seeds : tuple of arrays, optional
        Extra ``(e, f)`` rows used as warm-start candidates in every start.

    Returns
    -------
    BsaDecomposition
        Always feasible; ``lam`` is a lower bound on the optimal weight.
    """
    rho = _as_state(rho)
    opts = opts or SolverOptions()
    e, f, lam, converged, report = multistart(rho, opts, plain_kernels(opts), seeds)
    return assemble(BsaDecomposition, rho, e, f, lam, converged, report)


def _check_reconstruction(rho: DensityMatrix, dec) -> np.ndarray:
    err = np.linalg.norm(rho.mat - dec.reconstruct())
    if err > RECONSTRUCTION_TOL:
        raise InvalidInput(f"reconstruction invariant violated: residual {err:.3e}")
    return rho.mat - dec.separable_operator()


def single_slacks(delta, weights: WeightedProductSet, single) -> np.ndarray:
    out = []
    for w, pv in weights:
        v = pv.vector()
        out.append(w - single(delta + w * np.outer(v, v.conj()), pv.e, pv.f))
    return np.array(out)


def pair_slacks(delta, weights: WeightedProductSet, pair) -> np.ndarray:
    items = list(weights)
    out = []
    for i in range(len(items)):
        wi, pi = items[i]
        vi = pi.vector()
        for j in range(i + 1, len(items)):
            wj, pj = items[j]
            vj = pj.vector()
            if abs(np.vdot(vi, vj)) > 1.0 - COLLINEAR_TOL:
                continue
            back = delta + wi * np.outer(vi, vi.conj()) + wj * np.outer(vj, vj.conj())
            a, b = pair(back, pi.e, pi.f, pj.e, pj.f)
            out.append(wi + wj - (a + b))
    return np.array(out)


def perturbation_gain(rho, dec, trials: int, seed: int, kern: Kernels, opts: SolverOptions, cls):
    """Largest weight increase found by re-solving with perturbed and random extra vectors."""
    rng = np.random.default_rng(seed)
    dims = rho.dims
    e0 = np.array([pv.e for _, pv in dec.weights]).reshape(-1, dims.m)
    f0 = np.array([pv.f for _, pv in dec.weights]).reshape(-1, dims.n)
    re, rf = engine.random_factors(rng, trials, dims)
    if e0.shape[0]:
        pick = rng.integers(0, e0.shape[0], trials)
        scale = 10.0 ** rng.uniform(-4, -1, trials)[:, None]
        pe, pf = e0[pick] + scale * re, f0[pick] + scale * rf
        pe /= np.linalg.norm(pe, axis=1, keepdims=True)
        pf /= np.linalg.norm(pf, axis=1, keepdims=True)
    else:
        pe, pf = re[:0], rf[:0]
    cons = engine.constraints_for(rho.mat, dims, opts.rank_tol, kern.ppt)
    # random trials only count when they can contribute, so move them into the range
    se, sf = engine.snap_to_range(cons, dims, re, rf, opts.rank_tol)
    pe, pf = engine.snap_to_range(cons, dims, pe, pf, opts.rank_tol)
    cand_e = np.concatenate([e0, pe, se])
    cand_f = np.concatenate([f0, pf, sf])
    if cand_e.shape[0] == 0:
        return 0.0
    pvs = [ProductVector(a, b) for a, b in zip(cand_e, cand_f)]
    trial = fixed_set(rho, pvs, opts, kern, cls)
    return float(trial.lam - dec.lam)


def verify_optimality(rho: DensityMatrix, dec: BsaDecomposition, trials: int = 64, seed: int = 0,
                      opts: SolverOptions | None = None) -> OptimalityReport:
    """Check the single, pair and perturbation optimality conditions of a decomposition.

    Slacks are ``w - w_max`` (singles) and ``w_i + w_j - (w_i' + w_j')``
    (pairs) against the maxima recomputed on each add-back matrix; a flag is
    true when every slack is within ``1e-7`` of zero.
    """
    rho = _as_state(rho)
    opts = opts or SolverOptions()
    return _verify(rho, dec, trials, seed, opts, plain_kernels(opts), BsaDecomposition)


def _verify(rho, dec, trials, seed, opts, kern, cls) -> OptimalityReport:
    floor = noise_floor(rho.mat, opts)
    delta = engine.clean(_check_reconstruction(rho, dec), floor)
    if kern.ppt:
        # same projection as the stored remainder, so the add-back partial transposes stay PSD
        delta = _ppt_clean(delta, rho.dims, floor)
    s = single_slacks(delta, dec.weights, kern.single)
    p = pair_slacks(delta, dec.weights, kern.pair)
    gain = perturbation_gain(rho, dec, trials, seed, kern, opts, cls)
    worst_s = float(s[np.argmax(np.abs(s))]) if s.size else 0.0
    worst_p = float(np.min(p)) if p.size else 0.0
    return OptimalityReport(
        singles_maximal=bool(np.all(np.abs(s) <= MAXIMALITY_TOL)),
        pairs_maximal=bool(np.all(p >= -MAXIMALITY_TOL)),
        worst_single_slack=worst_s,
        worst_pair_slack=worst_p,
        perturbation_gain=gain,
    )


def product_form_minimum(q, dims, restarts: int, seed: int) -> float:
    """Multistart minimum of ``<e,f|q|e,f>`` over normalized product vectors."""
    rng = np.random.default_rng(seed)
    e, f = engine.random_factors(rng, restarts, dims)
    _, _, val = engine.minimize_product_form(q, dims, e, f, iters=2000, tol=1e-15)
    return float(max(0.0, np.min(val)))


def remainder_product_gap(delta: DensityMatrix, restarts: int = 32, seed: int = 0,
                          rank_tol: float = 1e-9) -> float:
    """Smallest squared kernel component of a product vector.

    Zero means some product vector lies in the range of ``delta``; a value
    bounded away from zero certifies that none does.
    """
    delta = _as_state(delta)
    ri = RangeInverse(delta.mat, rank_tol)
    if ri.kernel.shape[1] == 0:
        return 0.0
    q = ri.kernel @ ri.kernel.conj().T
    return product_form_minimum(q, delta.dims, restarts, seed)


def uniqueness_check(rho: DensityMatrix, opts: SolverOptions | None = None, starts: int = 4) -> float:
    """Largest trace distance between ``lam * rho_s`` over independently seeded solves."""
    rho = _as_state(rho)
    opts = opts or SolverOptions()
    ops = []
    for s in range(starts):
        o = SolverOptions(**{**opts.__dict__, "seed": opts.seed + 1000 * s, "validated": False})
        ops.append(bsa_solve(rho, o).separable_operator())
    return max((trace_norm(a - b) for i, a in enumerate(ops) for b in ops[i + 1:]), default=0.0)
