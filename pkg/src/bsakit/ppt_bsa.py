"""PPT-preserving best separable approximation.

Subtractions must keep both the remainder and its Alice partial transpose
positive semidefinite. The partial transpose of ``|e,f><e,f|`` is the
projector onto ``|e*, f>``, so every kernel works on the pair of operators
``(delta, delta^TA)`` with the vectors ``(|e,f>, |e*,f>)``.

Examples
--------
>>> import numpy as np
>>> from bsakit.states import DensityMatrix, BipartiteDims, ProductVector
>>> rho = DensityMatrix(np.eye(9) / 9, BipartiteDims(3, 3))
>>> round(ppt_max_lambda(rho, ProductVector([1, 0, 0], [1, 0, 0])), 12)
0.111111111111
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import engine
from .bsa import (BsaDecomposition, Kernels, OptimalityReport, SolverOptions, _as_state, _verify,
                  assemble, fixed_set, multistart, noise_floor, product_form_minimum)
from .errors import InternalError, InvalidInput, NotPpt
from .kernels import COLLINEAR_TOL, POSITIVITY_TOL, RangeInverse, _max_lambda, psd_margin
from .linalg import DEFAULT_RANK_TOL, min_eigenvalue
from .states import DensityMatrix, ProductVector, is_ppt, partial_transpose

__all__ = [
    "PptBsaDecomposition", "PptPairCase", "ppt_max_lambda", "ppt_pair_max", "ppt_bsa_solve",
    "ppt_osa_fixed_set", "verify_ppt_optimality", "edge_state_gap",
]

log = logging.getLogger(__name__)

REMAINDER_PPT_TOL = 1e-9
DISCRIMINANT_TOL = 1e-12


@dataclass
class PptBsaDecomposition(BsaDecomposition):
    """Decomposition whose remainder is PSD and has PSD partial transpose."""

    remainder_ppt: bool = True
    edge_gap: float | None = None
    ppt_remainder = True  # tells assemble to project the remainder into the PPT cone

    def extra_fields(self) -> dict:
        return {"remainder_ppt": bool(self.remainder_ppt),
                "edge_gap": None if self.edge_gap is None else float(self.edge_gap)}

    @classmethod
    def from_dict(cls, obj: dict, tol: float = 1e-9):
        dec = super().from_dict(obj, tol)
        dec.remainder_ppt = bool(obj.get("remainder_ppt", True))
        gap = obj.get("edge_gap")
        dec.edge_gap = None if gap is None else float(gap)
        if dec.remainder is not None and _pt_min(dec.remainder) < -REMAINDER_PPT_TOL:
            raise InvalidInput("remainder partial transpose is not PSD")
        return dec


@dataclass
class PptPairCase:
    """Which branch of the two-curve pair maximization was taken.

    ``case_id`` is ``"below"`` when the answer is the maximum of the lower
    boundary curve and ``"crossing"`` when it sits at the curves' crossing
    point ``lambda_s`` (an abscissa, i.e. a value of the first weight).
    """

    case_id: str
    lambda_s: float | None
    chosen: tuple[float, float]


def _pt_min(rho: DensityMatrix) -> float:
    return min_eigenvalue(partial_transpose(rho))


def _require_ppt(rho) -> DensityMatrix:
    rho = _as_state(rho)
    if not is_ppt(rho):
        raise NotPpt(f"state is not PPT: min eigenvalue of partial transpose {_pt_min(rho):.3e}")
    return rho


# -- single and pair kernels on (operator, partial transpose) ---------------------------


def _ppt_single(ra: RangeInverse, rb: RangeInverse, v, vt) -> float:
    if not (ra.in_range(v) and rb.in_range(vt)):
        return 0.0
    return min(_max_lambda(ra, v), _max_lambda(rb, vt))


def ppt_max_lambda(rho: DensityMatrix, pv: ProductVector, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Largest ``lam`` keeping ``rho - lam |e,f><e,f|`` PSD and PPT.

    Zero unless ``|e,f>`` lies in the range of ``rho`` and ``|e*,f>`` in the
    range of its partial transpose.
    """
    rho = _require_ppt(rho)
    ra = RangeInverse(rho.mat, rank_tol)
    rb = RangeInverse(partial_transpose(rho), rank_tol)
    return _ppt_single(ra, rb, pv.vector(), pv.conj_alice().vector())


class _Curve:
    """Upper boundary ``lam2 = g(lam1)`` of the feasible pair region for one operator."""

    def __init__(self, ri: RangeInverse, p1, p2):
        self.a = ri.form(p1).real
        self.b = ri.form(p2).real
        self.c2 = abs(ri.form(p1, p2)) ** 2
        self.c = np.sqrt(self.c2)
        self.end = 1.0 / self.a

    def __call__(self, x: float) -> float:
        num = max(0.0, 1.0 - x * self.a)
        den = self.b * num + x * self.c2
        if den <= 0.0:
            return 1.0 / self.b
        return num / den

    def argmax(self) -> float:
        # abscissa maximizing lam1 + g(lam1) over [0, 1/a]
        if self.c <= 1e-13 * max(self.a, self.b):
            return self.end
        if self.a > self.c and self.b > self.c:
            return (self.b - self.c) / (self.a * self.b - self.c2)
        if self.b <= self.c:
            return 0.0
        return self.end


def _crossings(g0: _Curve, g1: _Curve, top: float) -> list[float]:
    """Abscissae in ``(0, top)`` where the two boundary curves meet."""
    db = g1.b - g0.b
    qa = db * g0.a * g1.a - (g0.a * g1.c2 - g1.a * g0.c2)
    qb = -db * (g0.a + g1.a) + (g1.c2 - g0.c2)
    qc = db
    scale = max(abs(qa) * top * top, abs(qb) * top, abs(qc), 1e-300)
    lo, hi = 1e-12 * top, top * (1.0 - 1e-12)
    roots: list[float] = []
    if abs(qa) * top * top <= 1e-14 * scale:
        if abs(qb) > 0:
            roots = [-qc / qb]
    else:
        disc = qb * qb - 4.0 * qa * qc
        if abs(disc) <= DISCRIMINANT_TOL * max(qb * qb, abs(4.0 * qa * qc)):
            roots = _bisect_crossings(g0, g1, lo, hi)
        elif disc > 0:
            sq = np.sqrt(disc)
            # numerically stable pair of roots
            t = -0.5 * (qb + np.copysign(sq, qb))
            roots = [t / qa, qc / t] if t != 0 else [-qb / (2 * qa)]
    return sorted(x for x in roots if lo < x < hi)


def _bisect_crossings(g0, g1, lo, hi, grid: int = 64) -> list[float]:
    h = lambda x: g0(x) - g1(x)  # noqa: E731
    xs = np.linspace(lo, hi, grid)
    hs = np.array([h(x) for x in xs])
    out = []
    for k in range(grid - 1):
        if hs[k] == 0.0:
            out.append(float(xs[k]))
        elif hs[k] * hs[k + 1] < 0:
            out.append(float(brentq(h, xs[k], xs[k + 1], xtol=1e-15 * hi)))
    return out


def _select(g0: _Curve, g1: _Curve) -> tuple[float, PptPairCase]:
    """Pick the first weight per the two-curve case analysis."""
    top = min(g0.end, g1.end)
    low = lambda x: min(g0(x), g1(x))  # noqa: E731
    roots = _crossings(g0, g1, top)
    if not roots:
        # one curve lies under the other on the whole interval
        mid = 0.5 * top
        under = g0 if g0(mid) <= g1(mid) else g1
        x = min(under.argmax(), top)
        return x, PptPairCase("below", None, (x, low(x)))
    if len(roots) == 1:
        s = roots[0]
        left, right = (g0, g1) if g0(0.5 * s) <= g1(0.5 * s) else (g1, g0)
        xl, xr = left.argmax(), min(right.argmax(), top)
        slack = 1e-9 * top
        if xl <= s and xr <= s:
            x, case = xl, "below"
        elif xl >= s and xr >= s:
            x, case = xr, "below"
        elif xl > s and xr < s:
            x, case = s, "crossing"
        elif s - xl <= slack or xr - s <= slack:
            x, case = s, "crossing"
        else:
            raise InternalError(
                f"pair case analysis: left maximum {xl:.6g} below and right maximum {xr:.6g} above "
                f"the crossing {s:.6g}; the feasible region cannot be convex")
        return x, PptPairCase(case, s if case == "crossing" else None, (x, low(x)))
    # two crossings: the lower envelope is still concave, so compare the candidates
    cands = [(x, "below") for x in (min(g0.argmax(), top), min(g1.argmax(), top), 0.0, top)]
    cands += [(s, "crossing") for s in roots]
    _, x, case = max(((x + low(x), x, c) for x, c in cands), key=lambda t: t[0])
    return x, PptPairCase(case, x if case == "crossing" else None, (x, low(x)))


def _subtract_ok(op, pairs, tol) -> bool:
    out = np.array(op, complex)
    for lam, v in pairs:
        out -= lam * np.outer(v, v.conj())
    return psd_margin(out) >= -tol


def _ppt_pair(ra: RangeInverse, rb: RangeInverse, p1, p2, t1, t2, tol: float = POSITIVITY_TOL):
    """Pair maximum on ``(A, B)`` with vectors ``(p_i)`` for A and ``(t_i)`` for B."""
    ok1 = ra.in_range(p1) and rb.in_range(t1)
    ok2 = ra.in_range(p2) and rb.in_range(t2)
    if not ok1 and not ok2:
        return 0.0, 0.0, PptPairCase("below", None, (0.0, 0.0))
    if not ok1 or not ok2:
        w = _ppt_single(ra, rb, p1, t1) if ok1 else _ppt_single(ra, rb, p2, t2)
        chosen = (w, 0.0) if ok1 else (0.0, w)
        return chosen[0], chosen[1], PptPairCase("below", None, chosen)
    g0, g1 = _Curve(ra, p1, p2), _Curve(rb, t1, t2)
    x, case = _select(g0, g1)
    y = min(g0(x), g1(x))
    if _subtract_ok(ra.op, [(x, p1), (y, p2)], tol) and _subtract_ok(rb.op, [(x, t1), (y, t2)], tol):
        return x, y, case
    log.debug("PPT pair selection (%s) failed positivity; using bounded search", case.case_id)
    x, y = _ppt_pair_numeric(ra, rb, p1, p2, t1, t2)
    return x, y, PptPairCase(case.case_id, case.lambda_s, (x, y))


def _ppt_pair_numeric(ra, rb, p1, p2, t1, t2):
    top = _ppt_single(ra, rb, p1, t1)
    q1, r1 = np.outer(p1, p1.conj()), np.outer(t1, t1.conj())

    def second(x):
        return _ppt_single(RangeInverse(ra.op - x * q1, ra.rank_tol),
                           RangeInverse(rb.op - x * r1, rb.rank_tol), p2, t2)

    if top == 0.0:
        return 0.0, second(0.0)
    res = minimize_scalar(lambda x: -(x + second(x)), bounds=(0.0, top), method="bounded",
                          options={"xatol": 1e-13 * max(1.0, top)})
    best = max([(0.0, second(0.0)), (top, 0.0), (res.x, second(res.x))], key=sum)
    return float(best[0]), float(best[1])


def ppt_pair_max(rho: DensityMatrix, pv1: ProductVector, pv2: ProductVector,
                 rank_tol: float = DEFAULT_RANK_TOL):
    """Maximal pair of weights keeping ``rho - l1 P1 - l2 P2`` PSD and PPT.

    Returns ``(l1, l2, PptPairCase)``. Each constraint bounds the pair region
    by a concave curve ``l2 = g(l1)``; the answer is the best point of the
    lower envelope, found from the curves' own maxima and their crossing.
    """
    rho = _require_ppt(rho)
    p1, p2 = pv1.vector(), pv2.vector()
    if abs(np.vdot(p1, p2)) > 1.0 - COLLINEAR_TOL:
        raise InvalidInput("ppt_pair_max needs non-collinear vectors; use ppt_max_lambda")
    ra = RangeInverse(rho.mat, rank_tol)
    rb = RangeInverse(partial_transpose(rho), rank_tol)
    return _ppt_pair(ra, rb, p1, p2, pv1.conj_alice().vector(), pv2.conj_alice().vector())


def ppt_kernels(opts: SolverOptions, dims, floor: float = 0.0) -> Kernels:
    tol = opts.rank_tol

    def pt(delta):
        return engine.clean(partial_transpose(delta, "A", dims), floor).astype(complex)

    def single(delta, e, f):
        return _ppt_single(RangeInverse(delta, tol), RangeInverse(pt(delta), tol),
                           np.kron(e, f), np.kron(e.conj(), f))

    def pair(delta, e1, f1, e2, f2):
        p1, p2 = np.kron(e1, f1), np.kron(e2, f2)
        if abs(np.vdot(p1, p2)) > 1.0 - COLLINEAR_TOL:
            return single(delta, e1, f1), 0.0
        a, b, _ = _ppt_pair(RangeInverse(delta, tol), RangeInverse(pt(delta), tol), p1, p2,
                            np.kron(e1.conj(), f1), np.kron(e2.conj(), f2), opts.positivity_tol)
        return a, b

    def check(delta):
        return (psd_margin(delta) >= -opts.positivity_tol
                and psd_margin(partial_transpose(delta, "A", dims)) >= -opts.positivity_tol)

    return Kernels(True, single, pair, check)


# -- solvers ----------------------------------------------------------------------------


def _finish(dec: PptBsaDecomposition, edge_restarts: int, seed: int) -> PptBsaDecomposition:
    if dec.remainder is None:
        dec.remainder_ppt, dec.edge_gap = True, None
        return dec
    dec.remainder_ppt = bool(_pt_min(dec.remainder) >= -REMAINDER_PPT_TOL
                             and min_eigenvalue(dec.remainder.mat) >= -REMAINDER_PPT_TOL)
    dec.edge_gap = edge_state_gap(dec.remainder, edge_restarts, seed) if edge_restarts else None
    return dec


def ppt_bsa_solve(rho: DensityMatrix, opts: SolverOptions | None = None, seeds=None,
                  edge_restarts: int = 32) -> PptBsaDecomposition:
    """PPT best separable approximation by multistart search.

    Parameters
    ----------
    rho : DensityMatrix
        Must be PPT.
    opts : SolverOptions, optional
    seeds : tuple of arrays, optional
        Extra ``(e, f)`` warm-start rows.
    edge_restarts : int
        Restarts for the edge-state gap of the remainder; 0 skips it.
    """
    rho = _require_ppt(rho)
    opts = opts or SolverOptions()
    kern = ppt_kernels(opts, rho.dims, noise_floor(rho.mat, opts))
    e, f, lam, converged, report = multistart(rho, opts, kern, seeds)
    dec = assemble(PptBsaDecomposition, rho, e, f, lam, converged, report)
    return _finish(dec, edge_restarts, opts.seed)


def ppt_osa_fixed_set(rho: DensityMatrix, candidates, opts: SolverOptions | None = None,
                      edge_restarts: int = 0) -> PptBsaDecomposition:
    """PPT-preserving optimum over a fixed candidate list.

    Candidates failing the dual range test are dropped with a warning.
    """
    rho = _require_ppt(rho)
    opts = opts or SolverOptions()
    kern = ppt_kernels(opts, rho.dims, noise_floor(rho.mat, opts))
    dec = fixed_set(rho, candidates, opts, kern, PptBsaDecomposition)
    return _finish(dec, edge_restarts, opts.seed)


def verify_ppt_optimality(rho: DensityMatrix, dec: PptBsaDecomposition, trials: int = 64, seed: int = 0,
                          opts: SolverOptions | None = None) -> OptimalityReport:
    """Single, pair and perturbation checks against the PPT-preserving kernels."""
    rho = _require_ppt(rho)
    opts = opts or SolverOptions()
    kern = ppt_kernels(opts, rho.dims, noise_floor(rho.mat, opts))
    return _verify(rho, dec, trials, seed, opts, kern, PptBsaDecomposition)


def edge_state_gap(delta: DensityMatrix, restarts: int = 32, seed: int = 0,
                   rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Smallest ``|P_K(d)|e,f>|^2 + |P_K(d^TA)|e*,f>|^2`` over product vectors.

    Near zero means some product vector could still be subtracted; a value
    bounded away from zero marks ``delta`` as an edge state. Both terms are
    quadratic in ``|e,f>`` because ``<e*,f|Q|e*,f> = <e,f|Q^TA|e,f>``.
    """
    delta = _as_state(delta)
    k1 = RangeInverse(delta.mat, rank_tol).kernel
    k2 = RangeInverse(partial_transpose(delta), rank_tol).kernel
    if k1.shape[1] == 0 and k2.shape[1] == 0:
        return 0.0
    q = k1 @ k1.conj().T + partial_transpose(k2 @ k2.conj().T, "A", delta.dims)
    return product_form_minimum(q, delta.dims, restarts, seed)
