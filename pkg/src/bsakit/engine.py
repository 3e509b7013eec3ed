"""Search machinery shared by the plain and PPT-preserving solvers.

A *constraint* is a PSD operator that must stay PSD after subtraction: the
state itself, and for the PPT variant also its Alice partial transpose, which
sees every product vector ``|e, f>`` as ``|e*, f>``.

Three ingredients are combined:

* ``master_solve``: the fixed-set problem ``max sum(lam)`` s.t. every
  constraint minus ``sum lam_i P_i`` is PSD, handed to Clarabel in range
  coordinates. Its dual gives the reduced-cost operator ``Z``.
* ``column_generation``: local minimisation of ``<e,f|Z|e,f>`` over product
  vectors by alternating smallest-eigenvector updates. A value below 1 means
  adding that vector increases the total weight.
* exact single/pair sweeps (``polish``) that move the weights onto the
  boundary so the remainder acquires an exact kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import clarabel
from scipy import sparse

from .states import BipartiteDims, partial_transpose


@dataclass
class Constraint:
    basis: np.ndarray  # d x r orthonormal range basis
    evals: np.ndarray  # eigenvalues on the range
    kernel: np.ndarray  # d x k orthonormal kernel basis
    conj: bool  # vectors enter as |e*, f>

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


def make_constraint(op, rank_tol: float, conj: bool = False) -> Constraint:
    w, u = np.linalg.eigh(0.5 * (op + op.conj().T))
    scale = np.max(np.abs(w))
    keep = w > rank_tol * scale if scale > 0 else np.zeros(w.shape, bool)
    return Constraint(u[:, keep], w[keep], u[:, ~keep], conj)


def constraints_for(mat, dims: BipartiteDims, rank_tol: float, ppt: bool) -> list[Constraint]:
    out = [make_constraint(mat, rank_tol)]
    if ppt:
        out.append(make_constraint(partial_transpose(mat, "A", dims), rank_tol, conj=True))
    return out


def kron_rows(e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Row-wise Kronecker products: ``(K, m), (K, n) -> (K, m*n)``."""
    return (e[:, :, None] * f[:, None, :]).reshape(e.shape[0], e.shape[1] * f.shape[1])


def vectors_for(c: Constraint, e, f) -> np.ndarray:
    return kron_rows(e.conj() if c.conj else e, f)


def kernel_residuals(cons, e, f) -> np.ndarray:
    """Largest kernel-component norm over all constraints, per vector."""
    res = np.zeros(e.shape[0])
    for c in cons:
        if c.kernel.shape[1]:
            v = vectors_for(c, e, f)
            res = np.maximum(res, np.linalg.norm(v @ c.kernel.conj(), axis=1))
    return res


# -- fixed-set master problem ---------------------------------------------------------


def _svec(m: np.ndarray) -> np.ndarray:
    # upper triangle by columns, off-diagonals scaled by sqrt(2) (the conic solver's convention)
    iu = np.triu_indices(m.shape[0])
    order = np.lexsort((iu[0], iu[1]))
    i, j = iu[0][order], iu[1][order]
    return m[i, j] * np.where(i == j, 1.0, np.sqrt(2.0))


def _smat(v: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n)
    order = np.lexsort((iu[0], iu[1]))
    i, j = iu[0][order], iu[1][order]
    out = np.zeros((n, n))
    vals = v * np.where(i == j, 1.0, 1.0 / np.sqrt(2.0))
    out[i, j] = vals
    out[j, i] = vals
    return out


def _real_embed(h: np.ndarray) -> np.ndarray:
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def _complex_part(x: np.ndarray) -> np.ndarray:
    r = x.shape[0] // 2
    re = 0.5 * (x[:r, :r] + x[r:, r:])
    im = 0.5 * (x[r:, :r] - x[:r, r:])
    return re + 1j * im


def master_solve(cons, e, f, tol=1e-11):
    """Solve ``max sum(lam)`` s.t. every constraint minus the mixture stays PSD.

    Returns ``(lam, duals)`` where ``duals[b]`` is the optimal dual operator of
    constraint ``b`` embedded in the full space (zero on its kernel), so that
    ``<v_i|Z|v_i> >= 1`` for every vector, with equality on active ones.
    """
    k = e.shape[0]
    rows, rhs, cones, active = [-sparse.identity(k, format="csc")], [np.zeros(k)], [clarabel.NonnegativeConeT(k)], []
    for c in cons:
        if c.rank == 0:
            continue
        coef = c.basis.conj().T @ vectors_for(c, e, f).T  # r x K
        cols = [_svec(_real_embed(np.outer(coef[:, i], coef[:, i].conj()))) for i in range(k)]
        rows.append(sparse.csc_matrix(np.array(cols).T))
        rhs.append(_svec(_real_embed(np.diag(c.evals).astype(complex))))
        cones.append(clarabel.PSDTriangleConeT(2 * c.rank))
        active.append(c)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_iter = 400
    solver = clarabel.DefaultSolver(sparse.csc_matrix((k, k)), -np.ones(k), sparse.vstack(rows, format="csc"),
                                    np.concatenate(rhs), cones, settings)
    sol = solver.solve()
    lam = np.clip(np.asarray(sol.x), 0.0, None)
    z = np.asarray(sol.z)
    duals, pos = [], k
    for c in cons:
        if c.rank == 0:
            duals.append(np.zeros((c.basis.shape[0],) * 2, complex))
            continue
        n2 = 2 * c.rank
        size = n2 * (n2 + 1) // 2
        zr = _complex_part(_smat(z[pos:pos + size], n2))
        pos += size
        # the embedding doubles every eigenvalue's multiplicity; the complex dual is twice the block
        duals.append(2.0 * c.basis @ zr @ c.basis.conj().T)
    return _make_feasible(cons, e, f, lam), duals


def _make_feasible(cons, e, f, lam):
    """Scale weights down just enough to remove the solver's tiny infeasibility."""
    t = 1.0
    for c in cons:
        if c.rank == 0:
            continue
        coef = c.basis.conj().T @ vectors_for(c, e, f).T
        s = coef / np.sqrt(c.evals)[:, None]
        top = np.linalg.eigvalsh((s * lam) @ s.conj().T)[-1]
        if top > 1.0:
            t = min(t, 1.0 / top)
    return lam * t


def pricing_operator(cons, duals, dims: BipartiteDims, penalty: float) -> np.ndarray:
    """Operator whose expectation in ``|e,f>`` is the reduced cost of that vector."""
    z = np.zeros((dims.total, dims.total), complex)
    for c, y in zip(cons, duals):
        op = y + penalty * (c.kernel @ c.kernel.conj().T)
        z += partial_transpose(op, "A", dims) if c.conj else op
    return 0.5 * (z + z.conj().T)


# -- product-vector minimisation of quadratic forms ------------------------------------


def minimize_product_form(z, dims: BipartiteDims, e, f, iters=300, tol=1e-12):
    """Alternating minimisation of ``<e,f|z|e,f>`` from a batch of starts.

    Returns ``(e, f, values)``; each row is a local minimum (or the last iterate).
    Rows stop updating once their value changes by less than ``tol`` (relative).
    """
    m, n = dims.m, dims.n
    z4 = z.reshape(m, n, m, n)
    za = z4.transpose(0, 2, 1, 3).reshape(m * m, n, n)  # blocks over Bob for fixed (i, j)
    zb = z4.transpose(1, 3, 0, 2).reshape(n * n, m, m)
    e = e / np.linalg.norm(e, axis=1, keepdims=True)
    f = f / np.linalg.norm(f, axis=1, keepdims=True)
    val = np.full(e.shape[0], np.inf)
    live = np.arange(e.shape[0])
    scale = max(1.0, float(np.max(np.abs(z))))
    for _ in range(iters):
        if live.size == 0:
            break
        fl = f[live]
        ma = np.sum((za @ fl.T) * fl.conj().T[None], axis=1).T.reshape(-1, m, m)
        el = np.linalg.eigh(ma)[1][:, :, 0]
        mb = np.sum((zb @ el.T) * el.conj().T[None], axis=1).T.reshape(-1, n, n)
        wb, vb = np.linalg.eigh(mb)
        e[live] = el
        f[live] = vb[:, :, 0]
        moved = np.abs(val[live] - wb[:, 0]) > tol * scale
        val[live] = wb[:, 0]
        live = live[moved]
    return e, f, np.real(val)


def random_factors(rng, count, dims: BipartiteDims):
    e = rng.standard_normal((count, dims.m)) + 1j * rng.standard_normal((count, dims.m))
    f = rng.standard_normal((count, dims.n)) + 1j * rng.standard_normal((count, dims.n))
    return e / np.linalg.norm(e, axis=1, keepdims=True), f / np.linalg.norm(f, axis=1, keepdims=True)


def snap_to_range(cons, dims, e, f, rank_tol):
    """Drive product vectors into every constraint's range; return those that make it."""
    if not any(c.kernel.shape[1] for c in cons):
        return e, f
    q = np.zeros((dims.total, dims.total), complex)
    for c in cons:
        p = c.kernel @ c.kernel.conj().T
        q += partial_transpose(p, "A", dims) if c.conj else p
    e, f, _ = minimize_product_form(q, dims, e, f, iters=2000, tol=0.0)
    ok = kernel_residuals(cons, e, f) <= rank_tol
    return e[ok], f[ok]


def dedupe(e, f, tol=1e-9):
    keep = []
    vecs = kron_rows(e, f)
    for i in range(vecs.shape[0]):
        if all(abs(np.vdot(vecs[j], vecs[i])) < 1.0 - tol for j in keep):
            keep.append(i)
    return e[keep], f[keep]


def seed_candidates(mat, cons, dims, rng, count, rank_tol):
    """Leading Schmidt terms of range eigenvectors plus random product vectors, snapped."""
    w, u = np.linalg.eigh(mat)
    es, fs = [], []
    for k in range(u.shape[1]):
        if w[k] > rank_tol * w[-1]:
            uu, _, vh = np.linalg.svd(u[:, k].reshape(dims.m, dims.n))
            es.append(uu[:, 0])
            fs.append(vh[0])
    re, rf = random_factors(rng, count, dims)
    c0 = cons[0]
    if c0.kernel.shape[1]:
        # project onto the range and re-split, so seeding is not measure-zero
        pr = c0.basis @ c0.basis.conj().T
        v = kron_rows(re, rf) @ pr.T
        for row in v:
            uu, _, vh = np.linalg.svd(row.reshape(dims.m, dims.n))
            es.append(uu[:, 0])
            fs.append(vh[0])
    else:
        es.extend(re)
        fs.extend(rf)
    e = np.array(es).reshape(-1, dims.m)
    f = np.array(fs).reshape(-1, dims.n)
    e, f = snap_to_range(cons, dims, e, f, rank_tol)
    return dedupe(e, f)


@dataclass
class MasterResult:
    e: np.ndarray
    f: np.ndarray
    lam: np.ndarray
    converged: bool
    dual_estimate: float
    generated: int
    rounds: int


def column_generation(dims, cons, e, f, *, rank_tol, rng=None, generate=False, refine=True,
                      n_random=48, max_rounds=200, price_tol=1e-8, gap_tol=1e-7, batch=None,
                      price_iters=60, smoothing=0.8) -> MasterResult:
    """Fixed-set optimum, optionally enlarged by pricing new product vectors.

    Each round solves the master problem, builds the reduced-cost operator from
    its dual and searches product vectors with cost below one (from random
    starts, from the dual's low eigenvectors and, with ``refine``, from the
    current active vectors). Pricing first uses a blend of the current dual
    and the best one seen so far, and falls back to the plain current dual
    when the blend finds nothing. Stops when no vector prices below one or the
    estimated gap ``Tr(rho Z) / min price - sum(lam)`` drops below ``gap_tol``.
    """
    e = np.asarray(e, complex).reshape(-1, dims.m)
    f = np.asarray(f, complex).reshape(-1, dims.n)
    if e.shape[0] == 0 or all(c.rank == 0 for c in cons):
        return MasterResult(e[:0], f[:0], np.zeros(0), True, 0.0, 0, 0)
    batch = batch or 8 * dims.total
    price = generate or refine
    generated = 0
    converged = not price
    estimate = float("inf")
    best_duals = None
    rounds = 0
    ops = [c.basis @ np.diag(c.evals) @ c.basis.conj().T for c in cons]
    while True:
        rounds += 1
        lam, duals = master_solve(cons, e, f)
        if not price or rounds > max_rounds:
            break
        trials = [duals]
        if best_duals is not None and smoothing > 0:
            trials.insert(0, [smoothing * b + (1.0 - smoothing) * y for b, y in zip(best_duals, duals)])
        for use in trials:
            penalty = 1e4 * (1.0 + max(np.linalg.norm(y, 2) for y in use))
            z = pricing_operator(cons, use, dims, penalty)
            top = np.argsort(lam, kind="stable")[::-1][: 2 * dims.total]
            starts_e, starts_f = [e[top]], [f[top]]
            if generate and rng is not None:
                re, rf = random_factors(rng, n_random, dims)
                ze, zf = _eigen_starts(z, dims)
                starts_e += [re, ze]
                starts_f += [rf, zf]
            ne, nf, val = minimize_product_form(z, dims, np.concatenate(starts_e),
                                                np.concatenate(starts_f), iters=price_iters)
            low = float(np.min(val))
            if low > 0:
                est = float(np.real(sum(np.trace(y @ o) for y, o in zip(use, ops)))) / low
                if est < estimate:
                    estimate, best_duals = est, use
            good = val < 1.0 - price_tol
            if np.any(good):
                break
        if not np.any(good) or estimate - lam.sum() <= gap_tol:
            converged = True
            break
        order = np.argsort(val[good], kind="stable")
        ne, nf = snap_to_range(cons, dims, ne[good][order], nf[good][order], rank_tol)
        ne, nf = _novel(e, f, ne, nf)
        if ne.shape[0] == 0:
            converged = True
            break
        ne, nf = ne[:batch], nf[:batch]
        # keep the master small without changing its solution
        keep, _ = caratheodory_reduce(cons[0].basis, kron_rows(e, f), lam)
        e, f = np.concatenate([e[keep], ne]), np.concatenate([f[keep], nf])
        generated += ne.shape[0]
    keep = lam > 0
    return MasterResult(e[keep], f[keep], lam[keep], converged, estimate, generated, rounds)


def _eigen_starts(z, dims, count=None):
    # leading Schmidt terms of the lowest eigenvectors of the pricing operator
    _, u = np.linalg.eigh(z)
    count = count or min(u.shape[1], 2 * max(dims.m, dims.n))
    es, fs = [], []
    for k in range(count):
        uu, _, vh = np.linalg.svd(u[:, k].reshape(dims.m, dims.n))
        es.append(uu[:, 0])
        fs.append(vh[0])
    return np.array(es), np.array(fs)


def _novel(e, f, ne, nf, tol=1e-8):
    old = kron_rows(e, f)
    new = kron_rows(ne, nf)
    keep = []
    for i, v in enumerate(new):
        if np.max(np.abs(old.conj() @ v)) < 1.0 - tol and all(
                abs(np.vdot(new[j], v)) < 1.0 - tol for j in keep):
            keep.append(i)
    return ne[keep], nf[keep]


# -- exact post-processing ----------------------------------------------------------------


def caratheodory_reduce(basis, vecs, lam, cap=None, tol=1e-12):
    """Shrink a mixture of projectors to at most ``cap`` terms without changing it.

    ``vecs`` are rows; ``basis`` spans a subspace containing all of them. The
    weights move along null combinations of the projectors (whose weights sum
    to zero, since every projector has unit trace) until one weight vanishes;
    the remaining null directions are then cleared of that index.
    """
    r = basis.shape[1]
    cap = cap or r * r
    lam = np.array(lam, float)
    k = lam.size
    if k <= cap:
        return np.ones(k, bool), lam
    x = np.asarray(vecs) @ basis.conj()
    outer = x[:, :, None] * x[:, None, :].conj()
    m = np.concatenate([outer.real.reshape(k, -1), outer.imag.reshape(k, -1)], axis=1).T
    _, s, vt = np.linalg.svd(m)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    null = list(vt[rank:])
    alive = lam > 0
    while null and np.count_nonzero(alive) > cap:
        c = null.pop(0)
        c = np.where(alive, c, 0.0)
        if np.max(np.abs(c)) <= tol:
            continue
        if not np.any(c > tol):
            c = -c
        pos = np.flatnonzero((c > tol) & alive)
        i = pos[np.argmin(lam[pos] / c[pos])]
        lam = lam - (lam[i] / c[i]) * c
        lam[i] = 0.0
        alive[i] = False
        lam[~alive] = 0.0
        alive &= lam > tol * max(1.0, lam.max())
        null = [v - (v[i] / c[i]) * c for v in null]
    lam = np.clip(np.where(alive, lam, 0.0), 0.0, None)
    return alive, lam


def remainder_of(mat, vecs, lam):
    return mat - (vecs.T * lam) @ vecs.conj()


def clean(delta, floor: float) -> np.ndarray:
    """Zero the eigenvalues of ``delta`` below ``floor`` (including negative roundoff).

    Recomputing a maximal weight on ``clean(delta) + w P`` keeps ``P``'s vector
    exactly in the range; on the raw remainder, roundoff of size ``floor``
    divided by a small ``w`` can push it just outside.
    """
    w, u = np.linalg.eigh(0.5 * (delta + delta.conj().T))
    w = np.where(w > floor, w, 0.0)
    return (u * w) @ u.conj().T


def polish(mat, vecs, lam, single, pair, check, *, max_sweeps=20, sweep_tol=1e-12, prune=1e-12,
           floor=0.0):
    """Exact single and pair re-maximisation sweeps on a fixed vector list.

    ``single(delta, i)`` and ``pair(delta, i, j)`` return maximal weights on
    the add-back matrix ``delta``; ``check(delta)`` is the feasibility test a
    step must pass to be accepted. Pairs are visited lexicographically with a
    start offset that rotates every sweep. Returns ``(lam, sweeps, converged)``.
    """
    lam = np.array(lam, float)
    k = lam.size
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    delta = remainder_of(mat, vecs, lam)
    proj = [np.outer(v, v.conj()) for v in vecs]
    converged = False
    sweeps = 0
    dc = clean(delta, floor)
    for sweeps in range(1, max_sweeps + 1):
        before = lam.sum()
        for i in range(k):
            new = single(dc + lam[i] * proj[i], i)
            if new > lam[i]:
                trial = delta - (new - lam[i]) * proj[i]
                if check(trial):
                    lam[i], delta = new, trial
                    dc = clean(delta, floor)
        if pairs:
            off = (sweeps - 1) % len(pairs)
            for i, j in pairs[off:] + pairs[:off]:
                if lam[i] == 0.0 and lam[j] == 0.0:
                    continue
                a, b = pair(dc + lam[i] * proj[i] + lam[j] * proj[j], i, j)
                if a + b > lam[i] + lam[j]:
                    trial = delta - (a - lam[i]) * proj[i] - (b - lam[j]) * proj[j]
                    if check(trial):
                        lam[i], lam[j], delta = a, b, trial
                        dc = clean(delta, floor)
        small = (lam > 0) & (lam < prune)
        if np.any(small):
            lam[small] = 0.0
            delta = remainder_of(mat, vecs, lam)
            dc = clean(delta, floor)
        if lam.sum() - before < sweep_tol:
            converged = True
            break
    return lam, sweeps, converged
