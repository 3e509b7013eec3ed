"""Acceptance criteria at the stated tolerances, sizes and runtime budgets."""

import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from bsakit import io
from bsakit.bsa import SolverOptions, bsa_solve, osa_fixed_set, uniqueness_check, verify_optimality
from bsakit.kernels import gram_matrix, manifold_residual, max_lambda, pair_max, psd_margin
from bsakit.linalg import range_kernel
from bsakit.measures import local_unitary_invariance_check, povm_monotonicity_check, random_local_povm
from bsakit.ppt_bsa import edge_state_gap, ppt_bsa_solve
from bsakit.states import (BipartiteDims, DensityMatrix, is_ppt, partial_transpose, random_density,
                           random_product_vector, random_unitary, werner)
from bsakit.twoqubit import concurrence, family_points, family_residuals

from oracles import ppt_mixture, product_mixture, psd_boundary_bisection, random_range_member

DIMS = [(2, 2), (2, 3), (3, 3)]


def _pair_oracle(rho, a, b, grid=200):
    """Grid over ``lam1`` with ``lam2`` by bisection, then a bounded refinement."""
    pa, pb = np.outer(a, a.conj()), np.outer(b, b.conj())

    def best_y(x):
        if np.linalg.eigvalsh(rho - x * pa)[0] < -1e-12:
            return -np.inf
        lo, hi = 0.0, 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if np.linalg.eigvalsh(rho - x * pa - mid * pb)[0] >= -1e-12 else (lo, mid)
        return lo

    top = psd_boundary_bisection(rho, a)
    xs = np.linspace(0.0, top, grid)
    vals = np.array([x + best_y(x) for x in xs])
    k = int(np.argmax(vals))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -(x + best_y(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        return max(vals[k], -res.fun)
    return vals[k]


def test_criterion_01_single_weight(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for i in range(100):
        dims = BipartiteDims(*DIMS[i % 3])
        rank = dims.total if i % 2 == 0 else int(rng.integers(1, dims.total))
        rho = random_density(dims, rank, 1000 + i)
        psi = random_range_member(rho, rng)
        worst = max(worst, abs(max_lambda(rho, psi) - psd_boundary_bisection(rho.mat, psi)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 10
    record_criterion(1, ok, f"max |lam - bisection| = {worst:.2e} over 100 states, {elapsed:.1f} s")
    assert ok


def test_criterion_02_pair_weights(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_gap, worst_psd = 0.0, np.inf
    for i in range(50):
        dims = BipartiteDims(*DIMS[i % 2])
        full = i % 4 < 2
        rho = random_density(dims, dims.total if full else dims.total - 1, 2000 + i)
        if full:
            a, b = random_product_vector(dims, rng).vector(), random_product_vector(dims, rng).vector()
        else:
            a, b = random_range_member(rho, rng), random_range_member(rho, rng)
        l1, l2 = pair_max(rho, a, b)
        worst_gap = max(worst_gap, abs(l1 + l2 - _pair_oracle(rho.mat, a, b)))
        worst_psd = min(worst_psd, psd_margin(rho.mat - l1 * np.outer(a, a.conj()) - l2 * np.outer(b, b.conj())))
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-5 and worst_psd >= -1e-9 and elapsed < 60
    record_criterion(2, ok, f"max |sum - grid| = {worst_gap:.2e}, min eig {worst_psd:.1e}, {elapsed:.1f} s")
    assert ok


def _connected(d, tol=1e-10):
    n = d.shape[0]
    seen, todo = {0}, [0]
    while todo:
        i = todo.pop()
        for j in range(n):
            if j not in seen and abs(d[i, j]) > tol:
                seen.add(j)
                todo.append(j)
    return len(seen) == n


def test_criterion_03_manifold(record_criterion):
    t0 = time.perf_counter()
    worst_res, solves = 0.0, 0
    for s in range(6):
        rho = random_density((2, 3), 6, 3000 + s)
        cands = [random_product_vector((2, 3), 3100 + 10 * s + k) for k in range(2 + s % 4)]
        dec = osa_fixed_set(rho, cands, SolverOptions(multistart=1))
        if not dec.converged or len(dec.weights) > 5:
            continue
        d = gram_matrix(rho, [pv.vector() for _, pv in dec.weights])
        if not _connected(d):
            continue
        solves += 1
        worst_res = max(worst_res, abs(manifold_residual(d, [w for w, _ in dec.weights])))
    rng = np.random.default_rng(3)
    worst_exp = 0.0
    for _ in range(50):
        for n in (2, 3):
            g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            d = g @ g.conj().T
            lam = rng.uniform(0, 1, n)
            if n == 2:
                exp = 1 - lam @ np.diag(d).real + lam[0] * lam[1] * np.linalg.det(d).real
            else:
                pairs = sum(lam[i] * lam[j] * (d[i, i] * d[j, j] - abs(d[i, j]) ** 2).real
                            for i in range(3) for j in range(i + 1, 3))
                exp = 1 - lam @ np.diag(d).real + pairs - np.prod(lam) * np.linalg.det(d).real
            worst_exp = max(worst_exp, abs(manifold_residual(d, lam) - exp) / max(1.0, abs(exp)))
    elapsed = time.perf_counter() - t0
    ok = solves > 0 and worst_res <= 1e-6 and worst_exp <= 1e-12 and elapsed < 5
    record_criterion(3, ok, f"{solves} solves, max |residual| = {worst_res:.2e}, "
                            f"minor expansion error {worst_exp:.1e}, {elapsed:.1f} s")
    assert ok


def test_criterion_04_werner(record_criterion):
    t0 = time.perf_counter()
    opts = SolverOptions(multistart=8)
    worst, worst_gain = 0.0, -np.inf
    for p in (0.4, 0.6, 0.8, 1.0):
        rho = werner(p)
        dec = bsa_solve(rho, opts)
        worst = max(worst, abs(dec.lam - 1.5 * (1 - p)))
        worst_gain = max(worst_gain, verify_optimality(rho, dec, trials=64).perturbation_gain)
    sep = max(abs(bsa_solve(werner(p), opts).lam - 1.0) for p in (0.0, 0.2, 1 / 3))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and worst_gain <= 1e-6 and sep <= 1e-6 and elapsed < 120
    record_criterion(4, ok, f"max |lam - 3(1-p)/2| = {worst:.1e}, gain {worst_gain:.1e}, "
                            f"separable |lam - 1| = {sep:.1e}, {elapsed:.1f} s")
    assert ok


def _qubit_state(seed):
    # mix of entangled, separable full-rank and rank-deficient states
    kind = seed % 5
    if kind == 0:
        return ppt_mixture((2, 2), seed)
    if kind == 1:
        return random_density((2, 2), 2 + seed % 3, seed)
    return random_density((2, 2), 4, seed)


def test_criterion_05_qubit_verdicts(record_criterion):
    t0 = time.perf_counter()
    opts = SolverOptions(multistart=1)
    mismatches, bad_remainders, entangled = [], [], 0
    for s in range(50):
        rho = _qubit_state(500 + s)
        dec = bsa_solve(rho, opts)
        verdicts = (dec.lam < 1 - 1e-4, concurrence(rho) > 1e-4, not is_ppt(rho))
        if len(set(verdicts)) != 1:
            mismatches.append(s)
        if dec.lam < 1 - 1e-4:
            entangled += 1
            rank = range_kernel(dec.remainder.mat, 1e-6)[0].rank
            if rank != 1 or dec.remainder.purity() < 1 - 1e-6:
                bad_remainders.append(s)
    elapsed = time.perf_counter() - t0
    ok = not mismatches and not bad_remainders and elapsed < 300
    record_criterion(5, ok, f"{entangled}/50 entangled, verdict mismatches {mismatches}, "
                            f"non-pure remainders {bad_remainders}, {elapsed:.1f} s")
    assert ok


def test_criterion_06_rank_bound(record_criterion):
    t0 = time.perf_counter()
    cases = [((2, 3), s) for s in range(4)] + [((3, 3), s) for s in range(3)]
    worst, failures, skipped, checked = [], [], [], 0
    for dims, s in cases:
        rho = random_density(dims, dims[0] * dims[1], 600 + s)
        dec = bsa_solve(rho, SolverOptions(multistart=1))
        if not dec.converged:
            gap = dec.report["dual_estimate"] - dec.lam
            skipped.append(f"{dims[0]}x{dims[1]}/s{s} gap {gap:.0e}")
            continue
        if dec.remainder is None:
            continue
        checked += 1
        rank = range_kernel(dec.remainder.mat, 1e-6)[0].rank
        bound = (dims[0] - 1) * (dims[1] - 1)
        worst.append(f"{dims[0]}x{dims[1]}:{rank}/{bound}")
        if rank > bound:
            failures.append((dims, s))
    elapsed = time.perf_counter() - t0
    ok = checked > 0 and not failures and elapsed < 300
    record_criterion(6, ok, f"{checked} converged solves, ranks {' '.join(worst)}; "
                            f"not converged: {', '.join(skipped) or 'none'}; {elapsed:.1f} s")
    assert ok


def test_criterion_07_uniqueness(record_criterion):
    t0 = time.perf_counter()
    spreads = [uniqueness_check(random_density((2, 2), 4, 700 + s), SolverOptions(multistart=1), starts=3)
               for s in range(20)]
    elapsed = time.perf_counter() - t0
    ok = max(spreads) <= 1e-4 and elapsed < 300
    record_criterion(7, ok, f"max trace-norm spread {max(spreads):.1e} over 20 states, {elapsed:.1f} s")
    assert ok


def test_criterion_08_ppt(record_criterion):
    t0 = time.perf_counter()
    upb = io.load_upb_fixture()
    dec = ppt_bsa_solve(upb, SolverOptions(multistart=2), edge_restarts=0)
    mins = (1.0, 1.0)
    if dec.remainder is not None:
        mins = (float(np.linalg.eigvalsh(dec.remainder.mat)[0]),
                float(np.linalg.eigvalsh(partial_transpose(dec.remainder))[0]))
    gap = edge_state_gap(dec.remainder, restarts=100) if dec.remainder is not None else 0.0
    qubit = [ppt_bsa_solve(ppt_mixture((2, 2), 800 + s), SolverOptions(multistart=1), edge_restarts=0).lam
             for s in range(5)]
    elapsed = time.perf_counter() - t0
    ok = (dec.lam < 1 - 1e-3 and min(mins) >= -1e-9 and gap > 1e-4
          and max(abs(1 - x) for x in qubit) <= 1e-5 and elapsed < 600)
    record_criterion(8, ok, f"UPB lam = {dec.lam:.2e}, remainder min eigs {mins[0]:.1e}/{mins[1]:.1e}, "
                            f"edge gap {gap:.3f}; 2x2 PPT max |1 - lam| = {max(abs(1 - x) for x in qubit):.1e}, "
                            f"{elapsed:.1f} s")
    assert ok


def test_criterion_09_range_family(record_criterion):
    t0 = time.perf_counter()
    worst, counts = 0.0, []
    for s in range(30):
        rho = product_mixture(900 + s)
        assert is_ppt(rho)
        pts = family_points(rho, 32)
        counts.append(len(pts))
        worst = max([worst] + [max(family_residuals(rho, p.pv)) for p in pts])
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and min(counts) == 32 and elapsed < 60
    record_criterion(9, ok, f"max residual {worst:.1e}, min points per state {min(counts)}/32, {elapsed:.1f} s")
    assert ok


def test_criterion_10_measure(record_criterion):
    t0 = time.perf_counter()
    opts = SolverOptions(multistart=1)
    slacks, idents, structural = [], [], 0
    for s in range(10):
        rho = werner(0.5 + 0.05 * s) if s % 2 == 0 else random_density((2, 2), 4, 1000 + s)
        parent = bsa_solve(rho, opts)
        for j in range(2):
            povm = random_local_povm(rho.dims, 2 + (s + j) % 3, seed=10 * s + j)
            rep = povm_monotonicity_check(rho, povm, opts, parent=parent)
            slacks.append(rep.slack)
            idents.append(rep.identity_residual)
            structural += rep.structural_violation
    rng = np.random.default_rng(10)
    lu = max(local_unitary_invariance_check(random_density((2, 2), 4, 1100 + s), random_unitary(2, rng),
                                            random_unitary(2, rng), opts) for s in range(3))
    elapsed = time.perf_counter() - t0
    ok = max(idents) <= 1e-8 and lu <= 1e-4 and min(slacks) >= -1e-3 and structural == 0 and elapsed < 600
    record_criterion(10, ok, f"identity {max(idents):.1e}, LU diff {lu:.1e}, min slack {min(slacks):.1e} "
                             f"over {len(slacks)} pairs, structural {structural}, {elapsed:.1f} s")
    assert ok
