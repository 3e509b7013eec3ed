import numpy as np
import pytest

from bsakit.errors import InvalidInput, RangeViolation
from bsakit.kernels import gram_matrix, manifold_residual, max_lambda, pair_max, pair_max_case, psd_margin
from bsakit.states import random_density, random_product_vector

from oracles import pair_grid_oracle, psd_boundary_bisection, random_range_member


@pytest.mark.parametrize("dims, rank", [((2, 2), 4), ((2, 3), 3), ((3, 3), 5)])
def test_max_lambda_matches_bisection(dims, rank):
    rng = np.random.default_rng(rank)
    for seed in range(5):
        rho = random_density(dims, rank, seed)
        psi = random_range_member(rho, rng)
        lam = max_lambda(rho, psi)
        assert abs(lam - psd_boundary_bisection(rho.mat, psi)) <= 1e-8
        assert psd_margin(rho.mat - lam * np.outer(psi, psi.conj())) >= -1e-9


def test_max_lambda_zero_outside_range():
    rho = random_density((2, 2), 2, 0)
    _, v = np.linalg.eigh(rho.mat)
    assert max_lambda(rho, v[:, 0]) == 0.0


def test_max_lambda_pure_state():
    rho = random_density((2, 2), 1, 3)
    psi = np.linalg.eigh(rho.mat)[1][:, -1]
    assert max_lambda(rho, psi) == pytest.approx(1.0, abs=1e-10)


def test_pair_max_matches_grid():
    for seed in range(8):
        rho = random_density((2, 2), 4, seed)
        a, b = random_product_vector((2, 2), 10 + seed).vector(), random_product_vector((2, 2), 20 + seed).vector()
        l1, l2 = pair_max(rho, a, b)
        grid = pair_grid_oracle([rho.mat], [np.outer(a, a.conj())], [np.outer(b, b.conj())],
                                max_lambda(rho, a), grid=200)
        assert l1 + l2 >= grid - 1e-5
        assert psd_margin(rho.mat - l1 * np.outer(a, a.conj()) - l2 * np.outer(b, b.conj())) >= -1e-9


def test_pair_branches():
    rho = random_density((2, 2), 2, 1)
    w, v = np.linalg.eigh(rho.mat)
    k0, k1, r0, r1 = v[:, 0], v[:, 1], v[:, 2], v[:, 3]
    assert pair_max_case(rho, k0, k1)[2] == "a"
    l1, l2, case = pair_max_case(rho, k0, r1)
    assert case == "b" and l1 == 0 and l2 == pytest.approx(w[3])
    # orthogonal eigenvectors: both weights are the eigenvalues
    l1, l2, case = pair_max_case(rho, r0, r1)
    assert case == "c"
    np.testing.assert_allclose([l1, l2], w[2:], rtol=1e-10)


def test_pair_generic_branch_is_d():
    rho = random_density((2, 2), 4, 2)
    a, b = random_product_vector((2, 2), 5).vector(), random_product_vector((2, 2), 6).vector()
    assert pair_max_case(rho, a, b)[2] in {"d", "e"}


def test_pair_rejects_collinear():
    psi = random_product_vector((2, 2), 1).vector()
    with pytest.raises(InvalidInput):
        pair_max(random_density((2, 2), 4, 0), psi, 1j * psi)


def test_gram_and_manifold_minor_expansion():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        d = g @ g.conj().T
        lam = rng.uniform(0.1, 1.0, n)
        if n == 2:
            expansion = 1 - lam[0] * d[0, 0] - lam[1] * d[1, 1] + lam[0] * lam[1] * (d[0, 0] * d[1, 1] - abs(d[0, 1]) ** 2)
        else:
            minors = [lam[i] * lam[j] * (d[i, i] * d[j, j] - abs(d[i, j]) ** 2) for i in range(3) for j in range(i + 1, 3)]
            expansion = 1 - sum(lam * np.diag(d)) + sum(minors) - np.prod(lam) * np.linalg.det(d)
        assert abs(manifold_residual(d, lam) - np.real(expansion)) <= 1e-12 * max(1.0, abs(expansion))


def test_gram_range_violation():
    rho = random_density((2, 2), 2, 0)
    ker = np.linalg.eigh(rho.mat)[1][:, 0]
    with pytest.raises(RangeViolation) as err:
        gram_matrix(rho, [np.linalg.eigh(rho.mat)[1][:, 3], ker])
    assert err.value.index == 1


def test_gram_entries():
    rho = random_density((2, 3), 6, 4)
    vs = [random_product_vector((2, 3), s).vector() for s in range(3)]
    d = gram_matrix(rho, vs)
    inv = np.linalg.inv(rho.mat)
    np.testing.assert_allclose(d, [[np.vdot(a, inv @ b) for b in vs] for a in vs], rtol=1e-10)
