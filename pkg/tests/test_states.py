import numpy as np
import pytest

from bsakit.errors import InvalidInput
from bsakit.states import (QUBITS, BipartiteDims, DensityMatrix, ProductVector, bell_state, is_ppt,
                           leading_product, local_unitary, partial_transpose, pure_density, random_density,
                           random_product_vector, random_unitary, schmidt_coefficients, werner)


def test_density_invariants_named():
    with pytest.raises(InvalidInput, match="trace"):
        DensityMatrix(np.eye(4), QUBITS)
    with pytest.raises(InvalidInput, match="positivity"):
        DensityMatrix(np.diag([1.2, -0.2, 0, 0]), QUBITS)
    with pytest.raises(InvalidInput, match="dimension"):
        DensityMatrix(np.eye(3) / 3, QUBITS)


def test_kronecker_order():
    # |0>_A |1>_B sits at index 0 * n + 1
    dims = BipartiteDims(2, 3)
    pv = ProductVector(np.array([1, 0]), np.array([0, 1, 0]))
    assert np.argmax(np.abs(pv.vector())) == 1
    pv = ProductVector(np.array([0, 1]), np.array([0, 0, 1]))
    assert np.argmax(np.abs(pv.vector())) == 1 * 3 + 2
    assert pv.dims == dims


def test_partial_transposes_share_spectrum():
    for dims in [(2, 2), (2, 3), (3, 3)]:
        rho = random_density(dims, int(np.prod(dims)), 11)
        a = np.linalg.eigvalsh(partial_transpose(rho, "A"))
        b = np.linalg.eigvalsh(partial_transpose(rho, "B"))
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_partial_transpose_of_product_projector():
    rng = np.random.default_rng(5)
    for dims in [(2, 2), (2, 3), (3, 2), (3, 3)]:
        pv = random_product_vector(dims, rng)
        np.testing.assert_allclose(partial_transpose(pv.projector(), "A", dims), pv.conj_alice().projector(),
                                   atol=1e-14)


def test_partial_transpose_is_involution():
    rho = random_density((2, 3), 6, 0)
    twice = partial_transpose(partial_transpose(rho), "A", rho.dims)
    np.testing.assert_allclose(twice, rho.mat, atol=1e-15)


def test_werner_ppt_threshold():
    for p in np.linspace(0, 1, 31):
        assert is_ppt(werner(p)) == (p <= 1 / 3 + 1e-9)
    assert is_ppt(werner(1 / 3))
    assert not is_ppt(bell_state())


def test_werner_rejects_bad_p():
    with pytest.raises(InvalidInput):
        werner(1.2)


def test_random_density_rank_and_determinism():
    rho = random_density((2, 2), 3, 42)
    np.testing.assert_array_equal(rho.mat, random_density((2, 2), 3, 42).mat)
    w = np.linalg.eigvalsh(rho.mat)
    assert np.sum(w > 1e-10) == 3
    assert random_density((2, 2), 1, 7).purity() == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(InvalidInput):
        random_density((2, 2), 5, 0)


def test_random_product_vector_haar_moment():
    rng = np.random.default_rng(0)
    vals = [abs(random_product_vector((2, 2), rng).e[0]) ** 2 for _ in range(10000)]
    assert abs(np.mean(vals) - 0.5) < 0.02


def test_product_vector_normalizes_and_fixes_phase():
    pv = ProductVector(np.array([0, 2j]), np.array([3, 4]))
    np.testing.assert_allclose(pv.e, [0, 1])
    np.testing.assert_allclose(pv.f, [0.6, 0.8])
    with pytest.raises(InvalidInput):
        ProductVector(np.zeros(2), np.array([1, 0]))


def test_schmidt_and_leading_product():
    psi = np.array([0.8, 0, 0, 0.6])
    np.testing.assert_allclose(schmidt_coefficients(psi, QUBITS), [0.8, 0.6])
    pv = leading_product(psi, QUBITS)
    assert abs(np.vdot(pv.vector(), psi)) == pytest.approx(0.8)
    rho = pure_density(psi, QUBITS)
    assert rho.purity() == pytest.approx(1.0)


def test_local_unitary_preserves_spectrum():
    rng = np.random.default_rng(4)
    rho = random_density((2, 3), 6, 3)
    out = local_unitary(rho, random_unitary(2, rng), random_unitary(3, rng))
    np.testing.assert_allclose(np.linalg.eigvalsh(out.mat), np.linalg.eigvalsh(rho.mat), atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(partial_transpose(out)),
                               np.linalg.eigvalsh(partial_transpose(rho)), atol=1e-12)
