import numpy as np
import pytest

from bsakit.bsa import SolverOptions, bsa_solve
from bsakit.errors import InvalidInput
from bsakit.measures import (LocalPovm, bsa_entanglement, local_unitary_invariance_check, povm_monotonicity_check,
                             pushed_through, random_local_povm)
from bsakit.states import BipartiteDims, random_density, random_unitary, werner

FAST = SolverOptions(multistart=1)


def test_entanglement_of_werner():
    assert bsa_entanglement(werner(0.6), FAST) == pytest.approx(0.4, abs=1e-6)
    assert bsa_entanglement(werner(0.2), FAST) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_random_povm_complete(k):
    povm = random_local_povm(BipartiteDims(2, 3), k, seed=k)
    assert len(povm) == k
    assert povm.completeness_residual() <= 1e-10


def test_povm_rejects_incomplete():
    with pytest.raises(InvalidInput, match="completeness"):
        LocalPovm([(np.eye(2) * 0.5, np.eye(2))])


def test_pushed_identity_holds_exactly():
    rho = random_density((2, 2), 4, 2)
    dec = bsa_solve(rho, FAST)
    povm = random_local_povm(rho.dims, 4, 1)
    total, ident = 0.0, 0.0
    for a, b in povm.elements:
        p, lam_i, e, f, w = pushed_through(dec, rho, a, b)
        total += p
        ident += p * (1 - lam_i)
        assert w.sum() == pytest.approx(lam_i)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert abs(ident - (1 - dec.lam)) <= 1e-8


def test_monotonicity_report():
    rho = werner(0.8)
    rep = povm_monotonicity_check(rho, random_local_povm(rho.dims, 3, 0), FAST)
    assert rep.identity_residual <= 1e-8
    assert rep.pushed_feasible
    assert rep.within_tolerance and not rep.structural_violation
    assert sum(p for p, _ in rep.outcome_measures) == pytest.approx(1.0, abs=1e-10)
    d = rep.to_dict()
    assert set(d) >= {"lhs", "rhs", "slack", "within_tolerance", "structural_violation"}


def test_local_unitary_invariance():
    rng = np.random.default_rng(3)
    rho = random_density((2, 2), 4, 5)
    diff = local_unitary_invariance_check(rho, random_unitary(2, rng), random_unitary(2, rng), FAST)
    assert diff <= 1e-4


def test_local_unitary_rejects_non_unitary():
    with pytest.raises(InvalidInput, match="unitary"):
        local_unitary_invariance_check(werner(0.5), np.eye(2) * 2, np.eye(2), FAST)
