import json

import numpy as np
import pytest

from bsakit import io
from bsakit.bsa import SolverOptions, bsa_solve
from bsakit.errors import NotPpt, InvalidInput
from bsakit.kernels import psd_margin
from bsakit.ppt_bsa import (PptBsaDecomposition, edge_state_gap, ppt_bsa_solve, ppt_max_lambda, ppt_osa_fixed_set,
                            ppt_pair_max, verify_ppt_optimality)
from bsakit.states import DensityMatrix, partial_transpose, random_density, random_product_vector, werner

from oracles import pair_grid_oracle, ppt_mixture, psd_boundary_bisection

FAST = SolverOptions(multistart=1)


def test_rejects_npt_input():
    with pytest.raises(NotPpt):
        ppt_bsa_solve(werner(0.6))
    with pytest.raises(NotPpt):
        ppt_max_lambda(werner(0.6), random_product_vector((2, 2), 0))


def test_single_is_min_of_two_bisections():
    for seed, dims in enumerate([(2, 2), (2, 3), (3, 3)]):
        rho = ppt_mixture(dims, seed)
        pv = random_product_vector(dims, 50 + seed)
        pt = partial_transpose(rho)
        expect = min(psd_boundary_bisection(rho.mat, pv.vector()), psd_boundary_bisection(pt, pv.conj_alice().vector()))
        assert ppt_max_lambda(rho, pv) == pytest.approx(expect, abs=1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_pair_matches_grid(seed):
    dims = [(2, 2), (2, 3), (3, 3)][seed % 3]
    rho = ppt_mixture(dims, seed)
    pv1, pv2 = random_product_vector(dims, 100 + seed), random_product_vector(dims, 200 + seed)
    l1, l2, case = ppt_pair_max(rho, pv1, pv2)
    pt = partial_transpose(rho)
    grid = pair_grid_oracle([rho.mat, pt], [pv1.projector(), pv1.conj_alice().projector()],
                            [pv2.projector(), pv2.conj_alice().projector()], ppt_max_lambda(rho, pv1))
    assert l1 + l2 >= grid - 1e-5
    assert psd_margin(rho.mat - l1 * pv1.projector() - l2 * pv2.projector()) >= -1e-9
    assert psd_margin(pt - l1 * pv1.conj_alice().projector() - l2 * pv2.conj_alice().projector()) >= -1e-9
    assert case.case_id


def test_self_transposed_pair_agrees_with_plain():
    # real product vectors and a real symmetric partial transpose -> same kernel answer
    rho_r = np.real(ppt_mixture((2, 2), 3).mat)
    rho = DensityMatrix((rho_r + partial_transpose(rho_r, "A", (2, 2))) / 2, (2, 2))
    rng = np.random.default_rng(0)
    e1, f1, e2, f2 = (rng.normal(size=2) for _ in range(4))
    from bsakit.states import ProductVector
    from bsakit.kernels import pair_max
    pv1, pv2 = ProductVector(e1, f1), ProductVector(e2, f2)
    l1, l2, _ = ppt_pair_max(rho, pv1, pv2)
    np.testing.assert_allclose([l1, l2], pair_max(rho, pv1.vector(), pv2.vector()), atol=1e-9)


def test_qubit_ppt_states_are_separable():
    rho = ppt_mixture((2, 2), 4)
    dec = ppt_bsa_solve(rho, FAST, edge_restarts=0)
    assert dec.lam == pytest.approx(1.0, abs=1e-5)


def test_upb_fixture_is_edge_state():
    rho = io.load_upb_fixture()
    dec = ppt_bsa_solve(rho, FAST, edge_restarts=32)
    assert dec.lam < 1e-3
    assert dec.remainder_ppt
    assert dec.edge_gap > 1e-4


def test_remainder_stays_ppt_on_mixture():
    upb = io.load_upb_fixture()
    rho = DensityMatrix(0.9 * upb.mat + 0.1 * np.eye(9) / 9, (3, 3))
    dec = ppt_bsa_solve(rho, FAST, edge_restarts=16)
    assert 0 < dec.lam < 1
    assert dec.remainder_ppt
    assert np.linalg.eigvalsh(partial_transpose(dec.remainder))[0] >= -1e-9
    assert np.linalg.eigvalsh(dec.remainder.mat)[0] >= -1e-9
    rep = verify_ppt_optimality(rho, dec, trials=0, opts=FAST)
    assert rep.singles_maximal


def test_ppt_weight_never_exceeds_plain():
    rho = ppt_mixture((2, 3), 1)
    cands = [random_product_vector((2, 3), 70 + s) for s in range(5)]
    from bsakit.bsa import osa_fixed_set
    assert ppt_osa_fixed_set(rho, cands).lam <= osa_fixed_set(rho, cands).lam + 1e-8


def test_json_fields_and_round_trip():
    dec = ppt_bsa_solve(io.load_upb_fixture(), FAST, edge_restarts=4)
    obj = json.loads(json.dumps(dec.to_dict()))
    assert obj["remainder_ppt"] is True and isinstance(obj["edge_gap"], float)
    back = PptBsaDecomposition.from_dict(obj)
    assert back.edge_gap == dec.edge_gap


def test_edge_gap_zero_with_product_in_range():
    assert edge_state_gap(random_density((2, 2), 3, 1)) == pytest.approx(0.0, abs=1e-8)
