import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrcat.hilbert import (
    C1,
    KPO1,
    KPO2,
    BasisError,
    ModeSpec,
    TruncationWarning,
    cat_normalizers,
    cat_states,
    coherent_state,
    embed,
    fock_annihilation,
    kpo_eigen_truncation,
    kpo_hamiltonian,
    make_basis,
    partial_trace,
)


def test_annihilation_ladder():
    a = fock_annihilation(8)
    n = a.conj().T @ a
    np.testing.assert_allclose(np.diag(n), np.arange(8), atol=1e-14)
    comm = a @ a.conj().T - a.conj().T @ a
    # [a, a^dag] = 1 except in the last truncated level
    np.testing.assert_allclose(np.diag(comm)[:-1], 1, atol=1e-14)


@given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
@settings(max_examples=30, deadline=None)
def test_coherent_state_is_eigenvector_of_a(re, im):
    alpha = complex(re, im)
    psi = coherent_state(alpha, 50)
    a = fock_annihilation(50)
    assert abs(np.vdot(psi, psi) - 1) < 1e-12
    resid = a @ psi - alpha * psi
    # the truncated top level breaks the eigen-relation only at negligible weight
    assert np.linalg.norm(resid[:-1]) < 1e-10


def test_coherent_overlap_closed_form():
    a, b = 1.3, -0.7
    ov = np.vdot(coherent_state(a, 40), coherent_state(b, 40))
    assert abs(ov - math.exp(-0.5 * (a - b) ** 2)) < 1e-13


def test_truncation_warning_for_tiny_cutoff():
    with pytest.warns(TruncationWarning):
        coherent_state(3.0, 6)


def test_cat_states_orthonormal_and_normalizers():
    plus, minus = cat_states(2.0, 30)
    assert abs(np.vdot(plus, minus)) < 1e-13
    assert abs(np.linalg.norm(plus) - 1) < 1e-13
    n_plus, n_minus = cat_normalizers(2.0)
    assert math.isclose(n_plus, 1 / math.sqrt(2 * (1 + math.exp(-8))), rel_tol=1e-14)
    assert math.isclose(n_minus, 1 / math.sqrt(2 * (1 - math.exp(-8))), rel_tol=1e-14)


def test_cats_are_top_degenerate_levels(params):
    H = kpo_hamiltonian(params.K, params.p, 30)
    e = np.linalg.eigvalsh(H)
    # H = -(K/2)(a^2+ - alpha^2)(a^2 - alpha^2) + K alpha^4 / 2 annihilates both cats exactly
    assert abs(e[-1] - params.K * params.alpha**4 / 2) / params.K < 1e-10
    assert abs(e[-1] - e[-2]) / params.K < 1e-10
    assert (e[-2] - e[-3]) / params.K > 6


def test_eigen_truncation_orders_cats_first(params):
    T, a_proj, energies = kpo_eigen_truncation(params.K, params.p, ModeSpec("kpo-eigen", 30, 6))
    plus, minus = cat_states(params.alpha, 30)
    assert abs(abs(np.vdot(T[:, 0], plus)) - 1) < 1e-6
    assert abs(abs(np.vdot(T[:, 1], minus)) - 1) < 1e-6
    np.testing.assert_allclose(T.conj().T @ T, np.eye(6), atol=1e-12)
    assert a_proj.shape == (6, 6)
    assert np.all(np.diff(energies) <= 1e-6 * params.K)


def test_eigen_truncation_rejects_unconverged_cutoff(params):
    with pytest.raises(BasisError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            kpo_eigen_truncation(params.K, params.p, ModeSpec("kpo-eigen", 8, 4))


def test_modespec_validation():
    with pytest.raises(BasisError):
        ModeSpec("kpo-eigen", 4, 6)
    with pytest.raises(BasisError):
        ModeSpec("qubit", 4, 4)


def test_composite_dims_and_embedding(params):
    basis = make_basis(params.K, params.p, 30, 4, 3)
    assert basis.dims == (4, 4, 3, 3)
    assert basis.total_dim == 144
    a1 = basis.embed(basis.annihilation(C1), C1)
    a2 = embed(basis.annihilation(KPO2), KPO2, basis)
    comm = a1 @ a2 - a2 @ a1
    assert abs(comm).max() < 1e-14


def test_partial_trace_of_product(rng=np.random.default_rng(3)):
    dims = (2, 3, 2)
    parts = []
    for d in dims:
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        parts.append(np.outer(v, v.conj()) / np.vdot(v, v).real)
    rho = np.kron(np.kron(parts[0], parts[1]), parts[2])
    np.testing.assert_allclose(partial_trace(rho, [1], dims), parts[1], atol=1e-14)
    np.testing.assert_allclose(partial_trace(rho, [0, 2], dims), np.kron(parts[0], parts[2]), atol=1e-14)


def test_product_state_is_normalized_kron(params):
    basis = make_basis(params.K, params.p, 30, 4, 3)
    plus, _ = cat_states(params.alpha, 30)
    psi = basis.product_state([plus, plus, basis.vacuum(C1), basis.vacuum(C1)])
    assert abs(np.linalg.norm(psi) - 1) < 1e-6
    assert basis.to_retained(KPO1, plus).shape == (4,)


def test_projected_annihilation_matches_two_level_form(params):
    from kerrcat.analysis import two_level_annihilation

    _, a_proj, _ = kpo_eigen_truncation(params.K, params.p, ModeSpec("kpo-eigen", 30, 6))
    np.testing.assert_allclose(a_proj[:2, :2], two_level_annihilation(params.alpha), atol=1e-6)


def test_full_keep_reproduces_fock_matrix_elements(params):
    T, a_proj, _ = kpo_eigen_truncation(params.K, params.p, ModeSpec("kpo-eigen", 30, 30))
    a = fock_annihilation(30)
    np.testing.assert_allclose(T @ a_proj @ T.conj().T, a, atol=1e-12)
