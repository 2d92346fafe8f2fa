import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openxxz.algebra import (PERM, SZ, bc_from_single_row, crossing_unitarity, d_tilde, double_row_monodromy,
                             double_row_reference, dual_map, dual_reflection_residual, hamiltonian,
                             hamiltonian_from_transfer, k_dual, k_matrix, lambda_A, lambda_Dtilde,
                             magnon_number, r_matrix, reflection_residual, sector_leakage,
                             single_row_monodromy, site_operator, transfer_matrix, transfer_matrix_trace,
                             unitarity_residual, ybe_residual)
from openxxz.bethe import highest_weight
from openxxz.numkernel import DimensionLimitError, ModelParams, fn_c, relerr

from _draws import cpoint, params

seeds = st.integers(0, 2 ** 20)


def test_r_at_zero_is_permutation():
    p = params(1, 0)
    assert np.allclose(r_matrix(0, p), fn_c(p) * PERM)


def test_k_examples():
    p = params(1, 1)
    assert np.allclose(k_matrix(0, p), np.sinh(p.h) * np.eye(2))
    assert np.allclose(k_dual(-p.gamma, p), np.sinh(p.hbar) * np.eye(2))
    assert np.allclose(dual_map(k_matrix, 0.3, p), k_dual(0.3, p))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_small_space_identities(seed):
    rng = np.random.default_rng(seed)
    p = params(1, seed)
    l1, l2 = cpoint(rng), cpoint(rng)
    assert ybe_residual(l1, l2, p) < 1e-12
    assert reflection_residual(l1, l2, p) < 1e-12
    assert dual_reflection_residual(l1, l2, p) < 1e-12
    assert unitarity_residual(l1, p) < 1e-12
    assert crossing_unitarity(l1, p)[1] < 1e-12


def test_crossing_constant_closed_form():
    p = params(1, 3)
    lam = 0.4 - 0.7j
    c, _ = crossing_unitarity(lam, p)
    g = p.gamma
    assert c == pytest.approx(np.sinh(lam) * np.sinh(-lam - 2 * g), rel=1e-12)


@pytest.mark.parametrize("L", [1, 2, 3])
def test_block_product_matches_kronecker_reference(L):
    p = params(L, 5)
    lam = 0.3 + 0.2j
    assert relerr(double_row_monodromy(lam, p).full(), double_row_reference(lam, p)) < 1e-13


@pytest.mark.parametrize("L", [2, 3])
def test_commutation(L):
    p = params(L, 7)
    rng = np.random.default_rng(L)
    l1, l2 = cpoint(rng), cpoint(rng)
    m1, m2 = double_row_monodromy(l1, p), double_row_monodromy(l2, p)
    assert relerr(m1.B @ m2.B, m2.B @ m1.B) < 1e-12
    assert relerr(m1.C @ m2.C, m2.C @ m1.C) < 1e-12
    T1, T2 = transfer_matrix(l1, p), transfer_matrix(l2, p)
    assert relerr(T1 @ T2, T2 @ T1) < 1e-12


@pytest.mark.parametrize("L", [1, 2, 3])
def test_c_is_transpose_of_b_with_mu_reversed(L):
    p = params(L, 11)
    lam = -0.2 + 0.5j
    neg = p.replace(mu=tuple(-m for m in p.mu))
    B = double_row_monodromy(lam, p).B
    C = double_row_monodromy(lam, neg).C
    assert relerr(B.T, C) < 1e-12


@pytest.mark.parametrize("L", [1, 2, 3])
def test_bc_from_single_row(L):
    p = params(L, 13)
    lam = 0.6 - 0.1j
    m = double_row_monodromy(lam, p)
    B, C = bc_from_single_row(lam, p)
    assert relerr(B, m.B) < 1e-12 and relerr(C, m.C) < 1e-12


@pytest.mark.parametrize("L", [2, 3])
def test_single_row_transposes(L):
    p = params(L, 17)
    lam = 0.25 + 0.35j
    A, B, C, D, Ab, Bb, Cb, Db = single_row_monodromy(lam, p)
    neg = p.replace(mu=tuple(-m for m in p.mu))
    A2, B2, C2, D2, Ab2, Bb2, Cb2, Db2 = single_row_monodromy(lam, neg)
    assert relerr(A.T, Ab2) < 1e-12
    assert relerr(B.T, Cb2) < 1e-12
    assert relerr(D.T, Db2) < 1e-12


def test_transfer_matrix_trace_agrees():
    p = params(3, 19)
    lam = 0.1 + 0.9j
    assert relerr(transfer_matrix(lam, p), transfer_matrix_trace(lam, p)) < 1e-13


@pytest.mark.parametrize("L", [1, 2, 3])
def test_vacuum_eigenvalues(L):
    p = params(L, 23)
    lam = -0.4 + 0.3j
    m = double_row_monodromy(lam, p)
    v = highest_weight(L)
    assert relerr(m.A @ v, lambda_A(lam, p) * v) < 1e-12
    assert relerr(d_tilde(lam, m, p) @ v, lambda_Dtilde(lam, p) * v) < 1e-12
    assert np.linalg.norm(m.C @ v) < 1e-12 * np.linalg.norm(m.A)


@pytest.mark.parametrize("L", [2, 3])
def test_sectors(L):
    p = params(L, 29)
    m = double_row_monodromy(0.7j, p)
    assert sector_leakage(m.A, L) < 1e-14
    assert sector_leakage(m.D, L) < 1e-14
    assert sector_leakage(m.B, L, 1) < 1e-14
    assert sector_leakage(m.C, L, -1) < 1e-14
    assert sector_leakage(transfer_matrix(0.2, p), L) < 1e-14


def test_magnon_number():
    assert list(magnon_number(2)) == [0, 1, 1, 2]


def test_site_operator_placement():
    Z1 = site_operator({0: SZ}, 2)
    assert np.allclose(Z1, np.kron(SZ, np.eye(2)))


def test_hamiltonian_is_symmetric_for_real_parameters():
    p = ModelParams(0.4, 0.9, -1.3, 4, (0.0,) * 4)
    H = hamiltonian(p)
    assert np.allclose(H, H.conj().T)
    assert np.allclose(H.imag, 0)


@pytest.mark.parametrize("L", [2, 3])
def test_hamiltonian_from_transfer(L):
    p = params(L, 31)
    H = hamiltonian(p)
    assert relerr(hamiltonian_from_transfer(p), H) < 1e-7


def test_dense_cap():
    p = ModelParams(0.4, 0.9, -1.3, 9, (0.0,) * 9)
    with pytest.raises(DimensionLimitError):
        double_row_monodromy(0.1, p)


def test_hamiltonian_difference_is_second_order():
    p = params(2, 37)
    H = hamiltonian(p)
    e1 = relerr(hamiltonian_from_transfer(p, 2e-2), H)
    e2 = relerr(hamiltonian_from_transfer(p, 1e-2), H)
    assert e1 / e2 == pytest.approx(4, rel=0.05)
