import numpy as np
import pytest

from openxxz.bethe import direct_value
from openxxz.funceq import (asymptotic_coefficient, asymptotic_operator, asymptotic_operators,
                            coefficients, commutation_defects, convention_calibration, equation_residual,
                            equation_terms, exchange_sides, jj_vacuum, closed_vacuum_sum, residue_cancellation,
                            scaled_limit, verify_exchange_relation)
from openxxz.numkernel import SpectralSets, relerr

from _draws import cpoint, draw, params

KINDS = ("typeA", "typeD")


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n,L", [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)])
def test_direct_satisfies_equations(kind, n, L):
    p, s = draw(n, L, 41)
    lam0 = cpoint(np.random.default_rng(n + L))
    assert equation_residual(kind, lam0, s, None, p) < 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_independent_of_hbar(kind):
    p, s = draw(2, 2, 3)
    lam0 = 0.37 - 0.21j
    r1 = equation_residual(kind, lam0, s, None, p)
    r2 = equation_residual(kind, lam0, s, None, p.replace(hbar=p.hbar + 0.4 - 0.3j))
    assert r1 < 1e-10 and r2 < 1e-10
    # S_n itself does not see hbar
    assert direct_value(s.X, s.Y, p) == pytest.approx(
        direct_value(s.X, s.Y, p.replace(hbar=0.2 + 0.1j)), rel=1e-13)


@pytest.mark.parametrize("kind", KINDS)
def test_constant_evaluator_fails(kind):
    p, s = draw(2, 2, 6)
    assert equation_residual(kind, 0.4 + 0.3j, s, lambda X, Y, q: 1.0, p) > 1e-3


def test_m0_vanishes_when_sets_coincide():
    p, s = draw(2, 2, 8)
    same = SpectralSets(s.Y, s.Y)
    for kind in KINDS:
        assert abs(coefficients(kind, 0.21 + 0.4j, same, p).M0) < 1e-14


def test_typeA_m0_vanishes_at_minus_h():
    p, s = draw(2, 3, 9)
    assert abs(coefficients("typeA", -p.h, s, p).M0) < 1e-12


def test_terms_layout():
    p, s = draw(2, 2, 10)
    assert equation_terms("typeA", 0.1j, s, p).shape == (5,)
    with pytest.raises(ValueError):
        coefficients("typeB", 0.1, s, p)


@pytest.mark.parametrize("k", [0, 1])
def test_residue_cancellation(k):
    p, s = draw(2, 2, 12)
    r = residue_cancellation(k, s, p)
    assert abs(r["res_M0"]) > 1e-8
    assert r["defect"] < 1e-10
    assert r["doubling_change"] < 1e-10


@pytest.mark.parametrize("kind", ["AB", "CA", "DB", "CD"])
@pytest.mark.parametrize("n,L", [(1, 1), (2, 2), (2, 3), (3, 3)])
def test_exchange_relations(kind, n, L):
    p = params(L, 50 + n)
    rng = np.random.default_rng([n, L])
    Z = [cpoint(rng) for _ in range(n)]
    assert verify_exchange_relation(kind, cpoint(rng), Z, p) < 1e-10


@pytest.mark.parametrize("kind", ["DB", "CD"])
def test_plain_d_exchange_does_not_close(kind):
    p = params(2, 3)
    assert verify_exchange_relation(kind, 0.2 + 0.3j, [0.5 - 0.1j, -0.3 + 0.6j], p, printed=True) > 1e-3


def test_ca_is_transpose_of_ab():
    # C(x) = B(x)^T once mu -> -mu, so the two relations carry the same content
    p = params(2, 4)
    neg = p.replace(mu=tuple(-m for m in p.mu))
    lam0, Z = 0.1 + 0.2j, [0.4 - 0.3j]
    lhs_ab, rhs_ab = exchange_sides("AB", lam0, Z, p)
    lhs_ca, rhs_ca = exchange_sides("CA", lam0, Z, neg)
    assert relerr(lhs_ab.T, lhs_ca) < 1e-12
    assert relerr(rhs_ab.T, rhs_ca) < 1e-12


def test_exchange_needs_room():
    with pytest.raises(ValueError):
        verify_exchange_relation("AB", 0.1, [0.2, 0.3], params(1, 0))


@pytest.mark.parametrize("conv", ["calibrated", "printed"])
@pytest.mark.parametrize("L", [2, 3])
def test_asymptotic_ordering_rules(conv, L):
    d = commutation_defects(params(L, 60), conv)
    assert max(d.values()) < 1e-10


@pytest.mark.parametrize("L", [1, 2, 3])
def test_calibrated_convention_reproduces_dense_limit(L):
    p = params(L, 61)
    cal = convention_calibration(p)
    assert max(cal["calibrated"].values()) < 1e-5
    if L > 1:
        assert max(cal["printed"].values()) > 1e-2
        half = convention_calibration(p, khalf=True)
        assert max(half["calibrated"].values()) > 1e-2


def test_asymptotic_operator_shape():
    p = params(2, 62)
    assert asymptotic_operator("B", p).shape == (4, 4)
    assert asymptotic_operators(p).K[0, 0] == pytest.approx(p.q)


@pytest.mark.parametrize("n,L", [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)])
def test_closed_sum_against_operators(n, L):
    p = params(L, 63)
    ref = closed_vacuum_sum(n, p)
    for conv in ("calibrated", "printed"):
        for route in ("power", "ordered"):
            assert abs(jj_vacuum(n, p, conv, route) - ref) < 1e-10 * abs(ref)


def test_printed_closed_sum_only_for_one_magnon():
    p = params(3, 64)
    assert closed_vacuum_sum(1, p, printed=True) == pytest.approx(closed_vacuum_sum(1, p), rel=1e-12)
    assert abs(closed_vacuum_sum(2, p, printed=True) / closed_vacuum_sum(2, p) - 1) > 1e-3


@pytest.mark.parametrize("n,L", [(1, 2), (2, 2)])
def test_large_lambda_limit(n, L):
    p = params(L, 65)
    pred = asymptotic_coefficient(n, p)
    for re in (8.0, 10.0):
        assert abs(scaled_limit(n, p, re) / pred - 1) < 1e-4


def test_coefficient_bounds():
    with pytest.raises(ValueError):
        asymptotic_coefficient(3, params(2, 0))
