import math

import numpy as np
import pytest

from opcalc.errors import (ComplexityExceeded, DegenerateInput, DimensionMismatch,
                           InfeasibleExponents, NonUnitary)
from opcalc.expr import parse_symbol
from opcalc.linalg import HermitianOperator, eig_hermitian, func_calc, haar_unitary, random_hermitian, schatten_norm
from opcalc.moi import (HoelderTuple, MOIOperands, homomorphism_commutation_residual,
                        lipschitz_ratio, loewner_residual, moi_binned, moi_schur,
                        perturbation_residual, select_hoelder_exponents)
from opcalc.seeding import rng_for
from opcalc.symbols import divided_diff


def random_args(rng, n, count):
    return tuple(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                 for _ in range(count))


def test_constant_phi_gives_plain_product():
    rng = rng_for(0, "const")
    anchors = tuple(random_hermitian(rng, 5) for _ in range(3))
    x1, x2 = random_args(rng, 5, 2)
    out = moi_schur(None, MOIOperands(anchors, (x1, x2)), phi=np.ones((5, 5, 5)))
    assert np.linalg.norm(out - x1 @ x2) <= 1e-12 * np.linalg.norm(x1 @ x2)


def test_schur_multiplier_on_diagonal_anchors():
    lam = np.array([0.3, 1.1, 2.4])
    h = HermitianOperator(np.diag(lam))
    F = parse_symbol("exp(x)")
    rng = rng_for(1, "schur")
    x = random_args(rng, 3, 1)[0]
    out = moi_schur(F, MOIOperands((h, h), (x,)))
    phi = np.array([[divided_diff(F, [a, b]) for b in lam] for a in lam])
    assert np.allclose(out, phi * x, atol=1e-12)


def test_square_symbol_telescopes():
    rng = rng_for(2, "sq")
    X, Y = random_hermitian(rng, 5), random_hermitian(rng, 5)
    out = moi_schur(parse_symbol("x**2"), MOIOperands((X, Y), (X.data - Y.data,)))
    assert np.linalg.norm(out - (X.data @ X.data - Y.data @ Y.data)) <= 1e-12 * 10


def test_order_zero_is_functional_calculus():
    h = random_hermitian(rng_for(3, "n0"), 6)
    F = parse_symbol("tanh(x)")
    out = moi_schur(F, MOIOperands((h,), ()))
    assert np.allclose(out, func_calc(h, F).data, atol=1e-12)


def test_multilinearity():
    rng = rng_for(4, "lin")
    anchors = tuple(random_hermitian(rng, 4) for _ in range(3))
    x1, x2, y = random_args(rng, 4, 3)
    F = parse_symbol("x**4")
    a = moi_schur(F, MOIOperands(anchors, (x1, 2.5 * x2 + y)))
    b = (2.5 * moi_schur(F, MOIOperands(anchors, (x1, x2)))
         + moi_schur(F, MOIOperands(anchors, (x1, y))))
    assert np.linalg.norm(a - b) <= 1e-11 * max(np.linalg.norm(a), 1)


def test_adjoint_symmetry_first_order():
    rng = rng_for(5, "adj")
    A, B = random_hermitian(rng, 5), random_hermitian(rng, 5)
    x = random_args(rng, 5, 1)[0]
    F = parse_symbol("sin(x)")
    lhs = moi_schur(F, MOIOperands((A, B), (x,))).conj().T
    rhs = moi_schur(F, MOIOperands((B, A), (x.conj().T,)))
    assert np.linalg.norm(lhs - rhs) <= 1e-11 * max(np.linalg.norm(lhs), 1)


def test_degenerate_basis_independence():
    # double eigenvalue; rotate the eigenbasis inside the degenerate block
    rng = rng_for(6, "deg")
    lam = np.array([1.0, 1.0, 2.0, 3.0])
    v = haar_unitary(rng, 4)
    h = HermitianOperator((v * lam) @ v.conj().T)
    dec = eig_hermitian(h)
    q = np.eye(4, dtype=complex)
    q[:2, :2] = haar_unitary(rng, 2)
    dec_rot = type(dec)(eigenvalues=dec.eigenvalues, eigenvectors=dec.eigenvectors @ q)
    x = random_args(rng, 4, 1)[0]
    F = parse_symbol("exp(x)")
    out1 = moi_schur(F, MOIOperands((h, h), (x,)), decompositions=[dec, dec])
    out2 = moi_schur(F, MOIOperands((h, h), (x,)), decompositions=[dec_rot, dec_rot])
    assert np.linalg.norm(out1 - out2) <= 1e-10 * max(np.linalg.norm(out1), 1)


def test_schur_l2_bound():
    rng = rng_for(7, "bound")
    A, B = random_hermitian(rng, 6), random_hermitian(rng, 6)
    x = random_args(rng, 6, 1)[0]
    F = parse_symbol("tanh(x)")
    out = moi_schur(F, MOIOperands((A, B), (x,)))
    la, lb = np.linalg.eigvalsh(A.data), np.linalg.eigvalsh(B.data)
    sup = max(abs(divided_diff(F, [a, b])) for a in la for b in lb)
    assert schatten_norm(out, 2) <= sup * schatten_norm(x, 2) * (1 + 1e-12)


def test_cost_guard():
    rng = rng_for(8, "guard")
    anchors = tuple(random_hermitian(rng, 16) for _ in range(4))
    args = random_args(rng, 16, 3)
    with pytest.raises(ComplexityExceeded):
        moi_schur(parse_symbol("x**4"), MOIOperands(anchors, args), cost_cap=10)


def test_dimension_mismatch():
    rng = rng_for(9, "dim")
    with pytest.raises(DimensionMismatch):
        MOIOperands((random_hermitian(rng, 3), random_hermitian(rng, 4)),
                    (np.zeros((3, 3)),))


def test_anchor_continuity_spot_check():
    # perturbing an anchor by eps moves the output by O(eps)
    rng = rng_for(30, "cont")
    F = parse_symbol("sin(x)")
    a0, a1 = random_hermitian(rng, 6), random_hermitian(rng, 6)
    x = random_args(rng, 6, 1)[0]
    base = moi_schur(F, MOIOperands((a0, a1), (x,)))
    deltas = []
    for eps in (1e-2, 1e-3, 1e-4):
        da = random_hermitian(rng_for(30, "cont-d"), 6)
        pert = HermitianOperator(a0.data + eps * da.data)
        out = moi_schur(F, MOIOperands((pert, a1), (x,)))
        deltas.append(np.linalg.norm(out - base) / eps)
    # difference quotients stay bounded as eps -> 0
    assert max(deltas) <= 10 * min(deltas) + 1.0


# --- binned form ---------------------------------------------------------

def test_binned_exact_at_left_endpoints():
    lam = np.array([0.0, 0.25, 0.5, 1.0])
    h = HermitianOperator(np.diag(lam))
    rng = rng_for(10, "bin")
    x = random_args(rng, 4, 1)[0]
    F = parse_symbol("x**3")
    ops = MOIOperands((h, h), (x,))
    assert np.linalg.norm(moi_binned(F, ops, m=4) - moi_schur(F, ops)) <= 1e-12


def test_binned_constant_symbol_any_resolution():
    # constant symbol = divided-difference tensor identically one
    rng = rng_for(11, "binc")
    anchors = tuple(random_hermitian(rng, 5) for _ in range(2))
    x = random_args(rng, 5, 1)[0]
    ones = lambda spectra: np.ones(tuple(len(s) for s in spectra))
    for m in (3, 7, 50):
        out = moi_binned(None, MOIOperands(anchors, (x,)), m=m, phi_fn=ones)
        assert np.linalg.norm(out - x) <= 1e-11 * np.linalg.norm(x)


def test_binned_convergence_rate():
    F = parse_symbol("exp(x)")
    ms = [10, 20, 40, 80, 160]
    curves = []
    for seed in range(8):
        rng = rng_for(seed, "binned-rate")
        ops = MOIOperands((random_hermitian(rng, 6), random_hermitian(rng, 6)),
                          random_args(rng, 6, 1))
        exact = moi_schur(F, ops)
        curves.append([np.linalg.norm(moi_binned(F, ops, m=m) - exact) for m in ms])
    slope = np.polyfit(np.log(ms), np.log(np.mean(curves, axis=0)), 1)[0]
    assert -1.3 <= slope <= -0.7


def test_binned_monotone_dyadic():
    F = parse_symbol("sin(x)")
    rng = rng_for(12, "binm")
    ops = MOIOperands((random_hermitian(rng, 6), random_hermitian(rng, 6)),
                      random_args(rng, 6, 1))
    exact = moi_schur(F, ops)
    errs = [np.linalg.norm(moi_binned(F, ops, m=m) - exact) for m in (16, 32, 64)]
    assert errs[0] >= errs[1] * (1 - 1e-9) and errs[1] >= errs[2] * (1 - 1e-9)


# --- Loewner / perturbation ----------------------------------------------

def test_loewner_zero_for_equal():
    h = random_hermitian(rng_for(13, "l0"), 4)
    assert loewner_residual(parse_symbol("x**3"), h, h) <= 1e-14


def test_loewner_square():
    rng = rng_for(14, "l1")
    X, Y = random_hermitian(rng, 5), random_hermitian(rng, 5)
    assert loewner_residual(parse_symbol("x**2"), X, Y) <= 1e-11


def test_loewner_exp():
    rng = rng_for(15, "l2")
    X, Y = random_hermitian(rng, 4), random_hermitian(rng, 4)
    assert loewner_residual(parse_symbol("exp(x)"), X, Y) <= 1e-8


def test_perturbation_slots_polynomial():
    rng = rng_for(16, "p1")
    F = parse_symbol("x**3")
    A, B = random_hermitian(rng, 4), random_hermitian(rng, 4)
    anchors = [random_hermitian(rng, 4)]
    args = list(random_args(rng, 4, 1))
    for slot in (0, 1):
        assert perturbation_residual(F, slot, A, B, anchors, args) <= 1e-11


def test_perturbation_equal_anchors_zero():
    rng = rng_for(17, "p2")
    F = parse_symbol("x**4")
    A = random_hermitian(rng, 4)
    anchors = [random_hermitian(rng, 4)]
    args = list(random_args(rng, 4, 1))
    assert perturbation_residual(F, 0, A, A, anchors, args) == 0.0


def test_perturbation_order_zero_is_loewner():
    rng = rng_for(18, "p3")
    F = parse_symbol("x**3")
    A, B = random_hermitian(rng, 5), random_hermitian(rng, 5)
    assert perturbation_residual(F, 0, A, B, [], []) == pytest.approx(
        loewner_residual(F, A, B), abs=1e-13)


def test_perturbation_second_order():
    rng = rng_for(19, "p4")
    F = parse_symbol("x**4")
    A, B = random_hermitian(rng, 4), random_hermitian(rng, 4)
    anchors = [random_hermitian(rng, 4), random_hermitian(rng, 4)]
    args = list(random_args(rng, 4, 2))
    for slot in (0, 1, 2):
        assert perturbation_residual(F, slot, A, B, anchors, args) <= 1e-11


# --- Lipschitz ratios ------------------------------------------------------

def test_lipschitz_ratio_identity():
    rng = rng_for(20, "lr")
    X, Y = random_hermitian(rng, 5), random_hermitian(rng, 5)
    for p in (1, 2, math.inf):
        assert lipschitz_ratio(parse_symbol("x"), X, Y, p) == pytest.approx(1.0, rel=1e-10)


def test_lipschitz_ratio_commuting_abs():
    X = HermitianOperator(np.diag([0.5, -1.5, 2.0]))
    Y = HermitianOperator(np.diag([-0.25, 1.0, 0.5]))
    r = lipschitz_ratio(parse_symbol("abs(x)"), X, Y, 1)
    assert r <= 1.0 + 1e-10


def test_lipschitz_ratio_p2_bound():
    rng = rng_for(21, "lr2")
    X, Y = random_hermitian(rng, 6), random_hermitian(rng, 6)
    lam = np.concatenate([np.linalg.eigvalsh(X.data), np.linalg.eigvalsh(Y.data)])
    window = (lam.min() - 0.1, lam.max() + 0.1)
    sup = 2 * max(abs(window[0]), abs(window[1]))  # sup |2x| for F = x^2
    assert lipschitz_ratio(parse_symbol("x**2"), X, Y, 2) <= sup * (1 + 1e-8)


def test_lipschitz_ratio_degenerate():
    h = random_hermitian(rng_for(22, "lrd"), 3)
    with pytest.raises(DegenerateInput):
        lipschitz_ratio(parse_symbol("x"), h, h)


# --- homomorphism commutation ----------------------------------------------

def test_homomorphism_identity():
    rng = rng_for(23, "h0")
    ops = MOIOperands((random_hermitian(rng, 4), random_hermitian(rng, 4)),
                      random_args(rng, 4, 1))
    assert homomorphism_commutation_residual(parse_symbol("x**2"), 1, np.eye(4), ops) <= 1e-13


def test_homomorphism_permutation_diagonal():
    perm = np.eye(4)[[2, 0, 3, 1]]
    h = HermitianOperator(np.diag([0.1, 0.5, 1.0, 2.0]))
    rng = rng_for(24, "hp")
    ops = MOIOperands((h, h), random_args(rng, 4, 1))
    assert homomorphism_commutation_residual(parse_symbol("exp(x)"), 1, perm, ops) <= 1e-12


def test_homomorphism_haar_second_order():
    rng = rng_for(25, "hh")
    ops = MOIOperands(tuple(random_hermitian(rng, 5) for _ in range(3)),
                      random_args(rng, 5, 2))
    w = haar_unitary(rng, 5)
    assert homomorphism_commutation_residual(parse_symbol("x**3"), 2, w, ops) <= 1e-10


def test_homomorphism_rejects_non_unitary():
    rng = rng_for(26, "hn")
    ops = MOIOperands((random_hermitian(rng, 3), random_hermitian(rng, 3)),
                      random_args(rng, 3, 1))
    with pytest.raises(NonUnitary):
        homomorphism_commutation_residual(parse_symbol("x"), 1, np.diag([1.0, 2.0, 1.0]), ops)


# --- Hoelder exponents -------------------------------------------------------

def test_hoelder_tuple_validation():
    HoelderTuple((4.0, 4.0), 2.0)
    with pytest.raises(ValueError):
        HoelderTuple((4.0, 3.0), 2.0)


def test_hoelder_infinite_p():
    tup, rep = select_hoelder_exponents(2.5, math.inf, 2, [[1, 0], [0, 1]])
    assert all(math.isinf(p) for p in tup.p_list)


def test_hoelder_identity_and_smoothness():
    tup, rep = select_hoelder_exponents(1.5, 2.0, 1, [[1]])
    recs = sum(1.0 / p for p in tup.p_list)
    assert recs == pytest.approx(0.5, abs=1e-12)
    assert all(s_aux < 1.5 for s_aux in rep["s_aux"])
    assert rep["eps"][0] > 0


def test_hoelder_multi_alpha():
    tup, rep = select_hoelder_exponents(3.5, 2.0, 2, [[1, 0], [1, 1]])
    recs = sum(1.0 / p for p in tup.p_list)
    assert recs == pytest.approx(0.5, abs=1e-12)
    assert all(s < 3.5 for s in rep["s_aux"])


def test_hoelder_infeasible():
    with pytest.raises(InfeasibleExponents):
        select_hoelder_exponents(0.4, 2.0, 1, [[1]])  # s < d/p fails
    with pytest.raises(InfeasibleExponents):
        select_hoelder_exponents(1.5, 2.0, 1, [[1], [1]])  # K = 2 > floor(s)
