import math

import numpy as np
import pytest

from opcalc.errors import NonHermitianInput, SymbolDomainError
from opcalc.expr import parse_symbol
from opcalc.linalg import (HermitianOperator, SchattenIndex, eig_hermitian, func_calc,
                           haar_unitary, random_hermitian, schatten_norm)
from opcalc.seeding import rng_for


def test_constructor_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_constructor_symmetrizes_tiny_asymmetry():
    a = np.eye(3) + 1e-15 * np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    h = HermitianOperator(a)
    assert np.allclose(h.data, h.data.conj().T)


def test_eig_diagonal_permutation():
    h = HermitianOperator(np.diag([3.0, 1.0, 2.0]))
    dec = eig_hermitian(h)
    assert np.allclose(dec.eigenvalues, [1.0, 2.0, 3.0])


def test_eig_pauli_x():
    dec = eig_hermitian(HermitianOperator(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert np.allclose(dec.eigenvalues, [-1.0, 1.0])


def test_eig_reconstruction_residual():
    h = random_hermitian(rng_for(0, "eig"), 8)
    dec = eig_hermitian(h)
    rel = np.linalg.norm(dec.reconstruct() - h.data) / np.linalg.norm(h.data)
    assert rel <= 1e-11
    assert np.linalg.norm(dec.eigenvectors.conj().T @ dec.eigenvectors - np.eye(8)) <= 1e-11


def test_schatten_identity_normalized():
    for p in (1, 2, 3.5, math.inf):
        assert schatten_norm(np.eye(5), p, "normalized") == pytest.approx(1.0)


def test_schatten_rank_one_projection_counting():
    proj = np.array([[1.0, 0.0], [0.0, 0.0]])
    for p in (1, 2, math.inf):
        assert schatten_norm(proj, p, "counting") == pytest.approx(1.0)


def test_schatten_hoelder_inequality():
    rng = rng_for(1, "hoelder")
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    b = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    assert schatten_norm(a @ b, 1) <= schatten_norm(a, 2) * schatten_norm(b, 2) * (1 + 1e-12)


def test_schatten_unitary_invariance():
    rng = rng_for(2, "unitary")
    a = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    u, v = haar_unitary(rng, 7), haar_unitary(rng, 7)
    for p in (1, 2, 4, math.inf):
        n0 = schatten_norm(a, p)
        assert abs(schatten_norm(u @ a @ v, p) - n0) <= 1e-10 * n0


def test_schatten_two_norm_is_weighted_trace():
    rng = rng_for(3, "fro")
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    target = np.vdot(a, a).real / 5
    assert schatten_norm(a, 2, "normalized") ** 2 == pytest.approx(target, rel=1e-12)


def test_schatten_index_validation():
    with pytest.raises(ValueError):
        SchattenIndex(0.5)
    assert SchattenIndex(math.inf).is_inf


def test_func_calc_identity_and_square():
    h = random_hermitian(rng_for(4, "fc"), 6)
    assert np.allclose(func_calc(h, parse_symbol("x")).data, h.data, atol=1e-13)
    sq = func_calc(h, parse_symbol("x**2")).data
    assert np.linalg.norm(sq - h.data @ h.data) <= 1e-11 * np.linalg.norm(h.data @ h.data)


def test_func_calc_zero_at_zero():
    h = HermitianOperator(np.zeros((3, 3)))
    out = func_calc(h, parse_symbol("tanh(x)"))
    assert np.all(out.data == 0.0)


def test_func_calc_output_hermitian_and_commutes():
    h = random_hermitian(rng_for(5, "fc2"), 9)
    out = func_calc(h, parse_symbol("exp(x)"))
    assert np.max(np.abs(out.data - out.data.conj().T)) <= 1e-11 * np.linalg.norm(h.data)
    comm = out.data @ h.data - h.data @ out.data
    assert np.linalg.norm(comm) <= 1e-10 * np.linalg.norm(h.data)


def test_func_calc_rejects_domain_violation():
    h = HermitianOperator(np.diag([1.0, -1.0]))

    def bad(x):
        return np.where(x < 0, np.nan, x)

    with pytest.raises(SymbolDomainError):
        func_calc(h, bad)
