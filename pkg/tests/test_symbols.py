import itertools
import math

import numpy as np
import pytest

from opcalc.errors import ConfigError, OrderExceeded, TailMassError
from opcalc.expr import parse_symbol
from opcalc.seeding import rng_for
from opcalc.symbols import (BumpLocalizer, GridConfig, LPFilterFamily, SmoothSymbol,
                            build_littlewood_paley, cb_norm, divided_diff,
                            divided_diff_tensor, homogeneous_sym, lipschitz_norm,
                            localize, modified_besov_norm, wiener_norm)


def brute_homogeneous(k, nodes):
    """Enumeration oracle: sum of all degree-k monomials in the nodes."""
    total = 0.0
    for combo in itertools.combinations_with_replacement(range(len(nodes)), k):
        prod = 1.0
        for i in combo:
            prod *= nodes[i]
        total += prod
    return total


@pytest.mark.parametrize("k,nodes", [(0, [2.0]), (1, [1.0, 2.0, 3.0]),
                                     (2, [1.0, 2.0, 3.0]), (3, [0.5, -1.5, 2.0, 0.25])])
def test_homogeneous_sym_against_enumeration(k, nodes):
    assert homogeneous_sym(k, np.array(nodes)) == pytest.approx(brute_homogeneous(k, nodes))


def test_divided_diff_square_two_nodes():
    F = parse_symbol("x**2")
    assert divided_diff(F, [1.5, 2.5]) == pytest.approx(4.0)  # a + b


def test_divided_diff_equal_nodes_is_derivative():
    F = parse_symbol("sin(x)")
    assert divided_diff(F, [0.4, 0.4]) == pytest.approx(math.cos(0.4), abs=1e-10)


def test_divided_diff_cube_123():
    assert divided_diff(parse_symbol("x**3"), [1, 2, 3]) == pytest.approx(6.0)


def test_divided_diff_low_degree_vanishes():
    # order n > polynomial degree m gives zero (m + 2 nodes)
    F = parse_symbol("x**2")
    assert divided_diff(F, [0.1, 0.7, 1.3, 2.9]) == pytest.approx(0.0, abs=1e-14)


def test_divided_diff_polynomial_is_homogeneous_sym():
    rng = rng_for(0, "dd")
    nodes = rng.uniform(-2, 2, size=4)
    for m in (3, 4, 6):
        F = parse_symbol(f"x**{m}")
        expect = brute_homogeneous(m - 3, list(nodes))
        assert divided_diff(F, nodes) == pytest.approx(expect, rel=1e-10)


def test_divided_diff_symmetry():
    F = parse_symbol("exp(x)")
    rng = rng_for(1, "perm")
    nodes = rng.uniform(-1, 1, size=4)
    base = divided_diff(F, nodes)
    for perm in itertools.permutations(nodes):
        assert divided_diff(F, list(perm)) == pytest.approx(base, abs=1e-12 * max(1, abs(base)))


def test_divided_diff_near_confluent_stable():
    F = parse_symbol("exp(x)")
    v1 = divided_diff(F, [1.0, 1.0 + 1e-9, 1.0 - 1e-9])
    assert v1 == pytest.approx(math.exp(1.0) / 2, rel=1e-6)  # F''(1)/2!


def test_divided_diff_mean_value_bound():
    F = parse_symbol("sin(x)")
    rng = rng_for(2, "mv")
    for _ in range(50):
        a, b = rng.uniform(-3, 3, size=2)
        if a == b:
            continue
        assert abs(divided_diff(F, [a, b])) <= 1.0 + 1e-12


def test_divided_diff_order_exceeded():
    F = parse_symbol("tanh(x)", max_order=2)
    with pytest.raises(OrderExceeded):
        divided_diff(F, [0.0, 0.1, 0.2, 0.3])


def test_tensor_first_order_single_nodes():
    F = parse_symbol("sin(x)")
    t = divided_diff_tensor(F, [np.array([0.0]), np.array([0.0])])
    assert t.shape == (1, 1)
    assert t[0, 0] == pytest.approx(1.0, abs=1e-10)  # F'(0)


def test_tensor_square_grid():
    F = parse_symbol("x**2")
    t = divided_diff_tensor(F, [np.array([1.0, 2.0]), np.array([3.0])])
    assert np.allclose(t, [[4.0], [5.0]])


def test_tensor_constant_symbol_second_order_zero():
    F = parse_symbol("3 + 0*x")
    t = divided_diff_tensor(F, [np.array([0.0, 1.0])] * 3)
    assert np.max(np.abs(t)) == 0.0


def test_tensor_generic_matches_scalar():
    F = parse_symbol("tanh(x)")
    spectra = [np.array([0.1, 0.5]), np.array([-0.3, 0.8]), np.array([0.2])]
    t = divided_diff_tensor(F, spectra)
    for i in range(2):
        for j in range(2):
            v = divided_diff(F, [spectra[0][i], spectra[1][j], spectra[2][0]])
            assert t[i, j, 0] == pytest.approx(v, rel=1e-12)


def test_lipschitz_norms():
    assert lipschitz_norm(parse_symbol("2*x"), (-1, 1)) == pytest.approx(2.0)
    assert lipschitz_norm(parse_symbol("abs(x)"), (-1, 1)) == pytest.approx(1.0)
    assert lipschitz_norm(parse_symbol("sin(x)"), (-math.pi, math.pi)) == pytest.approx(1.0, abs=1e-3)


def test_cb_norms():
    assert cb_norm(parse_symbol("x"), 1, (-5, 5)) == pytest.approx(1.0)
    assert cb_norm(parse_symbol("sin(x)"), 2, (0, 2 * math.pi)) == pytest.approx(1.0, abs=1e-3)
    assert cb_norm(parse_symbol("x**2"), 1, (-2, 2)) == pytest.approx(4.0, abs=1e-3)


def test_norm_homogeneity():
    F = parse_symbol("sin(x)")
    G = parse_symbol("3.5*sin(x)")
    assert lipschitz_norm(G, (-2, 2)) == pytest.approx(3.5 * lipschitz_norm(F, (-2, 2)), rel=1e-10)
    assert cb_norm(G, 2, (-2, 2)) == pytest.approx(3.5 * cb_norm(F, 2, (-2, 2)), rel=1e-10)


def test_wiener_norm_zero():
    assert wiener_norm(parse_symbol("0*x"), 0) == 0.0


def test_wiener_norm_gaussian_closed_form():
    # Fourier transform of exp(-x^2) is sqrt(pi) exp(-xi^2/4); L1 mass 2*pi
    val = wiener_norm(parse_symbol("gauss(x)"), 0)
    assert val == pytest.approx(1.0 + 2 * math.pi, rel=1e-4)


def test_wiener_norm_grid_refinement_stable():
    F = parse_symbol("gauss(x)")
    v1 = wiener_norm(F, 0, GridConfig(half_width=16.0, samples=2048))
    v2 = wiener_norm(F, 0, GridConfig(half_width=16.0, samples=4096))
    assert abs(v2 - v1) <= 0.01 * v1


def test_wiener_norm_compact_spline_finite():
    # C^2 cubic B-spline bump: in W_1 by the embedding of compactly
    # supported C^{n+1} functions
    def bspline(x):
        x = np.abs(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        m1 = x < 1
        out[m1] = (4 - 6 * x[m1] ** 2 + 3 * x[m1] ** 3) / 6
        m2 = (x >= 1) & (x < 2)
        out[m2] = (2 - x[m2]) ** 3 / 6
        return out

    F = SmoothSymbol(func=bspline, max_order=1, window=(-3, 3), check=False)
    val = wiener_norm(F, 1, GridConfig(half_width=8.0))
    assert np.isfinite(val) and val > 0


def test_wiener_norm_tail_error():
    with pytest.raises(TailMassError):
        wiener_norm(parse_symbol("gauss(0.05*x)"), 0, GridConfig(half_width=8.0))


def test_modified_besov_zero():
    lp = build_littlewood_paley(1)
    assert modified_besov_norm(parse_symbol("0*x"), 0, lp) == 0.0


def test_modified_besov_single_shell():
    # exact-bin cosine at |xi| = 5 lies in the dyadic shell j = 2; only the
    # adjacent filters can see it
    grid = GridConfig(half_width=16.0, samples=4096)
    omega = round(5.0 / (math.pi / 16.0)) * (math.pi / 16.0)  # snap to the DFT bin grid pi/L
    lp = build_littlewood_paley(1)
    F = parse_symbol(f"cos({omega}*x)", max_order=1)
    val, tail = modified_besov_norm(F, 0, lp, truncation=8, grid=grid, return_tail=True)
    assert np.isfinite(val)
    # count contributing shells directly
    xs = np.linspace(-grid.half_width, grid.half_width, grid.samples, endpoint=False)
    dx = xs[1] - xs[0]
    f = np.asarray(F(xs), dtype=np.complex128)
    fhat = np.fft.fft(np.fft.ifftshift(f)) * dx
    xi = 2 * np.pi * np.fft.fftfreq(grid.samples, d=dx)
    active = [k for k in range(-8, 9)
              if np.max(np.abs(np.fft.ifft(fhat * lp.phi_k(xi, k)))) > 1e-8 * np.max(np.abs(f))]
    assert len(active) <= 3
    assert active == sorted(active) and active[-1] - active[0] <= 2


def test_modified_besov_increases_with_truncation():
    lp = build_littlewood_paley(1)
    F = parse_symbol("gauss(x)*cos(3*x)")
    v1 = modified_besov_norm(F, 0, lp, truncation=4)
    v2 = modified_besov_norm(F, 0, lp, truncation=8)
    assert v2 >= v1 - 1e-12


def test_modified_besov_below_wiener_embedding():
    # Wiener-class symbols embed into the modified Besov class; the corpus
    # constant stays below the recorded bound
    lp = build_littlewood_paley(1)
    corpus = ["gauss(x)", "gauss(x)*cos(3*x)", "gauss(0.5*x)*sin(x)"]
    ratios = []
    for text in corpus:
        F = parse_symbol(text)
        mb = modified_besov_norm(F, 0, lp, truncation=10)
        wn = wiener_norm(F, 0)
        ratios.append(mb / wn)
    assert all(np.isfinite(r) and r > 0 for r in ratios)
    assert max(ratios) <= 1.5  # recorded corpus constant (observed ~0.6)


def test_transform_norm_homogeneity():
    lp = build_littlewood_paley(1)
    F = parse_symbol("gauss(x)")
    G = parse_symbol("4*gauss(x)")
    assert wiener_norm(G, 0) == pytest.approx(4 * wiener_norm(F, 0), rel=1e-10)
    assert modified_besov_norm(G, 0, lp) == pytest.approx(
        4 * modified_besov_norm(F, 0, lp), rel=1e-10)


def test_localize_infinite_is_identity():
    F = parse_symbol("exp(x)")
    assert localize(F, BumpLocalizer(math.inf)) is F


def test_localize_support():
    F = parse_symbol("exp(x)")
    loc = localize(F, BumpLocalizer(2.0))
    xs = np.array([-1.5, 0.0, 1.9])
    assert np.allclose(loc(xs), F(xs))  # unchanged inside [-M, M]
    assert np.all(loc(np.array([4.5, -6.0])) == 0.0)  # zero outside [-2M, 2M]


def test_bump_localizer_range():
    loc = BumpLocalizer(1.0)
    xs = np.linspace(-3, 3, 301)
    vals = loc(xs)
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(vals[np.abs(xs) <= 1.0] == 1.0)
    assert np.all(vals[np.abs(xs) >= 2.0] == 0.0)


def test_lp_partition_homogeneous():
    lp = build_littlewood_paley(1)
    xi = np.geomspace(0.05, 50, 200)
    total = sum(lp.phi_k(xi, k) for k in range(-10, 12))
    assert np.max(np.abs(total - 1.0)) <= 1e-10


def test_lp_partition_at_one():
    lp = build_littlewood_paley(1)
    v = lp.phi_k(np.array([1.0]), 0) + lp.phi_k(np.array([1.0]), 1)
    assert v[0] == pytest.approx(1.0, abs=1e-10)


def test_lp_nonhomogeneous_covers_zero():
    lp = build_littlewood_paley(2)
    xi = np.linspace(0.0, 30.0, 200)
    total = sum(lp.phi_k(xi, k, homogeneous=False) for k in range(0, 10))
    assert np.max(np.abs(total - 1.0)) <= 1e-10


def test_lp_support_annulus():
    lp = build_littlewood_paley(1)
    assert np.all(np.abs(lp.phi_k(np.array([3.0, 0.3]), 0)) <= 1e-14)


def test_symbol_construction_check_catches_wrong_derivative():
    with pytest.raises(ValueError):
        SmoothSymbol(func=np.sin, derivs=(np.sin,), max_order=1, window=(-1, 1))


def test_expression_grammar_errors():
    with pytest.raises(ConfigError):
        parse_symbol("sin(x")
    with pytest.raises(ConfigError):
        parse_symbol("spam(x)")
    with pytest.raises(ConfigError):
        parse_symbol("x / sin(x)")


def test_expression_polynomial_detection():
    F = parse_symbol("(1 + x)**2 - 1")
    assert F.poly_coeffs is not None
    assert np.allclose(F.poly_coeffs, [0.0, 2.0, 1.0])
    assert parse_symbol("sin(x)").poly_coeffs is None
