import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from landscape_lab.errors import DegreeOverflow, NonConvergence, PoleProximity, ZeroPolynomial
from landscape_lab.rational import (
    ComplexPolynomial,
    RationalFn,
    conj_coeffs,
    poly_roots,
    rat_compose,
    rat_eval,
)

OMEGA = np.exp(2j * np.pi * np.arange(3) / 3)


def fig1_F():
    return RationalFn.simple_poles(OMEGA, [0.75] * 3)


# --- ComplexPolynomial -------------------------------------------------------


def test_polynomial_trims_and_degree():
    p = ComplexPolynomial([1, 2, 0, 0])
    assert p.degree() == 1
    assert ComplexPolynomial([0, 0]).is_zero()
    assert ComplexPolynomial([0]).degree() == -1


def test_polynomial_arithmetic_matches_pointwise(rng):
    a = ComplexPolynomial(rng.normal(size=4) + 1j * rng.normal(size=4))
    b = ComplexPolynomial(rng.normal(size=3))
    z = rng.normal(size=10) + 1j * rng.normal(size=10)
    np.testing.assert_allclose((a * b)(z), a(z) * b(z), rtol=1e-12)
    np.testing.assert_allclose((a - b)(z), a(z) - b(z), rtol=1e-12)
    np.testing.assert_allclose((a**3)(z), a(z) ** 3, rtol=1e-12)


def test_derivative_and_antiderivative_invert():
    p = ComplexPolynomial([1, 2j, 3, -4])
    assert p.antiderivative().derivative() == p
    assert p.derivative() == ComplexPolynomial([2j, 6, -12])


# --- roots ---------------------------------------------------------------------


def test_roots_of_z2_plus_1(use_numba):
    r = poly_roots(ComplexPolynomial([1, 0, 1]), use_numba=use_numba)
    np.testing.assert_allclose(sorted(r, key=lambda z: z.imag), [-1j, 1j], atol=1e-14)


def test_cube_roots_of_unity(use_numba):
    r = poly_roots(ComplexPolynomial([-1, 0, 0, 1]), use_numba=use_numba)
    for w in OMEGA:
        assert np.min(np.abs(r - w)) < 1e-14


def test_zero_polynomial_rejected():
    with pytest.raises(ZeroPolynomial):
        poly_roots(ComplexPolynomial([0]))


def test_iteration_cap_reports_nonconvergence():
    with pytest.raises(NonConvergence):
        poly_roots(ComplexPolynomial.from_roots(np.arange(1, 16)), max_iter=2)


def test_roots_deterministic_for_seed():
    p = ComplexPolynomial(np.arange(1, 12) + 0.5j)
    np.testing.assert_array_equal(poly_roots(p, seed=3), poly_roots(p, seed=3))


@settings(max_examples=40, deadline=None)
@given(deg=st.integers(1, 30), seed=st.integers(0, 2**31 - 1))
def test_roots_reconstruct_random_polynomials(deg, seed):
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
    coeffs[-1] = 1.0
    r = poly_roots(ComplexPolynomial(coeffs))
    assert len(r) == deg
    rebuilt = ComplexPolynomial.from_roots(r).coeffs
    assert np.max(np.abs(rebuilt - coeffs)) / np.max(np.abs(coeffs)) < 1e-8


def test_roots_agree_with_companion_matrix(rng):
    coeffs = rng.normal(size=21) + 1j * rng.normal(size=21)
    ours = poly_roots(ComplexPolynomial(coeffs))
    ref = np.roots(coeffs[::-1])
    for z in ref:
        assert np.min(np.abs(ours - z)) < 1e-9


# --- evaluation ------------------------------------------------------------------


def test_eval_simple_pole():
    assert rat_eval(RationalFn.simple_poles([0], [1]), 2) == 0.5


def test_eval_symmetric_cancellation_at_origin():
    assert abs(rat_eval(fig1_F(), 0)) < 1e-15


def test_eval_matches_high_precision_sum():
    mpmath.mp.dps = 40
    ref = sum(mpmath.mpf(3) / 4 / (2 - mpmath.exp(2j * mpmath.pi * k / 3)) for k in range(3))
    got = rat_eval(fig1_F(), 2)
    assert abs(got - complex(ref)) < 1e-15
    assert abs(got.imag) < 1e-15


def test_eval_pole_guard():
    with pytest.raises(PoleProximity):
        rat_eval(fig1_F(), 1 + 1e-13)


def test_quotient_form_agrees(rng):
    f = RationalFn(ComplexPolynomial([0.3, 0.2]), [(0.5, [1.0, 0.2j]), (-1j, [0.4])])
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    np.testing.assert_allclose(f.as_quotient()(z), f(z), rtol=1e-12)
    assert f.degree() == f.as_quotient().degree() == 4


def test_duplicate_nodes_rejected():
    with pytest.raises(ValueError):
        RationalFn.simple_poles([1, 1], [1, 2])


# --- composition -----------------------------------------------------------------


def test_compose_inversion_is_identity(rng):
    inv = RationalFn.simple_poles([0], [1])
    g = rat_compose(inv, inv)
    z = rng.normal(size=5) + 1j * rng.normal(size=5)
    np.testing.assert_allclose(g(z), z, rtol=1e-14)
    assert g.degree() == 1


def test_compose_inversion_of_square():
    g = rat_compose(RationalFn.simple_poles([0], [1]), ComplexPolynomial([0, 0, 1]))
    assert g.degree() == 2
    assert abs(g(2.0) - 0.25) < 1e-15


def test_compose_degree_cap():
    f = RationalFn.simple_poles(np.arange(30), np.ones(30))
    with pytest.raises(DegreeOverflow):
        rat_compose(f, f)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_compose_pointwise_identity(seed):
    rng = np.random.default_rng(seed)
    f = RationalFn.simple_poles(rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=3))
    g = RationalFn.simple_poles(rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(size=2) + 1j * rng.normal(size=2))
    h = rat_compose(f, g)
    z = rng.normal(size=8) + 1j * rng.normal(size=8)
    direct = f(g(z))
    np.testing.assert_allclose(h(z), direct, rtol=1e-10)


def test_second_iterate_degree_is_product_symbolically():
    """Exact rational data: the cleared form of F*(F(z)) has degree 9 for a degree-3 F."""
    z = sympy.symbols("z")
    rng = np.random.default_rng(7)
    nodes = [sympy.Rational(int(a), 7) + sympy.I * sympy.Rational(int(b), 5) for a, b in rng.integers(-9, 9, size=(3, 2))]
    weights = [sympy.Rational(int(w), 3) for w in rng.integers(1, 9, size=3)]
    F = sum(w / (z - a) for w, a in zip(weights, nodes))
    Fs = sum(w / (z - sympy.conjugate(a)) for w, a in zip(weights, nodes))
    num, den = sympy.fraction(sympy.cancel(sympy.together(Fs.subs(z, F))))
    sym_degree = max(sympy.degree(num, z), sympy.degree(den, z))

    Fn = RationalFn.simple_poles([complex(a) for a in nodes], [float(w) for w in weights])
    G = rat_compose(conj_coeffs(Fn), Fn)
    assert sym_degree == 9
    assert G.degree() == sym_degree


# --- conjugation -------------------------------------------------------------------


def test_conj_moves_pole():
    f = conj_coeffs(RationalFn.simple_poles([1j], [1]))
    assert f.nodes[0] == -1j


def test_conj_fixes_real_data():
    f = RationalFn(ComplexPolynomial([1.0, 0.5]), [(2.0, [1.0, 3.0])])
    g = conj_coeffs(f)
    assert g.poly_part == f.poly_part and np.all(g.nodes == f.nodes)


def test_conj_pointwise_identity_and_involution(rng):
    f = RationalFn(ComplexPolynomial([0.2j, 0.1 + 0.3j]), [(0.3 + 0.4j, [1 + 1j, 0.5j]), (-1, [2.0])])
    w = rng.normal(size=100) + 1j * rng.normal(size=100)
    np.testing.assert_allclose(conj_coeffs(f)(w), np.conj(f(np.conj(w))), rtol=1e-13)
    np.testing.assert_allclose(conj_coeffs(conj_coeffs(f))(w), f(w), rtol=1e-15)
