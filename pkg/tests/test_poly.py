"""Exact star-product algebra on polynomial symbols."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qchar.poly import (
    DimensionError,
    PolySymbol,
    SymplecticStructure,
    circ_product,
    evaluate,
    evaluate_exact,
    grade_extract,
    is_linear,
    moyal_and_circ,
    moyal_bracket,
    multiply,
    partial_derivative,
    poisson_bracket,
    star_product,
    symmetrized_circ_power,
)

from conftest import from_sympy, polys, sympy_poisson, sympy_star

I = (0, 1)


def H(dim=2):
    return PolySymbol.hbar(dim)


# -- worked examples ---------------------------------------------------------

def test_multiply_examples(qp):
    q, p = qp
    assert multiply(q, p) == PolySymbol.monomial((1, 1))
    assert multiply(q + p, q - p) == q * q - p * p
    assert multiply(H() * q, H() * q) == PolySymbol.monomial((2, 0), 1, hbar_power=2)


def test_multiply_dimension_mismatch():
    with pytest.raises(DimensionError):
        multiply(PolySymbol.variable(0, 2), PolySymbol.variable(0, 4))


def test_partial_derivative_examples(qp):
    q, p = qp
    f = q * q * p
    assert partial_derivative(f, 0) == 2 * q * p
    assert partial_derivative(f, 1) == q * q
    assert partial_derivative(PolySymbol.constant(7, 2), 0).is_zero()
    with pytest.raises(IndexError):
        partial_derivative(f, 2)


def test_poisson_examples(qp):
    q, p = qp
    assert poisson_bracket(q, p) == PolySymbol.one(2)
    assert poisson_bracket(q * q, p * p) == 4 * q * p
    f = q**3 + q * p
    assert poisson_bracket(f, f).is_zero()


def test_star_examples(qp):
    q, p = qp
    h = H()
    assert star_product(q, p) == q * p + I * h / 2
    assert star_product(q * q, p * p) == q * q * p * p + (0, 2) * h * q * p - h * h / 2
    f = q**3 - p * q
    assert star_product(f, PolySymbol.one(2)) == f
    assert star_product(PolySymbol.one(2), f) == f


def test_moyal_and_circ_examples(qp):
    q, p = qp
    h = H()
    assert moyal_and_circ(q, p) == (q * p, PolySymbol.one(2))
    c, w = moyal_and_circ(q * q, p * p)
    assert c == q * q * p * p - h * h / 2
    assert w == 4 * q * p
    f = q**2 * p + p
    c, w = moyal_and_circ(f, f)
    assert c == circ_product(f, f)
    assert w.is_zero()


def test_evaluate_examples(qp):
    q, p = qp
    assert evaluate(q * p, [2, 3]) == 6
    assert evaluate(q * p + I * H() / 2, [2, 3], 0.1) == pytest.approx(6 + 0.05j)
    assert evaluate(PolySymbol.zero(2), [1.5, -2.0], 0.3) == 0
    assert evaluate_exact(q * p + H() / 3, [Fraction(1, 2), 3], Fraction(1, 7)) == (Fraction(3, 2) + Fraction(1, 21), 0)
    with pytest.raises(DimensionError):
        evaluate(q, [1.0, 2.0, 3.0])


def test_symmetrized_circ_power_examples(qp):
    q, p = qp
    assert symmetrized_circ_power([q]) == q
    assert symmetrized_circ_power([q, p]) == q * p
    # enumerate the 3! orderings by hand
    orders = [(q, q, p), (q, p, q), (p, q, q)]
    total = PolySymbol.zero(2)
    for a, b, c in orders:
        total = total + 2 * circ_product(circ_product(a, b), c)
    assert symmetrized_circ_power([q, q, p]) == total / 6
    with pytest.raises(ValueError):
        symmetrized_circ_power([])


def test_grade_extract_examples(qp):
    q, p = qp
    s = star_product(q * q, p * p)
    assert grade_extract(s, 2) == PolySymbol.constant(Fraction(-1, 2), 2)
    f = q**2 - 3 * p
    assert grade_extract(f, 0) == f
    assert grade_extract(PolySymbol.zero(2), 3).is_zero()
    assert is_linear(q + 2 * p + 1)
    assert not is_linear(q * p)


def test_symplectic_structure_matrix():
    S = SymplecticStructure(2)
    Imat = S.I
    assert Imat[0, 2] == -1 and Imat[2, 0] == 1
    assert all(S.entry(k, l) == Imat[k, l] for k in range(4) for l in range(4))
    with pytest.raises(ValueError):
        SymplecticStructure(0)


def test_invalid_dimension():
    with pytest.raises(ValueError):
        PolySymbol(3, {})
    with pytest.raises(TypeError):
        PolySymbol.monomial((1, 0), 1 + 2j)


# -- independent sympy oracle ------------------------------------------------

@pytest.mark.parametrize(
    "fs,gs",
    [
        ("q**3*p", "p**2*q + q"),
        ("q**2*p**2", "q**4"),
        ("p**3 + q", "q**3*p"),
    ],
)
def test_star_matches_sympy_oracle(fs, gs):
    import sympy as sp

    from conftest import xsyms

    x0, x1 = xsyms(2)
    env = {"q": x0, "p": x1}
    f = from_sympy(sp.sympify(fs, locals=env), 2)
    g = from_sympy(sp.sympify(gs, locals=env), 2)
    assert star_product(f, g) == from_sympy(sympy_star(f, g), 2)


@given(polys(dim=4, max_degree=3, max_terms=3, hbar=True, complex_coeffs=True),
       polys(dim=4, max_degree=3, max_terms=3, hbar=True, complex_coeffs=True))
def test_star_matches_sympy_oracle_random(f, g):
    assert star_product(f, g) == from_sympy(sympy_star(f, g), 4)


@given(polys(dim=4, max_degree=3), polys(dim=4, max_degree=3))
def test_poisson_matches_sympy_oracle(f, g):
    assert poisson_bracket(f, g) == from_sympy(sympy_poisson(f, g), 4)


# -- algebraic properties ----------------------------------------------------

@given(st.data())
def test_star_associative(data):
    d = data.draw(st.sampled_from([2, 4]))
    f, g, h = (data.draw(polys(dim=d, max_degree=3, max_terms=3, hbar=True)) for _ in range(3))
    assert star_product(star_product(f, g), h) == star_product(f, star_product(g, h))


@given(polys(dim=2, max_degree=4, max_terms=3), polys(dim=2, max_degree=4, max_terms=3), polys(dim=2, max_degree=2, max_terms=2))
def test_star_associative_degree4(f, g, h):
    assert star_product(star_product(f, g), h) == star_product(f, star_product(g, h))


@given(st.data())
def test_poisson_jacobi_antisymmetry_bilinearity(data):
    d = data.draw(st.sampled_from([2, 4]))
    f, g, h = (data.draw(polys(dim=d, max_degree=3)) for _ in range(3))
    pb = poisson_bracket
    assert pb(f, g) == -pb(g, f)
    assert (pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g))).is_zero()
    assert pb(f + 2 * g, h) == pb(f, h) + 2 * pb(g, h)


@given(st.data())
def test_wedge_antisymmetry_and_bilinearity(data):
    d = data.draw(st.sampled_from([2, 4]))
    f, g, h = (data.draw(polys(dim=d, max_degree=3, hbar=True)) for _ in range(3))
    assert moyal_bracket(f, g) == -moyal_bracket(g, f)
    assert moyal_bracket(3 * f - g, h) == 3 * moyal_bracket(f, h) - moyal_bracket(g, h)


@given(st.data())
def test_hbar0_limits(data):
    d = data.draw(st.sampled_from([2, 4]))
    f, g = (data.draw(polys(dim=d, max_degree=3)) for _ in range(2))
    assert grade_extract(star_product(f, g), 0) == f * g
    assert grade_extract(moyal_bracket(f, g), 0) == poisson_bracket(f, g)


@given(st.data())
def test_star_split(data):
    d = data.draw(st.sampled_from([2, 4]))
    f, g = (data.draw(polys(dim=d, max_degree=3, hbar=True, complex_coeffs=True)) for _ in range(2))
    c, w = moyal_and_circ(f, g)
    assert star_product(f, g) == c + I * PolySymbol.hbar(d) * w / 2
    assert c == (star_product(f, g) + star_product(g, f)) / 2


@given(st.data())
def test_hermiticity_closure(data):
    d = data.draw(st.sampled_from([2, 4]))
    f, g = (data.draw(polys(dim=d, max_degree=3, hbar=True)) for _ in range(2))
    c, w = moyal_and_circ(f, g)
    assert c.is_hermitian_symbol() and w.is_hermitian_symbol()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_wedge_of_coordinates_is_minus_I(n):
    S = SymplecticStructure(n)
    xs = S.variables()
    for i in range(2 * n):
        for j in range(2 * n):
            assert moyal_bracket(xs[i], xs[j]) == PolySymbol.constant(-int(S.I[i, j]), 2 * n)


@given(polys(dim=4, max_degree=4, hbar=True, complex_coeffs=True))
def test_literal_round_trip(f):
    assert PolySymbol.from_literal(f.to_literal(), 4) == f
    assert PolySymbol.from_literal({"dim": 4, "terms": f.to_literal()}) == f


def test_from_literal_errors():
    with pytest.raises(ValueError):
        PolySymbol.from_literal("q")
    with pytest.raises(ValueError):
        PolySymbol.from_literal([{"exponents": [1, 0], "bogus": 1}])
    with pytest.raises(ValueError):
        PolySymbol.from_literal([{"exponents": [1, 0], "hbar_power": -1}])
    with pytest.raises(ValueError):
        PolySymbol.from_literal([])


@given(polys(dim=2, max_degree=3, hbar=True, complex_coeffs=True), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1))
def test_evaluate_matches_exact(f, a, b, h):
    re, im = evaluate_exact(f, [a, b], h)
    assert evaluate(f, np.array([a, b]), h) == pytest.approx(complex(float(re), float(im)), rel=1e-12, abs=1e-12)
