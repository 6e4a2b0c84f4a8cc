"""Truncated star product for smooth symbols."""
from __future__ import annotations

import itertools

import numpy as np
import pytest
import sympy as sp

from qchar.numstar import (
    SmoothSymbol,
    closed_form_coefficients,
    generating_map_example,
    generating_map_symbols,
    star_truncated,
)
from qchar.poly import PolySymbol, evaluate, moyal_and_circ

Qs, Ps = sp.symbols("Q P")
QA, PA, QB, PB = sp.symbols("QA PA QB PB")
D = 1 + 2 * Ps
Q_EXPR = Qs / D
P_EXPR = Ps + Ps**2 + 3 * Qs**2 / D**2


def sympy_poisson_power(f, g, k):
    """``f P^k g`` by iterating ``d_QA d_PB - d_PA d_QB`` on ``f(A) g(B)``."""
    expr = f.subs({Qs: QA, Ps: PA}) * g.subs({Qs: QB, Ps: PB})
    for _ in range(k):
        expr = sp.diff(expr, QA, PB) - sp.diff(expr, PA, QB)
    return expr.subs({QA: Qs, PA: Ps, QB: Qs, PB: Ps})


@pytest.fixture(scope="module")
def oracle_coeffs():
    circ = sp.lambdify((Qs, Ps), sp.simplify(-sympy_poisson_power(Q_EXPR, P_EXPR, 2) / 8))
    wedge = sp.lambdify((Qs, Ps), sp.simplify(-sympy_poisson_power(Q_EXPR, P_EXPR, 3) / 24))
    return circ, wedge


GRID = [(Q, P) for Q, P in itertools.product([-1.5, -0.3, 0.0, 0.7, 2.0], [-0.3, 0.0, 0.4, 1.0, 2.5])]


def test_analytic_derivatives_match_sympy():
    q, p = generating_map_symbols()
    for sym, expr in ((q, Q_EXPR), (p, P_EXPR)):
        for mi, fn in sym.derivatives.items():
            ref = sp.diff(expr, *[(Qs, Ps)[k] for k in mi])
            for Q, P in GRID[::3]:
                assert fn(np.array([Q, P])) == pytest.approx(float(ref.subs({Qs: Q, Ps: P})), rel=1e-12, abs=1e-12)
        assert sym.func(np.array([0.7, 0.4])) == pytest.approx(float(expr.subs({Qs: 0.7, Ps: 0.4})), rel=1e-14)


def test_map_is_canonical():
    # {q, p} = 1 in the (Q, P) chart
    assert sp.simplify(sympy_poisson_power(Q_EXPR, P_EXPR, 1)) == 1


def test_closed_form_matches_sympy(oracle_coeffs):
    circ, wedge = oracle_coeffs
    for Q, P in GRID:
        c, w = closed_form_coefficients(Q, P)
        assert c == pytest.approx(circ(Q, P), rel=1e-12, abs=1e-14)
        assert w == pytest.approx(wedge(Q, P), rel=1e-12)


def test_example_points():
    r = generating_map_example(1.0, 0.0)
    assert r["dot"] == pytest.approx(3.0) and r["bracket"] == pytest.approx(1.0)
    assert r["computed_circ_h2"] == pytest.approx(6.0, rel=1e-12)
    assert r["computed_wedge_h2"] == pytest.approx(24.0, rel=1e-12)
    r = generating_map_example(1.0, 1.0)
    assert r["computed_circ_h2"] == pytest.approx(6 / 243, rel=1e-12)
    assert r["computed_wedge_h2"] == pytest.approx(24 / 729, rel=1e-12)
    assert set(r) == {
        "point", "hbar", "method", "dot", "bracket", "computed_circ_h2", "closed_form_circ_h2",
        "computed_wedge_h2", "closed_form_wedge_h2", "abs_rel_errors",
    }


@pytest.mark.parametrize("Q,P", GRID)
def test_analytic_and_two_point_on_grid(Q, P, oracle_coeffs):
    circ, wedge = oracle_coeffs
    for method in ("analytic", "two-point"):
        r = generating_map_example(Q, P, 0.1, method=method)
        assert r["computed_circ_h2"] == pytest.approx(circ(Q, P), rel=1e-9, abs=1e-12)
        assert r["computed_wedge_h2"] == pytest.approx(wedge(Q, P), rel=1e-9)
        assert max(r["abs_rel_errors"]) < 1e-6


@pytest.mark.parametrize("Q,P", [(1.0, 0.0), (1.0, 1.0), (-0.3, 0.4), (2.0, 2.5)])
def test_finite_difference_method(Q, P):
    r = generating_map_example(Q, P, 0.1, method="fd")
    assert max(r["abs_rel_errors"]) < 1e-4


def test_identity_map_has_no_correction():
    r = generating_map_example(0.4, -0.2, identity=True)
    assert r["computed_circ_h2"] == 0.0 and r["computed_wedge_h2"] == 0.0
    assert r["dot"] == pytest.approx(-0.08) and r["bracket"] == 1.0


def test_errors():
    with pytest.raises(ZeroDivisionError):
        generating_map_example(1.0, -0.5)
    with pytest.raises(ValueError):
        generating_map_example(1.0, 0.0, 0.0, method="two-point")
    with pytest.raises(ValueError):
        generating_map_example(1.0, 0.0, method="spline")
    a = SmoothSymbol.from_poly(PolySymbol.variable(0, 2))
    b = SmoothSymbol.from_poly(PolySymbol.variable(0, 4))
    with pytest.raises(ValueError):
        star_truncated(a, b, [0.0, 0.0], 0.1)


def _poly_pairs():
    q, p = (PolySymbol.variable(i, 2) for i in range(2))
    x1, x2, y1, y2 = (PolySymbol.variable(i, 4) for i in range(4))
    return [
        (q**3 + p, q * p * p),
        (x1 * x1 * y2 + x2, y1**3 + x1 * x2 * y2),
        (q * q * p * p, p**3 - q),
    ]


@pytest.mark.parametrize("f,g", _poly_pairs(), ids=["cubic", "n2", "quartic"])
def test_polynomial_inputs_match_exact_star(f, g):
    circ, wedge = moyal_and_circ(f, g)
    hbar = 0.3
    rng = np.random.default_rng(1)
    sf, sg = SmoothSymbol.from_poly(f), SmoothSymbol.from_poly(g)
    for _ in range(4):
        x = rng.normal(size=f.dim)
        c, w = star_truncated(sf, sg, x, hbar)
        # hbar^4 terms need fourth derivatives of both factors, absent here
        assert c == pytest.approx(evaluate(circ, x, hbar).real, rel=1e-9, abs=1e-9)
        assert w == pytest.approx(evaluate(wedge, x, hbar).real, rel=1e-9, abs=1e-9)
        cf, wf = star_truncated(sf.without_analytic(), sg.without_analytic(), x, hbar)
        assert cf == pytest.approx(c, rel=1e-4, abs=1e-4)
        assert wf == pytest.approx(w, rel=1e-4, abs=1e-4)


def test_canonical_pair_and_antisymmetry():
    q, p = (SmoothSymbol.from_poly(PolySymbol.variable(i, 2)) for i in range(2))
    c, w = star_truncated(q, p, [0.3, -1.2], 0.5)
    assert c == pytest.approx(-0.36) and w == 1.0
    f = SmoothSymbol(lambda x: np.sin(x[0]) * np.exp(x[1]), 2)
    assert star_truncated(f, f, [0.2, 0.1], 0.5)[1] == pytest.approx(0.0, abs=1e-6)
