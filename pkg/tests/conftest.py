"""Shared fixtures, hypothesis strategies and independent sympy oracles."""
from __future__ import annotations

import os
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qchar.poly import PolySymbol

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("QCHAR_HYPOTHESIS_PROFILE", "default"))

HBAR = sp.Symbol("hbar", real=True)


def xsyms(dim: int, name: str = "x"):
    return sp.symbols(f"{name}0:{dim}", real=True)


def to_sympy(f: PolySymbol, syms=None):
    """Sympy expression of a symbol, built from its literal form only."""
    syms = syms or xsyms(f.dim)
    expr = sp.Integer(0)
    for term in f.to_literal():
        c = sp.Rational(term["coeff_re"]) + sp.I * sp.Rational(term["coeff_im"])
        mono = sp.Mul(*[s**e for s, e in zip(syms, term["exponents"])])
        expr += c * HBAR ** term["hbar_power"] * mono
    return sp.expand(expr)


def from_sympy(expr, dim: int) -> PolySymbol:
    """Inverse of :func:`to_sympy` for polynomial expressions in x and hbar."""
    syms = xsyms(dim)
    expr = sp.expand(expr)
    if expr == 0:
        return PolySymbol.zero(dim)
    poly = sp.Poly(expr, *syms, HBAR)
    terms: dict = {}
    for monom, c in poly.terms():
        re, im = sp.re(c), sp.im(c)
        exps, hp = tuple(monom[:dim]), monom[dim]
        terms.setdefault(exps, {})[hp] = (Fraction(str(re)), Fraction(str(im)))
    return PolySymbol(dim, terms)


def sympy_star(f: PolySymbol, g: PolySymbol):
    """``f * g`` by applying ``exp(i hbar D / 2)`` with ``D = sum P^{ab} d/dx_a d/dy_b``.

    ``P = [[0, E], [-E, 0]]``, so the first-order term is the Poisson bracket
    with ``{q, p} = 1``.  Uses doubled variables and substitutes ``y = x`` at
    the end; independent of the package's own expansion.
    """
    d = f.dim
    n = d // 2
    xs, ys = xsyms(d), xsyms(d, "y")
    F = to_sympy(f, xs)
    G = to_sympy(g, ys)
    pairs = [(k, k + n, 1) for k in range(n)] + [(k + n, k, -1) for k in range(n)]
    term = F * G
    total = term
    k = 0
    while term != 0:
        k += 1
        term = sp.expand(sum(s * sp.diff(term, xs[a], ys[b]) for a, b, s in pairs))
        total += (sp.I * HBAR / 2) ** k / sp.factorial(k) * term
    return sp.expand(total.subs(dict(zip(ys, xs)), simultaneous=True))


def sympy_poisson(f: PolySymbol, g: PolySymbol):
    d = f.dim
    n = d // 2
    xs = xsyms(d)
    F, G = to_sympy(f, xs), to_sympy(g, xs)
    return sp.expand(
        sum(sp.diff(F, xs[k]) * sp.diff(G, xs[k + n]) - sp.diff(F, xs[k + n]) * sp.diff(G, xs[k]) for k in range(n))
    )


# -- hypothesis strategies ---------------------------------------------------

_coeff = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def polys(draw, dim: int = 2, max_degree: int = 3, max_terms: int = 4, hbar: bool = False, complex_coeffs: bool = False):
    """Small sparse polynomial symbols."""
    nterms = draw(st.integers(1, max_terms))
    terms: dict = {}
    for _ in range(nterms):
        deg = draw(st.integers(0, max_degree))
        exps = [0] * dim
        for _ in range(deg):
            exps[draw(st.integers(0, dim - 1))] += 1
        hp = draw(st.integers(0, 2)) if hbar else 0
        re = draw(_coeff)
        im = draw(_coeff) if complex_coeffs else Fraction(0)
        terms.setdefault(tuple(exps), {})[hp] = (re, im)
    return PolySymbol(dim, terms)


dims = st.sampled_from([2, 4])


@pytest.fixture(scope="session")
def qp():
    return PolySymbol.variable(0, 2), PolySymbol.variable(1, 2)


def fock_expectations(hbar: float, q0: float, p0: float, t: float, N: int = 160):
    """``<q>, <p>, <q^2>`` at time ``t`` for ``H = p^2/2 + q^4/4`` from a coherent state.

    Matrix mechanics in a truncated number basis with ``[q, p] = i hbar``; the
    coherent state has a Gaussian Wigner function with mean ``(q0, p0)`` and
    covariance ``hbar/2``.  Independent of every phase-space routine.
    """
    import numpy as np
    import scipy.linalg as sl
    from scipy.special import gammaln

    a = np.diag(np.sqrt(np.arange(1, N)), 1).astype(complex)
    ad = a.conj().T
    q = np.sqrt(hbar / 2) * (a + ad)
    p = 1j * np.sqrt(hbar / 2) * (ad - a)
    Hm = p @ p / 2 + np.linalg.matrix_power(q, 4) / 4
    alpha = (q0 + 1j * p0) / np.sqrt(2 * hbar)
    n = np.arange(N)
    psi = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(alpha + 0j) - 0.5 * gammaln(n + 1))
    psi /= np.linalg.norm(psi)
    psi_t = sl.expm(-1j * Hm * t / hbar) @ psi
    return [float(np.real(psi_t.conj() @ A @ psi_t)) for A in (q, p, q @ q)]
