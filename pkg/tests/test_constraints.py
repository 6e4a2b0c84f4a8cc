"""Skew-gradient projection onto symplectic constraint bases."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings

from qchar.constraints import (
    ConstraintError,
    NonTerminatingProjection,
    PhiSolveError,
    check_constraint_preservation,
    check_flow_projection_commute,
    check_involution,
    classical_project,
    constrained_solution,
    project,
    projected_hamiltonian,
    quantum_project,
    solve_phi,
    validate_symplectic_basis,
)
from qchar.dynamics import CLASSICAL, QUANTUM, observable_series
from qchar.poly import PolySymbol, circ_product, evaluate, grade_extract, moyal_bracket, poisson_bracket
from qchar.series import TauSeries

from conftest import from_sympy, polys, sympy_star, to_sympy, xsyms

x1, x2, y1, y2 = (PolySymbol.variable(i, 4) for i in range(4))
ZERO = PolySymbol.zero(4)
HARM = (x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2) / 2

BASES = {
    "linear": [x2, y2],
    "tilted": [x2 - y1, y2],
    "cubic": [x2, y2 + x2 * x2],
    "cubic_p": [x2 + y2 * y2, y2],
}


@pytest.fixture(scope="module")
def cs():
    return validate_symplectic_basis([x2, y2])


def test_validate_examples(cs):
    assert cs.m == 1 and cs.dim == 4
    assert poisson_bracket(cs.G[0], cs.G[1]) == PolySymbol.one(4)
    with pytest.raises(ConstraintError, match="degenerate"):
        validate_symplectic_basis([x2, x2])
    with pytest.raises(ConstraintError, match="G1, G2"):
        validate_symplectic_basis([x2, 2 * y2])


def test_validate_errors():
    with pytest.raises(ConstraintError):
        validate_symplectic_basis([x2])
    with pytest.raises(ConstraintError):
        validate_symplectic_basis([x2 * (0, 1), y2])
    with pytest.raises(ConstraintError):
        validate_symplectic_basis([x1, x2, y1, y2])


def test_raised_index(cs):
    # G^a = I^{ab} G_b with I^{ab} = -I_ab
    assert cs.raised == (-y2, x2)


def test_classical_project_examples(cs):
    assert [classical_project(v, cs) for v in (x1, x2, y1, y2)] == [x1, ZERO, y1, ZERO]
    assert classical_project(x1 * y1 + x2 * y2, cs) == x1 * y1
    assert classical_project(PolySymbol.constant(5, 4), cs) == PolySymbol.constant(5, 4)


def test_quantum_project_examples(cs):
    for v in (x1, x2, y1, y2):
        assert quantum_project(v, cs) == classical_project(v, cs)
    assert quantum_project(circ_product(x2, y2), cs).is_zero()
    assert quantum_project(PolySymbol.one(4), cs) == PolySymbol.one(4)


def test_projected_hamiltonian_examples(cs):
    free = (x1 * x1 + y1 * y1) / 2
    assert projected_hamiltonian(HARM, cs) == free
    assert projected_hamiltonian(free, cs) == free
    assert projected_hamiltonian(HARM, cs, QUANTUM) == free


def test_non_terminating_projection(cs):
    with pytest.raises(NonTerminatingProjection):
        classical_project(x1 * y1 + x2 * y2, cs, max_k=1)
    with pytest.raises(NonTerminatingProjection):
        quantum_project(x2**3 * y2**3, cs, max_k=3)


def _surface_points(G, rng, count=5):
    """Points with G = 0 for the bases above (all have G = 0 <=> x2 = y2 = 0 up to a shift)."""
    pts = []
    for _ in range(count):
        a, b = rng.normal(size=2)
        if G is BASES["tilted"]:
            pts.append([a, b, b, 0.0])
        else:
            pts.append([a, 0.0, b, 0.0])
    return pts


@pytest.mark.parametrize("name", list(BASES))
@given(f=polys(dim=4, max_degree=3, max_terms=3))
@settings(max_examples=8)
def test_classical_projection_unique_characterisation(name, f):
    """In involution with G and equal to f on the surface G = 0."""
    G = BASES[name]
    cs = validate_symplectic_basis(G)
    fs = classical_project(f, cs)
    assert all(poisson_bracket(fs, g).is_zero() for g in G)
    for pt in _surface_points(G, np.random.default_rng(0)):
        assert evaluate(fs, pt) == pytest.approx(evaluate(f, pt), abs=1e-12)


@pytest.mark.parametrize("name", list(BASES))
@given(f=polys(dim=4, max_degree=3, max_terms=3))
@settings(max_examples=8)
def test_projection_is_composition_with_projected_coordinates(name, f):
    from qchar.dynamics import dot_compose

    cs = validate_symplectic_basis(BASES[name])
    xs = [TauSeries.constant(classical_project(PolySymbol.variable(i, 4), cs), 0, 0) for i in range(4)]
    assert classical_project(f, cs) == dot_compose(f, xs)[()]


@pytest.mark.parametrize("name", list(BASES))
@given(f=polys(dim=4, max_degree=3, max_terms=3, hbar=True))
@settings(max_examples=8)
def test_involution_and_idempotence(name, f):
    cs = validate_symplectic_basis(BASES[name])
    for mode in (CLASSICAL, QUANTUM):
        assert check_involution(f, cs, mode).residual_zero


@pytest.mark.parametrize("name", list(BASES))
@given(f=polys(dim=4, max_degree=3, max_terms=3))
@settings(max_examples=8)
def test_quantum_projection_hbar0_is_classical(name, f):
    cs = validate_symplectic_basis(BASES[name])
    assert grade_extract(quantum_project(f, cs), 0) == classical_project(f, cs)


@pytest.mark.parametrize(
    "coeffs,power",
    [((1, 1, 0, 0), 3), ((1, 1, 0, 0), 4), ((0, 2, 1, 0), 3), ((1, 1, 1, 1), 4)],
)
def test_quantum_projection_matches_adapted_operator_symbol(coeffs, power):
    """Basis (q2 + p2^2, p2): with X = q2 + p2^2, Y = p2 the operator q2 equals X - Y^2.

    For a linear form L the symbol L^k is also the star power, so the operator
    L^k has symbol (L with q2 -> X - Y^2)^{*k} in the adapted pair; restricting
    to X = Y = 0 gives the projected symbol.
    """
    cs = validate_symplectic_basis(BASES["cubic_p"])
    a, b, c, d = coeffs
    L = a * x1 + b * x2 + c * y1 + d * y2
    # adapted coordinates reuse slots (x1, X, y1, Y)
    g = a * x1 + b * (x2 - y2 * y2) + c * y1 + d * y2
    s = g
    for _ in range(power - 1):
        s = from_sympy(sympy_star(s, g), 4)
    xs = xsyms(4)
    expr = to_sympy(s).subs({xs[1]: 0, xs[3]: 0})
    assert quantum_project(L**power, cs) == from_sympy(expr, 4)


@pytest.mark.parametrize("mode", [CLASSICAL, QUANTUM])
@pytest.mark.parametrize("name", ["linear", "tilted", "cubic"])
def test_preservation_and_commutation(name, mode):
    cs = validate_symplectic_basis(BASES[name])
    H = (x1 * x1 + y1 * y1) / 2 + x1**3 / 3 + x2 * x2 * y1 + HARM
    for Hx in (H, HARM, ZERO):
        assert check_constraint_preservation(Hx, cs, 4, mode).residual_zero
        assert check_flow_projection_commute(Hx, cs, 3, mode, hbar_max=2).residual_zero


def test_preservation_detects_unprojected_flow(cs):
    # the unprojected flow of a coupling Hamiltonian moves the constraints
    from qchar.dynamics import dot_compose, flow_series

    u = flow_series(HARM + x1 * x2, 3, CLASSICAL)
    assert not (dot_compose(x2, u) - x2).is_zero()


@pytest.mark.parametrize("mode", [CLASSICAL, QUANTUM])
def test_constrained_solution_examples(cs, mode):
    K = 6
    sol = constrained_solution(x1, HARM, cs, K, mode)
    free = (x1 * x1 + y1 * y1) / 2
    assert sol == observable_series(x1, free, K, mode)
    assert sol[1] == y1 and sol[2] == -x1 / 2
    assert constrained_solution(x2, HARM, cs, K, mode).is_zero()
    assert constrained_solution(PolySymbol.one(4), HARM, cs, K, mode) == TauSeries.constant(PolySymbol.one(4), K)


@pytest.mark.parametrize("name", ["linear", "cubic_p"])
@pytest.mark.parametrize("f", [x1**3 + x2 * y1, (x1 + x2) ** 3, x1 * y1 * y2 + y1 * y1])
def test_constrained_solution_equals_projected_evolution(name, f):
    cs = validate_symplectic_basis(BASES[name])
    H = (x1 * x1 + y1 * y1) / 2 + x1**4 / 4 + HARM
    K = 3
    for mode in (CLASSICAL, QUANTUM):
        sol = constrained_solution(f, H, cs, K, mode, hbar_max=2)
        ref = observable_series(project(f, cs, mode, hbar_max=2), projected_hamiltonian(H, cs, mode), K, mode)
        assert (sol - ref).truncate_hbar(2).is_zero()


def test_solve_phi_recovers_ordering_constant():
    cs = validate_symplectic_basis(BASES["cubic_p"])
    f_t = quantum_project((x1 + x2) ** 3, cs)
    assert f_t == x1**3 + PolySymbol.hbar(4) ** 2 / 2
    xi_t = [quantum_project(v, cs) for v in (x1, x2, y1, y2)]
    phi = solve_phi(f_t, xi_t, 3)
    from qchar.dynamics import star_compose

    assert star_compose(phi, [TauSeries.constant(x, 0, 0) for x in xi_t])[()] == f_t


def test_solve_phi_inconsistent(cs):
    xi_t = [quantum_project(v, cs) for v in (x1, x2, y1, y2)]
    with pytest.raises(PhiSolveError):
        solve_phi(x2, xi_t, 2)


def test_constraint_set_literal_round_trip(cs):
    lits = cs.to_literal()
    assert [PolySymbol.from_literal(x, 4) for x in lits] == list(cs.G)


def test_moyal_involution_of_projected_cubic():
    cs = validate_symplectic_basis(BASES["cubic"])
    ft = quantum_project(x1 * x2 * y2 + y2**3, cs)
    assert all(moyal_bracket(ft, g).is_zero() for g in cs.G)
