"""Skew-gradient projection for second-class constraints in symplectic basis.

Constraints ``G_a`` (``a = 1..2m``) must satisfy ``{G_a, G_b} = I_ab`` and
``G_a ^ G_b = I_ab`` with ``I_ab = [[0, E], [-E, 0]]``.  Indices are raised
with ``I^{ab} = -I_ab``, so ``G^a = I^{ab} G_b``.  A function is projected by

    f_s = sum_k 1/k! {...{f, G^{a1}}, ... G^{ak}} G_{a1} ... G_{ak}

and quantum-mechanically with the Moyal bracket and left-nested circ
products ``((B o G_{a1}) o G_{a2}) o ...``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from .dynamics import CLASSICAL, QUANTUM, dot_compose, flow_series, observable_series, star_compose
from .poly import (
    DimensionError,
    PolySymbol,
    circ_product,
    moyal_bracket,
    multiply,
    poisson_bracket,
)
from .records import VerificationRecord, residual_record
from .series import TauSeries

__all__ = [
    "ConstraintSet",
    "ConstraintError",
    "NonTerminatingProjection",
    "PhiSolveError",
    "validate_symplectic_basis",
    "classical_project",
    "quantum_project",
    "project",
    "projected_hamiltonian",
    "check_constraint_preservation",
    "check_flow_projection_commute",
    "check_involution",
    "solve_phi",
    "constrained_solution",
]

DEFAULT_MAX_K = 8


class ConstraintError(ValueError):
    """Constraint functions do not form a symplectic basis."""


class NonTerminatingProjection(RuntimeError):
    """Projection series still has nonzero terms after ``max_k`` levels."""


class PhiSolveError(RuntimeError):
    """No representation ``f_t = phi(*xi_t)`` within the monomial ansatz."""


@dataclass(frozen=True)
class ConstraintSet:
    """Validated constraints ``G`` with lowering matrix ``Imat`` (``I_ab``)."""

    G: tuple[PolySymbol, ...]
    Imat: np.ndarray

    @property
    def m(self) -> int:
        return len(self.G) // 2

    @property
    def dim(self) -> int:
        return self.G[0].dim

    @property
    def raised(self) -> tuple[PolySymbol, ...]:
        """``G^a = I^{ab} G_b`` with ``I^{ab} = -I_ab``."""
        out = []
        for a in range(len(self.G)):
            acc = PolySymbol.zero(self.dim)
            for b, g in enumerate(self.G):
                c = -int(self.Imat[a, b])
                if c:
                    acc = acc + g.scale(c)
            out.append(acc)
        return tuple(out)

    def to_literal(self) -> list:
        return [g.to_literal() for g in self.G]


def _lower_matrix(m: int) -> np.ndarray:
    Imat = np.zeros((2 * m, 2 * m), dtype=np.int64)
    Imat[:m, m:] = np.eye(m, dtype=np.int64)
    Imat[m:, :m] = -np.eye(m, dtype=np.int64)
    return Imat


def validate_symplectic_basis(G: Sequence[PolySymbol]) -> ConstraintSet:
    """Check both bracket tables exactly and return a :class:`ConstraintSet`.

    Raises
    ------
    ConstraintError
        Odd count, non-Hermitian symbol, degenerate bracket matrix, or a pair
        ``(a, b)`` whose bracket differs from ``I_ab`` (the message names the
        pair and the residual).
    """
    G = tuple(G)
    if not G or len(G) % 2:
        raise ConstraintError("need a non-empty, even number of constraint functions")
    dim = G[0].dim
    for g in G:
        if g.dim != dim:
            raise DimensionError("constraints live on different phase spaces")
        if not g.is_hermitian_symbol():
            raise ConstraintError(f"constraint {g} is not a Hermitian symbol")
    m = len(G) // 2
    if 2 * m >= dim:
        raise ConstraintError("need fewer constraint pairs than degrees of freedom")
    Imat = _lower_matrix(m)
    table = [[poisson_bracket(a, b) for b in G] for a in G]
    # degenerate if the bracket matrix is singular at a generic point
    probe = np.array([0.37 + 0.11 * k for k in range(dim)])
    from .poly import evaluate

    num = np.array([[evaluate(t, probe).real for t in row] for row in table])
    if abs(np.linalg.det(num)) < 1e-12:
        raise ConstraintError("degenerate constraint bracket matrix")
    for label, br in (("poisson", poisson_bracket), ("moyal", moyal_bracket)):
        for a, b in itertools.product(range(2 * m), repeat=2):
            r = br(G[a], G[b]) - PolySymbol.constant(int(Imat[a, b]), dim)
            if not r.is_zero():
                raise ConstraintError(f"{label} bracket of (G{a + 1}, G{b + 1}) differs from I_ab by {r}")
    return ConstraintSet(G, Imat)


def _project(f: PolySymbol, cs: ConstraintSet, max_k: int, quantum: bool, hbar_max) -> PolySymbol:
    if f.dim != cs.dim:
        raise DimensionError(f"dimension mismatch: {f.dim} vs {cs.dim}")
    up = cs.raised
    G = cs.G
    if quantum:
        br = lambda a, b: moyal_bracket(a, b, hbar_max)  # noqa: E731
    else:
        br = poisson_bracket
    total = f.truncate_hbar(hbar_max) if quantum else f
    # classical products commute, so brackets can be grouped by multiset
    level: dict[tuple[int, ...], PolySymbol] = {(): f}
    for k in range(1, max_k + 2):
        nxt: dict[tuple[int, ...], PolySymbol] = {}
        for idx, B in level.items():
            for a, g in enumerate(up):
                nb = br(B, g)
                if nb.is_zero():
                    continue
                key = idx + (a,) if quantum else tuple(sorted(idx + (a,)))
                nxt[key] = nxt[key] + nb if key in nxt else nb
        nxt = {i: b for i, b in nxt.items() if not b.is_zero()}
        if not nxt:
            return total
        if k > max_k:
            raise NonTerminatingProjection(f"projection of {f} has nonzero terms beyond k={max_k}")
        w = mpq(1, math.factorial(k))
        for idx, B in nxt.items():
            t = B
            for a in idx:
                t = circ_product(t, G[a], hbar_max) if quantum else multiply(t, G[a])
            total = total + t.scale(w)
        level = nxt
    return total  # pragma: no cover


def classical_project(f: PolySymbol, cs: ConstraintSet, max_k: int = DEFAULT_MAX_K) -> PolySymbol:
    """Classical skew-gradient projection ``f_s`` (exact)."""
    return _project(f, cs, max_k, False, None)


def quantum_project(
    f: PolySymbol, cs: ConstraintSet, max_k: int = DEFAULT_MAX_K, hbar_max: int | None = None
) -> PolySymbol:
    """Quantum projection ``f_t`` (Moyal brackets, left-nested circ products)."""
    return _project(f, cs, max_k, True, hbar_max)


def project(f: PolySymbol, cs: ConstraintSet, mode: str, max_k: int = DEFAULT_MAX_K, hbar_max=None):
    if mode == CLASSICAL:
        return classical_project(f, cs, max_k)
    if mode == QUANTUM:
        return quantum_project(f, cs, max_k, hbar_max)
    raise ValueError(f"mode must be 'quantum' or 'classical', got {mode!r}")


def projected_hamiltonian(H: PolySymbol, cs: ConstraintSet, mode: str = CLASSICAL, max_k: int = DEFAULT_MAX_K):
    return project(H, cs, mode, max_k)


def _project_series(s: TauSeries, cs: ConstraintSet, mode: str, max_k: int, hbar_max=None) -> TauSeries:
    return s.map(lambda c: project(c, cs, mode, max_k, hbar_max))


def check_involution(f: PolySymbol, cs: ConstraintSet, mode: str = CLASSICAL, max_k: int = DEFAULT_MAX_K):
    """Involution and idempotence residuals of the projection of ``f``."""
    fp = project(f, cs, mode, max_k)
    br = poisson_bracket if mode == CLASSICAL else moyal_bracket
    residuals = {f"[f_proj,G{a + 1}]": br(fp, g) for a, g in enumerate(cs.G)}
    residuals["idempotence"] = project(fp, cs, mode, max_k) - fp
    return residual_record(f"involution-{mode}", str(f), {"max_k": max_k}, residuals)


def check_constraint_preservation(
    H: PolySymbol, cs: ConstraintSet, K: int, mode: str = CLASSICAL, max_k: int = DEFAULT_MAX_K
) -> VerificationRecord:
    """``G_a(c) - G_a`` (classical) or ``G_a(*u) - G_a`` (quantum) under the projected flow."""
    Hp = project(H, cs, mode, max_k)
    u = flow_series(Hp, K, mode)
    residuals = {}
    for a, g in enumerate(cs.G):
        comp = dot_compose(g, u) if mode == CLASSICAL else star_compose(g, u)
        residuals[f"G{a + 1}"] = comp - g
    return residual_record(f"constraint-preservation-{mode}", str(H), {"K": K}, residuals)


def check_flow_projection_commute(
    H: PolySymbol,
    cs: ConstraintSet,
    K: int,
    mode: str = CLASSICAL,
    *,
    hbar_max: int = 2,
    composition_order: int = 3,
    max_k: int = DEFAULT_MAX_K,
) -> VerificationRecord:
    """Projected flow vs. flow of projected points vs. projection of flowed points.

    Classical: ``c_s(xi, t) = c(xi_s(xi), t) = xi_s(c(xi, t))``.
    Quantum (through ``hbar_max``): ``u_t(xi, t) = u(*xi_t(xi), t) = xi_t(*u(xi, t))``,
    plus the composition law of the projected flow to ``composition_order``.
    """
    dim = cs.dim
    Hp = project(H, cs, mode, max_k)
    hm = hbar_max if mode == QUANTUM else None
    u = flow_series(Hp, K, mode, hm)
    xs = [PolySymbol.variable(i, dim) for i in range(dim)]
    xp = [project(x, cs, mode, max_k, hm) for x in xs]
    xp_series = [TauSeries.constant(x, K, 0) for x in xp]
    residuals = {}
    orders = {"K": K}
    for i in range(dim):
        up = _project_series(u[i], cs, mode, max_k, hm)
        if mode == CLASSICAL:
            first = dot_compose(u[i], xp_series)
            second = dot_compose(xp[i], u)
        else:
            first = star_compose(u[i], xp_series, hbar_max=hm)
            second = star_compose(xp[i], u, hbar_max=hm)
        residuals[f"proj(u{i})-u{i}(xi_p)"] = (up - first).truncate_hbar(hm)
        residuals[f"proj(u{i})-xi_p{i}(u)"] = (up - second).truncate_hbar(hm)
    if mode == QUANTUM and composition_order > 0:
        orders.update({"hbar": hm, "composition": composition_order})
        uc = flow_series(Hp, composition_order, mode, hm)
        ut = [_project_series(c, cs, mode, max_k, hm) for c in uc]
        for i in range(dim):
            lhs = ut[i].split_sum()
            rhs = star_compose(ut[i], ut, param_map=(1,), hbar_max=hm)
            residuals[f"composition u_t{i}"] = (lhs - rhs).truncate_hbar(hm)
    return residual_record(f"flow-projection-commute-{mode}", str(H), orders, residuals)


def solve_phi(
    f_t: PolySymbol,
    xi_t: Sequence[PolySymbol],
    degree: int,
    hbar_max: int | None = None,
) -> PolySymbol:
    """Find ``phi`` with ``phi(*xi_t) = f_t`` over monomials of total degree ``<= degree``.

    Unknowns are real coefficients of ``xi^alpha hbar^h`` and ``i xi^alpha hbar^h``
    with ``h <= hbar_max`` (default: ``f_t``'s hbar degree); the linear system
    is solved exactly over the rationals.  Free parameters are set to zero.

    Raises
    ------
    PhiSolveError
        If the system is inconsistent within the ansatz.
    """
    from sympy import Rational
    from sympy.polys.domains import QQ
    from sympy.polys.matrices import DomainMatrix

    dim = f_t.dim
    hm = f_t.hbar_degree() if hbar_max is None else hbar_max
    args = [TauSeries.constant(x, 0, 0) for x in xi_t]
    basis = []
    for total in range(degree + 1):
        for exps in _compositions(total, dim):
            image = star_compose(PolySymbol.monomial(exps), args, hbar_max=hm)[()]
            for h in range(hm + 1):
                for imag in (False, True):
                    b = image.scale(1, hbar_shift=h).truncate_hbar(hm)
                    if imag:
                        b = b.times_i()
                    basis.append(((exps, h, imag), b))
    rows: dict = {}

    def row_keys(p: PolySymbol):
        for exps, hp, (re, im) in p.items():
            yield (exps, hp, 0), re
            yield (exps, hp, 1), im

    for _, b in basis:
        for key, _v in row_keys(b):
            rows.setdefault(key, len(rows))
    for key, _v in row_keys(f_t.truncate_hbar(hm)):
        rows.setdefault(key, len(rows))
    A = [[QQ(0)] * len(basis) for _ in rows]
    rhs = [[QQ(0)] for _ in rows]
    for j, (_, b) in enumerate(basis):
        for key, v in row_keys(b):
            A[rows[key]][j] = QQ(int(v.numerator), int(v.denominator))
    for key, v in row_keys(f_t.truncate_hbar(hm)):
        rhs[rows[key]][0] = QQ(int(v.numerator), int(v.denominator))
    aug = DomainMatrix([a + r for a, r in zip(A, rhs)], (len(rows), len(basis) + 1), QQ)
    R, pivots = aug.rref()
    if len(basis) in pivots:
        raise PhiSolveError(f"no phi of degree <= {degree} reproduces {f_t}")
    Rl = R.to_Matrix()
    phi = PolySymbol.zero(dim)
    for r, col in enumerate(pivots):
        val = Rational(Rl[r, len(basis)])
        if val == 0:
            continue
        (exps, h, imag), _ = basis[col]
        c = mpq(int(val.p), int(val.q))
        term = PolySymbol.monomial(exps, c, hbar_power=h)
        phi = phi + (term.times_i() if imag else term)
    return phi


def _compositions(total: int, parts: int):
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cut + (total + parts - 1,):
            out.append(c - prev - 1)
            prev = c
        yield tuple(out)


def constrained_solution(
    f: PolySymbol,
    H: PolySymbol,
    cs: ConstraintSet,
    K: int,
    mode: str = CLASSICAL,
    *,
    phi: PolySymbol | None = None,
    phi_degree: int | None = None,
    max_k: int = DEFAULT_MAX_K,
    hbar_max: int | None = None,
) -> TauSeries:
    """Evolved projected observable via characteristics.

    Classical: ``f(c_s(xi, t))`` with ``c_s`` the projected flow of ``H_s``.
    Quantum: ``phi(*u_t(xi, t))`` where ``phi(*xi_t) = f_t``; ``phi`` is found by
    :func:`solve_phi` unless supplied.
    """
    dim = cs.dim
    Hp = project(H, cs, mode, max_k, hbar_max)
    u = flow_series(Hp, K, mode, hbar_max)
    up = [_project_series(c, cs, mode, max_k, hbar_max) for c in u]
    if mode == CLASSICAL:
        return dot_compose(f, up)
    if phi is None:
        xi_t = [quantum_project(PolySymbol.variable(i, dim), cs, max_k, hbar_max) for i in range(dim)]
        f_t = quantum_project(f, cs, max_k, hbar_max)
        phi = solve_phi(f_t, xi_t, f.degree() if phi_degree is None else phi_degree, hbar_max)
    return star_compose(phi, up, hbar_max=hbar_max)
