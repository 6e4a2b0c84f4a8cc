"""Exact tau-series engine for quantum and classical phase flow.

Everything here is exact rational arithmetic and is meant as an
order-by-order oracle: residuals are compared with zero, never with a
tolerance.  The series are formal; no claim is made about convergence.
"""
from __future__ import annotations

import itertools
import math
from typing import Sequence

from gmpy2 import mpq

from .poly import (
    DimensionError,
    PolySymbol,
    SymplecticStructure,
    moyal_bracket,
    multiply,
    poisson_bracket,
    star_product,
)
from .records import VerificationRecord, residual_record
from .series import TauSeries, TruncationError

__all__ = [
    "QUANTUM",
    "CLASSICAL",
    "IDENTITY_KINDS",
    "flow_series",
    "observable_series",
    "star_compose",
    "dot_compose",
    "verify_identity",
    "canonicity_deviation",
    "conjugate_flow",
    "inertia_flow",
    "check_inertia_flow",
]

QUANTUM = "quantum"
CLASSICAL = "classical"
IDENTITY_KINDS = (
    "moyal-invariance",
    "energy-conservation",
    "composition-law",
    "classical-quantum-connector",
)


def _bracket(mode: str, hbar_max: int | None):
    if mode == QUANTUM:
        return lambda a, b: moyal_bracket(a, b, hbar_max)
    if mode == CLASSICAL:
        return poisson_bracket
    raise ValueError(f"mode must be 'quantum' or 'classical', got {mode!r}")


def _require_hermitian(H) -> None:
    coeffs = H.terms.values() if isinstance(H, TauSeries) else [H]
    for c in coeffs:
        if not c.is_hermitian_symbol():
            raise ValueError("Hamiltonian symbol must be Hermitian (real coefficients)")


def observable_series(
    f: PolySymbol | TauSeries,
    H: PolySymbol | TauSeries,
    K: int,
    mode: str = QUANTUM,
    hbar_max: int | None = None,
) -> TauSeries:
    """Taylor series of the evolved observable, ``sum_s tau^s/s! ad_H^s f``.

    ``ad_H f = f ^ H`` in quantum mode and ``{f, H}`` in classical mode.
    ``H`` may itself be a series in other parameters (for instance a
    Hamiltonian transported by a unitary map); the evolution parameter is then
    appended as the last parameter of the result.
    """
    if K < 0:
        raise ValueError("order must be non-negative")
    bracket = _bracket(mode, hbar_max)
    Hs = H if isinstance(H, TauSeries) else TauSeries.constant(H, K, 0)
    if isinstance(f, TauSeries):
        if f.nparams != Hs.nparams:
            raise TruncationError("observable and Hamiltonian series use different parameters")
        fs = f
    else:
        fs = TauSeries.constant(f, K, Hs.nparams)
    if fs.dim != Hs.dim:
        raise DimensionError(f"dimension mismatch: {fs.dim} vs {Hs.dim}")
    K = min(K, Hs.order, fs.order)
    cur = fs.truncate(K).truncate_hbar(hbar_max)
    out = {}
    for s in range(K + 1):
        for idx, c in cur.terms.items():
            out[idx + (s,)] = c
        if s == K:
            break
        cur = cur.bilinear(Hs, bracket, order=K - s - 1).scale(mpq(1, s + 1))
    return TauSeries(fs.dim, K, out, Hs.nparams + 1)


def flow_series(
    H: PolySymbol | TauSeries,
    K: int,
    mode: str = QUANTUM,
    hbar_max: int | None = None,
) -> list[TauSeries]:
    """Series of the phase-flow components ``u^i(xi, tau)`` (or ``c^i`` classically)."""
    _require_hermitian(H)
    dim = H.dim
    return [
        observable_series(PolySymbol.variable(i, dim), H, K, mode, hbar_max) for i in range(dim)
    ]


def _check_flow(u: Sequence[TauSeries]) -> tuple[int, int, int]:
    if not u:
        raise ValueError("empty flow")
    dim, order, nparams = u[0].dim, u[0].order, u[0].nparams
    if len(u) != dim:
        raise DimensionError(f"flow has {len(u)} components for phase-space dim {dim}")
    for s in u:
        if s.dim != dim:
            raise DimensionError("flow components have different dimensions")
        if s.order != order or s.nparams != nparams:
            raise TruncationError("flow components have mismatched truncation orders")
    return dim, order, nparams


def _compose(f, u, param_map, op, symmetric: bool, hbar_max: int | None) -> TauSeries:
    dim, K, P_u = _check_flow(u)
    if isinstance(f, TauSeries):
        fterms = dict(f.terms)
        P_f = f.nparams
        K = min(K, f.order)
    else:
        fterms = {(): f}
        P_f = 0
    if f.dim != dim:
        raise DimensionError(f"dimension mismatch: {f.dim} vs {dim}")
    if param_map is None:
        param_map = tuple(range(P_u, P_u + P_f))
    param_map = tuple(param_map)
    if len(param_map) != P_f:
        raise TruncationError("param_map must have one entry per outer parameter")
    R = max([P_u] + [j + 1 for j in param_map])

    # highest inner order each multi-index is needed at
    req: dict[tuple[int, ...], int] = {}
    for idx_f, poly in fterms.items():
        L = K - sum(idx_f)
        if L < 0:
            continue
        for exps in poly.terms:
            for alpha in itertools.product(*(range(e + 1) for e in exps)):
                if req.get(alpha, -1) < L:
                    req[alpha] = L

    one = PolySymbol.one(dim)
    W: dict[tuple[int, ...], TauSeries] = {}
    for alpha in sorted(req, key=lambda a: (sum(a), a)):
        L = req[alpha]
        if not any(alpha):
            W[alpha] = TauSeries.constant(one, L, P_u)
            continue
        acc = None
        for i, a_i in enumerate(alpha):
            if not a_i:
                continue
            prev = alpha[:i] + (a_i - 1,) + alpha[i + 1 :]
            term = u[i].bilinear(W[prev], op, order=L)
            acc = term if acc is None else acc + term
            if not symmetric:
                break
        W[alpha] = acc

    out: dict = {}
    for idx_f, poly in fterms.items():
        b = sum(idx_f)
        if b > K:
            continue
        for exps, grades in poly.terms.items():
            c = PolySymbol(dim, {(0,) * dim: grades})
            if symmetric:
                s = sum(exps)
                weight = mpq(math.prod(math.factorial(e) for e in exps), math.factorial(s))
                c = c.scale(weight)
            c = c.truncate_hbar(hbar_max)
            for idx_u, w in W[exps].terms.items():
                if sum(idx_u) + b > K:
                    continue
                key = [0] * R
                for j, e in enumerate(idx_u):
                    key[j] += e
                for j, e in zip(param_map, idx_f):
                    key[j] += e
                key = tuple(key)
                r = multiply(c, w)
                out[key] = out[key] + r if key in out else r
    return TauSeries(dim, K, out, R)


def star_compose(
    f: PolySymbol | TauSeries,
    u: Sequence[TauSeries],
    param_map: Sequence[int] | None = None,
    hbar_max: int | None = None,
) -> TauSeries:
    """Star-composition ``f(*u)``.

    Each monomial of ``f`` is replaced by the Weyl-symmetrised star product of
    the corresponding flow components, i.e. the average of ``u^{i_1} * ... *
    u^{i_s}`` over orderings, which equals the symmetrised circ power.  The
    sum over distinct words is built by the recursion ``W(a) = sum_i u^i *
    W(a - e_i)`` so every word is produced once.

    If ``f`` is itself a series, its parameters are placed at ``param_map``
    in the result (default: appended after those of ``u``; mapping onto an
    existing parameter merges the two).
    """
    return _compose(f, u, param_map, lambda a, b: star_product(a, b, hbar_max), True, hbar_max)


def dot_compose(
    f: PolySymbol | TauSeries,
    u: Sequence[TauSeries],
    param_map: Sequence[int] | None = None,
) -> TauSeries:
    """Ordinary composition ``f(u)`` of a polynomial with series arguments."""
    return _compose(f, u, param_map, multiply, False, None)


def _identity_flow(dim: int, order: int, nparams: int = 1) -> list[TauSeries]:
    return [TauSeries.constant(PolySymbol.variable(i, dim), order, nparams) for i in range(dim)]


def _default_observables(dim: int) -> list[PolySymbol]:
    n = dim // 2
    xs = [PolySymbol.variable(i, dim) for i in range(dim)]
    return xs + [xs[0] * xs[0] * xs[n]]


def verify_identity(
    kind: str,
    H: PolySymbol,
    K: int,
    *,
    observables: Sequence[PolySymbol] | None = None,
    hbar_max: int | None = None,
    label: str | None = None,
) -> VerificationRecord:
    """Exact residual check of one flow identity.

    ``moyal-invariance``: ``u^i ^ u^j + I^{ij}``.
    ``energy-conservation``: ``H(*u) - H``.
    ``composition-law``: ``u(xi, t1 + t2) - u(*u(xi, t1), t2)`` to combined order ``K``.
    ``classical-quantum-connector``: ``f(*u) - f_c(c(*u, -tau), tau)`` for each
    observable, through ``hbar_max`` (default 2).
    """
    if kind not in IDENTITY_KINDS:
        raise ValueError(f"unknown identity kind {kind!r}; expected one of {IDENTITY_KINDS}")
    if K < 1:
        raise ValueError("identity checks need order K >= 1")
    _require_hermitian(H)
    dim = H.dim
    ss = SymplecticStructure(dim // 2)
    desc = label or str(H)
    orders: dict = {"K": K}
    residuals: dict = {}

    if kind == "moyal-invariance":
        u = flow_series(H, K, QUANTUM, hbar_max)
        for i in range(dim):
            for j in range(dim):
                r = u[i].wedge(u[j], hbar_max) + PolySymbol.constant(ss.entry(i, j), dim)
                residuals[f"u{i}^u{j}+I{i}{j}"] = r

    elif kind == "energy-conservation":
        u = flow_series(H, K, QUANTUM, hbar_max)
        residuals["H(*u)-H"] = star_compose(H, u, hbar_max=hbar_max) - H.truncate_hbar(hbar_max)

    elif kind == "composition-law":
        u = flow_series(H, K, QUANTUM, hbar_max)
        orders = {"combined": K}
        for i in range(dim):
            lhs = u[i].split_sum()
            rhs = star_compose(u[i], u, param_map=(1,), hbar_max=hbar_max)
            residuals[f"u{i}"] = lhs - rhs

    else:
        hmax = 2 if hbar_max is None else hbar_max
        orders = {"combined": K, "hbar": hmax}
        u = flow_series(H, K, QUANTUM, hmax)
        back = [c.reverse() for c in flow_series(H, K, CLASSICAL)]
        for m, f in enumerate(observables or _default_observables(dim)):
            fc = observable_series(f, H, K, CLASSICAL)
            pulled = dot_compose(fc, back, param_map=(0,))
            lhs = star_compose(f, u, hbar_max=hmax)
            rhs = star_compose(pulled, u, param_map=(0,), hbar_max=hmax)
            residuals[f"f{m}"] = (lhs - rhs).truncate_hbar(hmax)

    return residual_record(kind, desc, orders, residuals)


def canonicity_deviation(H: PolySymbol, K: int, mode: str = QUANTUM) -> list[list[TauSeries]]:
    """``D^{ij} = {u^i, u^j} + I^{ij}`` as exact series (zero iff the flow is canonical)."""
    if K < 0:
        raise ValueError("order must be non-negative")
    dim = H.dim
    ss = SymplecticStructure(dim // 2)
    u = flow_series(H, K, mode)
    return [
        [u[i].poisson(u[j]) + PolySymbol.constant(ss.entry(i, j), dim) for j in range(dim)]
        for i in range(dim)
    ]


def conjugate_flow(
    H: PolySymbol,
    W: PolySymbol,
    s: int,
    K: int,
    *,
    samples: Sequence[tuple[PolySymbol, PolySymbol]] | None = None,
    hbar_max: int | None = None,
) -> VerificationRecord:
    """Check the flow of ``H`` seen through the unitary map generated by ``W``.

    ``v+`` is the star flow of ``W`` in a map parameter ``sigma`` and ``v-`` its
    inverse (``sigma -> -sigma``).  The conjugated flow
    ``u'(y, tau) = v-(*u(*v+(y), tau))`` is compared with the flow of
    ``H'(y) = H(*v+(y))``.  The star product is also checked to commute with the
    change of variables for each ``(f, g)`` sample.  Series are in
    ``(sigma, tau)`` with combined order ``K`` and sigma-degree at most ``s``.
    """
    _require_hermitian(H)
    _require_hermitian(W)
    if s < 0 or K < 0:
        raise ValueError("orders must be non-negative")
    dim = H.dim
    if W.dim != dim:
        raise DimensionError("H and W live on different phase spaces")

    def cap(x: TauSeries) -> TauSeries:
        return x.cap(0, s)

    vp = [cap(c) for c in flow_series(W, K, QUANTUM, hbar_max)]
    vm = [c.reverse() for c in vp]
    u = flow_series(H, K, QUANTUM, hbar_max)
    moved = [cap(star_compose(c, vp, param_map=(1,), hbar_max=hbar_max)) for c in u]
    uprime = [cap(star_compose(c, moved, param_map=(0,), hbar_max=hbar_max)) for c in vm]
    Hprime = cap(star_compose(H, vp, hbar_max=hbar_max))
    aflow = [cap(c) for c in flow_series(Hprime, K, QUANTUM, hbar_max)]

    residuals: dict = {}
    for i in range(dim):
        residuals[f"u'{i}"] = uprime[i] - aflow[i]
    if samples is None:
        n = dim // 2
        q, p = PolySymbol.variable(0, dim), PolySymbol.variable(n, dim)
        samples = [(q, p), (q * q, p)]
    for m, (f, g) in enumerate(samples):
        lhs = star_compose(star_product(f, g, hbar_max), vp, hbar_max=hbar_max)
        fv = star_compose(f, vp, hbar_max=hbar_max)
        gv = star_compose(g, vp, hbar_max=hbar_max)
        residuals[f"star-invariance{m}"] = cap(lhs - fv.star(gv, hbar_max))
    return residual_record(
        "conjugate-flow",
        f"H={H}; W={W}",
        {"combined": K, "sigma": s},
        residuals,
    )


def inertia_flow(Hprime: PolySymbol, K: int = 1) -> list[TauSeries]:
    """``a^i = y^i + {y^i, H'} tau`` for a Hamiltonian depending on momenta only."""
    dim = Hprime.dim
    n = dim // 2
    if any(Hprime.depends_on(k) for k in range(n)):
        raise ValueError("inertia flow needs a Hamiltonian that depends on momenta only")
    order = max(K, 1)
    out = []
    for i in range(dim):
        y = PolySymbol.variable(i, dim)
        out.append(TauSeries(dim, order, {(0,): y, (1,): poisson_bracket(y, Hprime)}))
    return out


def check_inertia_flow(Hprime: PolySymbol, K: int = 4) -> VerificationRecord:
    """Both bracket tables of the inertia flow, and agreement with the star-flow series."""
    dim = Hprime.dim
    ss = SymplecticStructure(dim // 2)
    a = inertia_flow(Hprime, K)
    residuals: dict = {}
    for i in range(dim):
        for j in range(dim):
            c = PolySymbol.constant(ss.entry(i, j), dim)
            residuals[f"a{i}^a{j}+I{i}{j}"] = a[i].wedge(a[j]) + c
            residuals[f"{{a{i},a{j}}}+I{i}{j}"] = a[i].poisson(a[j]) + c
    for i, c in enumerate(flow_series(Hprime, K)):
        residuals[f"a{i}-u{i}"] = a[i].truncate(K) - c
    return residual_record("inertia-flow", str(Hprime), {"K": K}, residuals)
