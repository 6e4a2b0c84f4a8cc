"""Star product through hbar^2 for smooth, non-polynomial symbols.

Uses only derivatives up to third order at a point:

    f o g = f g - (hbar^2/8) f P^2 g + O(hbar^4)
    f ^ g = f P g - (hbar^2/24) f P^3 g + O(hbar^4)

with ``f P^k g = (-I)^{a1 b1} ... (-I)^{ak bk} f_{,a1..ak} g_{,b1..bk}``.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .poly import PolySymbol
from .semiclassical import CallableOracle, PolynomialOracle

__all__ = [
    "SmoothSymbol",
    "star_truncated",
    "poisson_power",
    "generating_map_symbols",
    "generating_map_example",
    "closed_form_coefficients",
]


class SmoothSymbol(CallableOracle):
    """Function on phase space with derivatives through order 3.

    Analytic derivatives are taken from ``derivatives`` (keys are sorted
    variable-index tuples); the rest use nested central differences with
    step ``eps**(1/(m+2)) * max(1, |x_k|)`` for total order ``m``.
    """

    def __init__(self, func: Callable, dim: int, derivatives: dict | None = None):
        super().__init__(func, dim, derivatives, max_order=3)

    @classmethod
    def from_poly(cls, f: PolySymbol, hbar: float = 0.0) -> SmoothSymbol:
        """Exact derivatives of a polynomial symbol."""
        oracle = PolynomialOracle(f, hbar, max_order=3)
        sym = cls(oracle.value, f.dim)
        sym.derivative = oracle.derivative  # type: ignore[method-assign]
        sym.tensors = oracle.tensors  # type: ignore[method-assign]
        return sym

    def without_analytic(self) -> SmoothSymbol:
        """Same function with every derivative from finite differences."""
        return SmoothSymbol(self.func, self.dim)


def _poisson_matrix(d: int) -> np.ndarray:
    n = d // 2
    P = np.zeros((d, d))
    P[:n, n:] = np.eye(n)
    P[n:, :n] = -np.eye(n)
    return P


def poisson_power(Tf: np.ndarray, Tg: np.ndarray, P: np.ndarray) -> float:
    """``f P^k g`` from the order-``k`` derivative tensors of ``f`` and ``g``."""
    out = Tg
    for _ in range(Tf.ndim):
        out = np.tensordot(P, out, axes=([1], [0]))
        out = np.moveaxis(out, 0, -1)
    return float(np.sum(Tf * out))


def star_truncated(f: SmoothSymbol, g: SmoothSymbol, point, hbar: float) -> tuple[float, float]:
    """``(f o g, f ^ g)`` at ``point`` through hbar^2."""
    if f.dim != g.dim:
        raise ValueError("symbols live on different phase spaces")
    x = np.asarray(point, dtype=float)
    F = f.tensors(x, 3)
    G = g.tensors(x, 3)
    P = _poisson_matrix(f.dim)
    p1, p2, p3 = (poisson_power(F[k], G[k], P) for k in (1, 2, 3))
    circ = float(F[0] * G[0]) - hbar**2 / 8.0 * p2
    wedge = p1 - hbar**2 / 24.0 * p3
    return circ, wedge


def _hbar2_parts(f, g, x) -> tuple[float, float, float, float]:
    F = f.tensors(x, 3)
    G = g.tensors(x, 3)
    P = _poisson_matrix(f.dim)
    return (
        float(F[0] * G[0]),
        poisson_power(F[1], G[1], P),
        -poisson_power(F[2], G[2], P) / 8.0,
        -poisson_power(F[3], G[3], P) / 24.0,
    )


def generating_map_symbols(identity: bool = False) -> tuple[SmoothSymbol, SmoothSymbol]:
    """``q(Q, P)`` and ``p(Q, P)`` for the map generated by ``S = qP + q^3 + qP^2``.

    Solving ``Q = dS/dP = q(1 + 2P)`` and ``p = dS/dq = P + 3q^2 + P^2`` gives
    ``q = Q/d`` and ``p = P + P^2 + 3Q^2/d^2`` with ``d = 1 + 2P``.  With
    ``identity=True`` the map generated by ``S = qP`` is returned instead.
    """
    if identity:
        q = SmoothSymbol(lambda x: x[0], 2, {(0,): lambda x: 1.0})
        p = SmoothSymbol(lambda x: x[1], 2, {(1,): lambda x: 1.0})
        for k in [(1,), (0, 0), (0, 1), (1, 1), (0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)]:
            q.derivatives.setdefault(k, lambda x: 0.0)
        for k in [(0,), (0, 0), (0, 1), (1, 1), (0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)]:
            p.derivatives.setdefault(k, lambda x: 0.0)
        return q, p

    def d(x):
        den = 1.0 + 2.0 * x[1]
        if den == 0.0:
            raise ZeroDivisionError("1 + 2P vanishes")
        return den

    zero = lambda x: 0.0  # noqa: E731
    q = SmoothSymbol(
        lambda x: x[0] / d(x),
        2,
        {
            (0,): lambda x: 1.0 / d(x),
            (1,): lambda x: -2.0 * x[0] / d(x) ** 2,
            (0, 0): zero,
            (0, 1): lambda x: -2.0 / d(x) ** 2,
            (1, 1): lambda x: 8.0 * x[0] / d(x) ** 3,
            (0, 0, 0): zero,
            (0, 0, 1): zero,
            (0, 1, 1): lambda x: 8.0 / d(x) ** 3,
            (1, 1, 1): lambda x: -48.0 * x[0] / d(x) ** 4,
        },
    )
    p = SmoothSymbol(
        lambda x: x[1] + x[1] ** 2 + 3.0 * x[0] ** 2 / d(x) ** 2,
        2,
        {
            (0,): lambda x: 6.0 * x[0] / d(x) ** 2,
            (1,): lambda x: 1.0 + 2.0 * x[1] - 12.0 * x[0] ** 2 / d(x) ** 3,
            (0, 0): lambda x: 6.0 / d(x) ** 2,
            (0, 1): lambda x: -24.0 * x[0] / d(x) ** 3,
            (1, 1): lambda x: 2.0 + 72.0 * x[0] ** 2 / d(x) ** 4,
            (0, 0, 0): zero,
            (0, 0, 1): lambda x: -24.0 / d(x) ** 3,
            (0, 1, 1): lambda x: 144.0 * x[0] / d(x) ** 4,
            (1, 1, 1): lambda x: -576.0 * x[0] ** 2 / d(x) ** 5,
        },
    )
    return q, p


def closed_form_coefficients(Q: float, P: float) -> tuple[float, float]:
    """Reference hbar^2 coefficients ``(6Q/d^5, 24/d^6)`` of the circ and wedge parts."""
    d = 1.0 + 2.0 * P
    return 6.0 * Q / d**5, 24.0 / d**6


def generating_map_example(
    Q: float,
    P: float,
    hbar: float = 0.1,
    *,
    method: str = "analytic",
    identity: bool = False,
) -> dict:
    """hbar^2 coefficients of ``q o p`` and ``q ^ p`` in the ``(Q, P)`` chart.

    ``method`` is ``"analytic"`` (closed-form derivatives, coefficient read off
    directly), ``"two-point"`` (evaluate :func:`star_truncated` at ``hbar`` and
    ``0`` and divide the difference by ``hbar^2``) or ``"fd"`` (finite
    differences for all derivatives, two-point extraction).
    """
    if 1.0 + 2.0 * P == 0.0:
        raise ZeroDivisionError("singular point: 1 + 2P = 0")
    x = np.array([Q, P], dtype=float)
    q, p = generating_map_symbols(identity)
    if method == "fd":
        q, p = q.without_analytic(), p.without_analytic()
    if method == "analytic":
        dot, bracket, c2, w2 = _hbar2_parts(q, p, x)
    elif method in ("two-point", "fd"):
        if not hbar > 0:
            raise ValueError("two-point extraction needs hbar > 0")
        c0, w0 = star_truncated(q, p, x, 0.0)
        c1, w1 = star_truncated(q, p, x, hbar)
        dot, bracket = c0, w0
        c2, w2 = (c1 - c0) / hbar**2, (w1 - w0) / hbar**2
    else:
        raise ValueError(f"unknown method {method!r}")
    pc, pw = (0.0, 0.0) if identity else closed_form_coefficients(Q, P)

    def rel(a, b):
        return abs(a - b) / abs(b) if b else abs(a - b)

    return {
        "point": [float(Q), float(P)],
        "hbar": float(hbar),
        "method": method,
        "dot": dot,
        "bracket": bracket,
        "computed_circ_h2": c2,
        "closed_form_circ_h2": pc,
        "computed_wedge_h2": w2,
        "closed_form_wedge_h2": pw,
        "abs_rel_errors": [rel(c2, pc), rel(w2, pw)],
    }
