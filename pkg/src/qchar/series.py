"""Truncated power series in one or more evolution parameters.

Coefficients are :class:`~qchar.poly.PolySymbol` values and already include
the ``1/s!`` factor.  Several parameters (``tau_1, tau_2`` for composition
checks, ``sigma, tau`` for conjugated flows) share one total-degree
truncation ``order``.
"""
from __future__ import annotations

import math
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .poly import (
    DimensionError,
    PolySymbol,
    circ_product,
    evaluate,
    grade_extract,
    moyal_bracket,
    multiply,
    poisson_bracket,
    star_product,
)

__all__ = ["TauSeries", "TruncationError"]


class TruncationError(ValueError):
    """Series with incompatible truncation orders or parameter counts were mixed."""


class TauSeries:
    """Immutable truncated series ``sum_idx tau^idx * coeff[idx]``.

    Keys are tuples of length ``nparams``; entries with total degree above
    ``order`` or with a zero coefficient are dropped on construction.
    """

    __slots__ = ("dim", "order", "nparams", "_terms")

    def __init__(
        self,
        dim: int,
        order: int,
        terms: Mapping[tuple[int, ...], PolySymbol] | None = None,
        nparams: int = 1,
    ):
        if order < 0:
            raise ValueError("truncation order must be non-negative")
        self.dim = dim
        self.order = order
        self.nparams = nparams
        clean = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if len(idx) != nparams:
                raise TruncationError(f"index {idx} does not have {nparams} parameters")
            if sum(idx) > order or c.is_zero():
                continue
            if c.dim != dim:
                raise DimensionError(f"coefficient dim {c.dim} != series dim {dim}")
            clean[idx] = c
        self._terms = clean

    # -- constructors ---------------------------------------------------
    @classmethod
    def constant(cls, f: PolySymbol, order: int, nparams: int = 1) -> TauSeries:
        return cls(f.dim, order, {(0,) * nparams: f}, nparams)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[PolySymbol], order: int | None = None) -> TauSeries:
        if not coeffs:
            raise ValueError("need at least one coefficient")
        order = len(coeffs) - 1 if order is None else order
        return cls(coeffs[0].dim, order, {(s,): c for s, c in enumerate(coeffs)}, 1)

    # -- access -------------------------------------------------------------
    @property
    def terms(self) -> Mapping[tuple[int, ...], PolySymbol]:
        return self._terms

    def coefficient(self, *idx: int) -> PolySymbol:
        if len(idx) != self.nparams:
            raise TruncationError(f"expected {self.nparams} indices, got {len(idx)}")
        return self._terms.get(tuple(idx), PolySymbol.zero(self.dim))

    def __getitem__(self, idx) -> PolySymbol:
        if isinstance(idx, int):
            idx = (idx,)
        return self.coefficient(*idx)

    @property
    def coeffs(self) -> list[PolySymbol]:
        """Coefficient list of length ``order + 1`` (single-parameter series only)."""
        if self.nparams != 1:
            raise TruncationError("coeffs is only defined for single-parameter series")
        return [self.coefficient(s) for s in range(self.order + 1)]

    def items(self) -> Iterator[tuple[tuple[int, ...], PolySymbol]]:
        for idx in sorted(self._terms):
            yield idx, self._terms[idx]

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, TauSeries):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.nparams == other.nparams
            and self.order == other.order
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.dim, self.order, self.nparams, tuple(self.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"{idx}: {c}" for idx, c in self.items())
        return f"TauSeries(order={self.order}, nparams={self.nparams}, {{{body}}})"

    # -- linear structure ---------------------------------------------------
    def _check(self, other: TauSeries) -> int:
        if not isinstance(other, TauSeries):
            raise TypeError(f"expected TauSeries, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if other.nparams != self.nparams:
            raise TruncationError(f"parameter count mismatch: {self.nparams} vs {other.nparams}")
        return min(self.order, other.order)

    def __add__(self, other) -> TauSeries:
        if isinstance(other, PolySymbol):
            other = TauSeries.constant(other, self.order, self.nparams)
        order = self._check(other)
        out = dict(self._terms)
        for idx, c in other._terms.items():
            out[idx] = out[idx] + c if idx in out else c
        return TauSeries(self.dim, order, out, self.nparams)

    __radd__ = __add__

    def __neg__(self) -> TauSeries:
        return self.map(lambda c: -c)

    def __sub__(self, other) -> TauSeries:
        if isinstance(other, PolySymbol):
            other = TauSeries.constant(other, self.order, self.nparams)
        return self + (-other)

    def __rsub__(self, other) -> TauSeries:
        return (-self) + other

    def scale(self, factor) -> TauSeries:
        return self.map(lambda c: c.scale(factor))

    def map(self, fn: Callable[[PolySymbol], PolySymbol]) -> TauSeries:
        """Apply a linear map to every coefficient."""
        out = {}
        dim = self.dim
        for idx, c in self._terms.items():
            r = fn(c)
            out[idx] = r
            dim = r.dim
        return TauSeries(dim, self.order, out, self.nparams)

    def truncate(self, order: int) -> TauSeries:
        return TauSeries(self.dim, min(order, self.order), self._terms, self.nparams)

    def cap(self, param: int, max_degree: int) -> TauSeries:
        """Drop terms whose degree in one parameter exceeds ``max_degree``."""
        return TauSeries(
            self.dim,
            self.order,
            {i: c for i, c in self._terms.items() if i[param] <= max_degree},
            self.nparams,
        )

    def truncate_hbar(self, hbar_max: int | None) -> TauSeries:
        if hbar_max is None:
            return self
        return self.map(lambda c: c.truncate_hbar(hbar_max))

    def reverse(self, param: int = 0) -> TauSeries:
        """Substitute ``tau_param -> -tau_param``."""
        return TauSeries(
            self.dim,
            self.order,
            {i: (-c if i[param] % 2 else c) for i, c in self._terms.items()},
            self.nparams,
        )

    def embed(self, nparams: int, mapping: Sequence[int] | None = None) -> TauSeries:
        """Re-index into ``nparams`` parameters; parameter ``j`` goes to ``mapping[j]``.

        Parameters mapped to the same target are merged (their degrees add).
        """
        mapping = tuple(range(self.nparams)) if mapping is None else tuple(mapping)
        if len(mapping) != self.nparams:
            raise TruncationError("mapping length must equal the parameter count")
        out: dict = {}
        for idx, c in self._terms.items():
            new = [0] * nparams
            for j, e in zip(mapping, idx):
                new[j] += e
            key = tuple(new)
            out[key] = out[key] + c if key in out else c
        return TauSeries(self.dim, self.order, out, nparams)

    def split_sum(self) -> TauSeries:
        """``s(tau) -> s(tau_1 + tau_2)`` for a single-parameter series."""
        if self.nparams != 1:
            raise TruncationError("split_sum needs a single-parameter series")
        out = {}
        for (s,), c in self._terms.items():
            for a in range(s + 1):
                out[(a, s - a)] = c.scale(math.comb(s, a))
        return TauSeries(self.dim, self.order, out, 2)

    # -- products -------------------------------------------------------------
    def bilinear(
        self,
        other: TauSeries,
        op: Callable[[PolySymbol, PolySymbol], PolySymbol],
        order: int | None = None,
    ) -> TauSeries:
        """Cauchy product under a bilinear coefficient operation, truncated."""
        k = self._check(other)
        if order is not None:
            k = min(k, order)
        out: dict = {}
        for ia, a in self._terms.items():
            da = sum(ia)
            if da > k:
                continue
            for ib, b in other._terms.items():
                if da + sum(ib) > k:
                    continue
                r = op(a, b)
                if r.is_zero():
                    continue
                idx = tuple(x + y for x, y in zip(ia, ib))
                out[idx] = out[idx] + r if idx in out else r
        return TauSeries(self.dim, k, out, self.nparams)

    def star(self, other: TauSeries, hbar_max: int | None = None, order: int | None = None):
        return self.bilinear(other, lambda a, b: star_product(a, b, hbar_max), order)

    def circ(self, other: TauSeries, hbar_max: int | None = None, order: int | None = None):
        return self.bilinear(other, lambda a, b: circ_product(a, b, hbar_max), order)

    def wedge(self, other: TauSeries, hbar_max: int | None = None, order: int | None = None):
        return self.bilinear(other, lambda a, b: moyal_bracket(a, b, hbar_max), order)

    def dot(self, other: TauSeries, order: int | None = None):
        return self.bilinear(other, multiply, order)

    def poisson(self, other: TauSeries, order: int | None = None):
        return self.bilinear(other, poisson_bracket, order)

    # -- numeric -----------------------------------------------------------------
    def evaluate(self, point, hbar: float = 0.0, tau=0.0) -> complex:
        taus = np.atleast_1d(np.asarray(tau, dtype=float))
        if taus.shape != (self.nparams,):
            raise TruncationError(f"need {self.nparams} parameter values")
        total = 0j
        for idx, c in self.items():
            w = 1.0
            for t, e in zip(taus, idx):
                w *= t**e
            total += w * evaluate(c, point, hbar)
        return total

    # -- inspection ----------------------------------------------------------
    def first_nonzero(self):
        """``(idx, exponents, hbar_power, (re, im))`` of the first nonzero term, or None."""
        for idx, c in self.items():
            for exps, hp, coef in c.items():
                return idx, exps, hp, coef
        return None

    def grade(self, hbar_power: int) -> TauSeries:
        return self.map(lambda c: grade_extract(c, hbar_power))
