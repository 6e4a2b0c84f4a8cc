"""Exact phase-space symbols.

A :class:`PolySymbol` is a sparse polynomial in the ``2n`` canonical variables
``xi = (q_1, ..., q_n, p_1, ..., p_n)`` whose coefficients are Gaussian
rationals graded by powers of hbar.  Variable indices are zero based:
``0 .. n-1`` are coordinates and ``n .. 2n-1`` the conjugate momenta.

Sign convention: ``{xi^k, xi^l} = -I^{kl}`` with ``I = [[0, -E], [E, 0]]``,
which gives ``{q, p} = +1``.  The Poisson operator is
``f P g = -I^{kl} d_k f d_l g = {f, g}`` and the Groenewold product is
``f * g = f exp(i hbar P / 2) g``.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from gmpy2 import mpq

__all__ = [
    "PolySymbol",
    "SymplecticStructure",
    "DimensionError",
    "multiply",
    "partial_derivative",
    "poisson_bracket",
    "star_product",
    "moyal_and_circ",
    "circ_product",
    "moyal_bracket",
    "evaluate",
    "evaluate_exact",
    "symmetrized_circ_power",
    "grade_extract",
    "is_linear",
    "to_rational",
]

ZERO = mpq(0)
ONE = mpq(1)
HALF = mpq(1, 2)

# i**k as (re, im)
_I_POW = ((1, 0), (0, 1), (-1, 0), (0, -1))


class DimensionError(ValueError):
    """Operands live on phase spaces of different dimension."""


def to_rational(value) -> mpq:
    """Convert ints, Fractions, decimal strings or ``"p/q"`` strings to ``mpq``.

    Floats are converted through their shortest repr so that ``0.1`` maps to
    ``1/10`` rather than the binary expansion.
    """
    if isinstance(value, type(ONE)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        fr = Fraction(repr(value))
        return mpq(fr.numerator, fr.denominator)
    if isinstance(value, str):
        fr = Fraction(value.strip())
        return mpq(fr.numerator, fr.denominator)
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def _rat_str(x: mpq) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class SymplecticStructure:
    """Canonical symplectic data for ``n`` degrees of freedom."""

    def __init__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"degrees of freedom must be a positive integer, got {n!r}")
        self.n = int(n)

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def I(self) -> np.ndarray:  # noqa: E743
        n = self.n
        out = np.zeros((2 * n, 2 * n), dtype=np.int64)
        out[:n, n:] = -np.eye(n, dtype=np.int64)
        out[n:, :n] = np.eye(n, dtype=np.int64)
        return out

    def entry(self, k: int, l: int) -> int:
        n = self.n
        if l == k + n and k < n:
            return -1
        if k == l + n and l < n:
            return 1
        return 0

    def conjugate(self, k: int) -> int:
        """Index of the variable canonically paired with ``k``."""
        return k + self.n if k < self.n else k - self.n

    def variables(self) -> list[PolySymbol]:
        return [PolySymbol.variable(k, self.dim) for k in range(self.dim)]

    def variable_names(self) -> list[str]:
        return _variable_names(self.dim)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymplecticStructure) and other.n == self.n

    def __hash__(self) -> int:
        return hash(("SymplecticStructure", self.n))

    def __repr__(self) -> str:
        return f"SymplecticStructure(n={self.n})"


def _variable_names(dim: int) -> list[str]:
    n = dim // 2
    if n == 1:
        return ["q", "p"]
    return [f"q{a + 1}" for a in range(n)] + [f"p{a + 1}" for a in range(n)]


class PolySymbol:
    """Immutable sparse polynomial with hbar-graded Gaussian rational coefficients.

    ``terms`` maps an exponent tuple of length ``dim`` to a mapping
    ``hbar_power -> (re, im)``.  Zero coefficients are never stored, so
    structural equality is mathematical equality.
    """

    __slots__ = ("dim", "_terms", "_hash")

    def __init__(self, dim: int, terms: Mapping | None = None, *, _trusted: bool = False):
        if dim < 2 or dim % 2:
            raise ValueError(f"phase-space dimension must be a positive even integer, got {dim}")
        self.dim = dim
        self._hash = None
        if _trusted:
            self._terms = terms if terms is not None else {}
            return
        clean: dict[tuple[int, ...], dict[int, tuple]] = {}
        for exps, grades in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps} for dim {dim}")
            for hp, c in grades.items():
                hp = int(hp)
                if hp < 0:
                    raise ValueError("hbar powers must be non-negative")
                re, im = _as_gauss(c)
                slot = clean.setdefault(exps, {})
                r0, i0 = slot.get(hp, (ZERO, ZERO))
                re, im = r0 + re, i0 + im
                if re or im:
                    slot[hp] = (re, im)
                else:
                    slot.pop(hp, None)
            if exps in clean and not clean[exps]:
                del clean[exps]
        self._terms = clean

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> PolySymbol:
        return cls(dim, {}, _trusted=True)

    @classmethod
    def constant(cls, value, dim: int, hbar_power: int = 0) -> PolySymbol:
        return cls(dim, {(0,) * dim: {hbar_power: value}})

    @classmethod
    def one(cls, dim: int) -> PolySymbol:
        return cls.constant(1, dim)

    @classmethod
    def hbar(cls, dim: int) -> PolySymbol:
        return cls.constant(1, dim, hbar_power=1)

    @classmethod
    def variable(cls, k: int, dim: int) -> PolySymbol:
        if not 0 <= k < dim:
            raise IndexError(f"variable index {k} out of range for dim {dim}")
        exps = [0] * dim
        exps[k] = 1
        return cls(dim, {tuple(exps): {0: 1}})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1, hbar_power: int = 0) -> PolySymbol:
        return cls(len(exps), {tuple(exps): {hbar_power: coeff}})

    # -- views ----------------------------------------------------------
    @property
    def terms(self) -> Mapping[tuple[int, ...], Mapping[int, tuple]]:
        return self._terms

    @property
    def n(self) -> int:
        return self.dim // 2

    def items(self) -> Iterator[tuple[tuple[int, ...], int, tuple]]:
        """Yield ``(exponents, hbar_power, (re, im))`` in canonical order."""
        for exps in sorted(self._terms):
            grades = self._terms[exps]
            for hp in sorted(grades):
                yield exps, hp, grades[hp]

    def __iter__(self):
        return self.items()

    def __len__(self) -> int:
        return sum(len(g) for g in self._terms.values())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def degree(self) -> int:
        """Total degree in the phase-space variables (-1 for the zero symbol)."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def hbar_degree(self) -> int:
        if not self._terms:
            return -1
        return max(max(g) for g in self._terms.values())

    def hbar_powers(self) -> list[int]:
        return sorted({hp for g in self._terms.values() for hp in g})

    def depends_on(self, k: int) -> bool:
        return any(e[k] for e in self._terms)

    def is_hermitian_symbol(self) -> bool:
        """True when the symbol equals its complex conjugate (hbar taken real)."""
        return all(not c[1] for g in self._terms.values() for c in g.values())

    def conjugate(self) -> PolySymbol:
        return PolySymbol(
            self.dim,
            {e: {hp: (c[0], -c[1]) for hp, c in g.items()} for e, g in self._terms.items()},
            _trusted=True,
        )

    def real_part(self) -> PolySymbol:
        return self._filter_coeffs(lambda c: (c[0], ZERO))

    def imag_part(self) -> PolySymbol:
        return self._filter_coeffs(lambda c: (c[1], ZERO))

    def _filter_coeffs(self, fn) -> PolySymbol:
        out = {}
        for e, g in self._terms.items():
            ng = {}
            for hp, c in g.items():
                nc = fn(c)
                if nc[0] or nc[1]:
                    ng[hp] = nc
            if ng:
                out[e] = ng
        return PolySymbol(self.dim, out, _trusted=True)

    def coefficient(self, exps: Sequence[int], hbar_power: int = 0) -> tuple:
        return self._terms.get(tuple(exps), {}).get(hbar_power, (ZERO, ZERO))

    def constant_term(self) -> PolySymbol:
        zero_e = (0,) * self.dim
        if zero_e in self._terms:
            return PolySymbol(self.dim, {zero_e: dict(self._terms[zero_e])}, _trusted=True)
        return PolySymbol.zero(self.dim)

    def truncate_hbar(self, hbar_max: int | None) -> PolySymbol:
        if hbar_max is None:
            return self
        out = {}
        for e, g in self._terms.items():
            ng = {hp: c for hp, c in g.items() if hp <= hbar_max}
            if ng:
                out[e] = ng
        return PolySymbol(self.dim, out, _trusted=True)

    # -- equality / hashing ---------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, PolySymbol):
            return self.dim == other.dim and self._terms == other._terms
        if isinstance(other, (int, Fraction)) or isinstance(other, type(ONE)):
            return self == PolySymbol.constant(other, self.dim)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.dim, tuple(self.items())))
        return self._hash

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> PolySymbol:
        if isinstance(other, PolySymbol):
            if other.dim != self.dim:
                raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        if isinstance(other, complex):
            raise TypeError("use exact (re, im) pairs instead of Python complex")
        return PolySymbol.constant(other, self.dim)

    def __add__(self, other) -> PolySymbol:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return _combine(self, other, 1)

    __radd__ = __add__

    def __sub__(self, other) -> PolySymbol:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return _combine(self, other, -1)

    def __rsub__(self, other) -> PolySymbol:
        return self._coerce(other) - self

    def __neg__(self) -> PolySymbol:
        return self.scale(-1)

    def __mul__(self, other) -> PolySymbol:
        if isinstance(other, PolySymbol):
            return multiply(self, other)
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other) -> PolySymbol:
        r = to_rational(other)
        if not r:
            raise ZeroDivisionError("division of a symbol by zero")
        return self.scale(1 / r)

    def __pow__(self, k: int) -> PolySymbol:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = PolySymbol.one(self.dim)
        base = self
        while k:
            if k & 1:
                out = multiply(out, base)
            k >>= 1
            if k:
                base = multiply(base, base)
        return out

    def scale(self, factor, hbar_shift: int = 0) -> PolySymbol:
        """Multiply by a Gaussian rational (``(re, im)`` pair or real) times hbar**shift."""
        fr, fi = _as_gauss(factor)
        if not fr and not fi:
            return PolySymbol.zero(self.dim)
        out = {}
        for e, g in self._terms.items():
            ng = {}
            for hp, (a, b) in g.items():
                re = a * fr - b * fi
                im = a * fi + b * fr
                if re or im:
                    ng[hp + hbar_shift] = (re, im)
            if ng:
                out[e] = ng
        return PolySymbol(self.dim, out, _trusted=True)

    def times_i(self) -> PolySymbol:
        return self.scale((ZERO, ONE))

    # -- printing -----------------------------------------------------
    def __repr__(self) -> str:
        return f"PolySymbol({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        names = _variable_names(self.dim)
        parts = []
        for exps, hp, (re, im) in self.items():
            if re and im:
                c = f"({_rat_str(re)} + {_rat_str(im)}i)"
            elif im:
                c = f"{_rat_str(im)}i"
            else:
                c = _rat_str(re)
            factors = []
            if hp:
                factors.append("hbar" if hp == 1 else f"hbar^{hp}")
            for name, e in zip(names, exps):
                if e:
                    factors.append(name if e == 1 else f"{name}^{e}")
            if not factors:
                parts.append(c)
            elif c == "1":
                parts.append("*".join(factors))
            elif c == "-1":
                parts.append("-" + "*".join(factors))
            else:
                parts.append(c + "*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    # -- literal format -----------------------------------------------------
    def to_literal(self) -> list[dict]:
        """Canonical term list; round-trips exactly through :meth:`from_literal`."""
        return [
            {
                "coeff_re": _rat_str(re),
                "coeff_im": _rat_str(im),
                "hbar_power": hp,
                "exponents": list(exps),
            }
            for exps, hp, (re, im) in self.items()
        ]

    @classmethod
    def from_literal(cls, literal, dim: int | None = None) -> PolySymbol:
        """Parse a term list ``[{coeff_re, coeff_im, hbar_power, exponents}, ...]``.

        A mapping ``{"dim": d, "terms": [...]}`` is accepted as well, which is
        the only way to spell a zero symbol without an explicit ``dim``.
        """
        if isinstance(literal, Mapping):
            dim = literal.get("dim", dim)
            literal = literal.get("terms", [])
        if not isinstance(literal, list):
            raise ValueError("polynomial literal must be a list of term objects")
        terms: dict = {}
        for i, term in enumerate(literal):
            if not isinstance(term, Mapping):
                raise ValueError(f"term {i} is not an object")
            unknown = set(term) - {"coeff_re", "coeff_im", "hbar_power", "exponents"}
            if unknown:
                raise ValueError(f"term {i} has unknown keys {sorted(unknown)}")
            if "exponents" not in term:
                raise ValueError(f"term {i} lacks 'exponents'")
            exps = tuple(term["exponents"])
            if any(not isinstance(e, int) or isinstance(e, bool) for e in exps):
                raise ValueError(f"term {i} exponents must be integers")
            if dim is None:
                dim = len(exps)
            if len(exps) != dim:
                raise ValueError(f"term {i} has {len(exps)} exponents, expected {dim}")
            hp = term.get("hbar_power", 0)
            if not isinstance(hp, int) or isinstance(hp, bool) or hp < 0:
                raise ValueError(f"term {i} hbar_power must be a non-negative integer")
            re = to_rational(term.get("coeff_re", 0))
            im = to_rational(term.get("coeff_im", 0))
            slot = terms.setdefault(exps, {})
            r0, i0 = slot.get(hp, (ZERO, ZERO))
            slot[hp] = (r0 + re, i0 + im)
        if dim is None:
            raise ValueError("cannot infer dimension of an empty literal; pass dim")
        return cls(dim, terms)

    # -- numeric export -------------------------------------------------------
    def to_arrays(self, hbar: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Exponent matrix and complex coefficients with ``hbar`` substituted."""
        exps = sorted(self._terms)
        E = np.array(exps, dtype=np.int64).reshape(len(exps), self.dim)
        C = np.zeros(len(exps), dtype=np.complex128)
        for j, e in enumerate(exps):
            for hp, (re, im) in self._terms[e].items():
                C[j] += complex(float(re), float(im)) * hbar**hp
        return E, C


def _as_gauss(c) -> tuple:
    if isinstance(c, tuple):
        if len(c) != 2:
            raise ValueError("Gaussian rational must be a (re, im) pair")
        return to_rational(c[0]), to_rational(c[1])
    if isinstance(c, complex):
        raise TypeError("use exact (re, im) pairs instead of Python complex")
    return to_rational(c), ZERO


def _combine(f: PolySymbol, g: PolySymbol, sign: int) -> PolySymbol:
    out = {e: dict(gr) for e, gr in f._terms.items()}
    for e, gr in g._terms.items():
        slot = out.setdefault(e, {})
        for hp, (a, b) in gr.items():
            r0, i0 = slot.get(hp, (ZERO, ZERO))
            re = r0 + a if sign > 0 else r0 - a
            im = i0 + b if sign > 0 else i0 - b
            if re or im:
                slot[hp] = (re, im)
            else:
                slot.pop(hp, None)
        if not slot:
            del out[e]
    return PolySymbol(f.dim, out, _trusted=True)


def _check_dims(*fs: PolySymbol) -> int:
    dim = fs[0].dim
    for f in fs[1:]:
        if f.dim != dim:
            raise DimensionError(f"dimension mismatch: {dim} vs {f.dim}")
    return dim


def _accumulate(out: dict, exps, hp: int, re, im) -> None:
    slot = out.get(exps)
    if slot is None:
        out[exps] = {hp: (re, im)}
        return
    c = slot.get(hp)
    if c is None:
        slot[hp] = (re, im)
    else:
        slot[hp] = (c[0] + re, c[1] + im)


def _finalize(dim: int, out: dict) -> PolySymbol:
    clean = {}
    for e, g in out.items():
        ng = {hp: c for hp, c in g.items() if c[0] or c[1]}
        if ng:
            clean[e] = ng
    return PolySymbol(dim, clean, _trusted=True)


def multiply(f: PolySymbol, g: PolySymbol) -> PolySymbol:
    """Ordinary (dot) product of two symbols."""
    dim = _check_dims(f, g)
    out: dict = {}
    for ea, ga in f._terms.items():
        for eb, gb in g._terms.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            for ha, (ar, ai) in ga.items():
                for hb, (br, bi) in gb.items():
                    _accumulate(out, e, ha + hb, ar * br - ai * bi, ar * bi + ai * br)
    return _finalize(dim, out)


def partial_derivative(f: PolySymbol, k: int) -> PolySymbol:
    """Exact ``d f / d xi^k`` (``k`` zero based)."""
    if not 0 <= k < f.dim:
        raise IndexError(f"variable index {k} out of range for dim {f.dim}")
    out = {}
    for e, g in f._terms.items():
        p = e[k]
        if not p:
            continue
        ne = e[:k] + (p - 1,) + e[k + 1 :]
        out[ne] = {hp: (re * p, im * p) for hp, (re, im) in g.items()}
    return PolySymbol(f.dim, out, _trusted=True)


def poisson_bracket(f: PolySymbol, g: PolySymbol) -> PolySymbol:
    """``{f, g} = -I^{kl} d_k f d_l g``, i.e. sum over pairs of df/dq dg/dp - df/dp dg/dq."""
    dim = _check_dims(f, g)
    n = dim // 2
    out = PolySymbol.zero(dim)
    for a in range(n):
        out = out + multiply(partial_derivative(f, a), partial_derivative(g, a + n))
        out = out - multiply(partial_derivative(f, a + n), partial_derivative(g, a))
    return out


def _falling(x: int, k: int) -> int:
    r = 1
    for j in range(k):
        r *= x - j
    return r


@lru_cache(maxsize=None)
def _bidiff_1d(aq: int, ap: int, bq: int, bp: int) -> tuple:
    """Terms of ``x^a exp(P') x^b`` for one degree of freedom, without the (i hbar/2)^k factor.

    Returns ``(k, coefficient, dq, dp)`` where the result monomial is
    ``q^(aq+bq-k) p^(ap+bp-k)``, ``k = r + s`` and ``dq = dp = k``.
    """
    out = []
    for r in range(min(aq, bp) + 1):
        for s in range(min(ap, bq) + 1):
            c = mpq(
                _falling(aq, r) * _falling(bp, r) * _falling(ap, s) * _falling(bq, s),
                math.factorial(r) * math.factorial(s),
            )
            if s % 2:
                c = -c
            out.append((r + s, c))
    return tuple(out)


@lru_cache(maxsize=200_000)
def _bidiff(ea: tuple, eb: tuple) -> tuple:
    """All terms ``(k, coeff, exps)`` of the monomial pair expansion of exp(P)."""
    n = len(ea) // 2
    per_dof = []
    for a in range(n):
        per_dof.append(_bidiff_1d(ea[a], ea[a + n], eb[a], eb[a + n]))
    base = tuple(x + y for x, y in zip(ea, eb))
    acc: dict = {}
    for combo in itertools.product(*per_dof):
        k_tot = 0
        coef = ONE
        shifts = []
        for k, c in combo:
            k_tot += k
            coef = coef * c
            shifts.append(k)
        exps = tuple(base[i] - shifts[i % n] for i in range(2 * n))
        key = (k_tot, exps)
        acc[key] = acc.get(key, ZERO) + coef
    return tuple((k, c, e) for (k, e), c in acc.items() if c)


def _expand(f: PolySymbol, g: PolySymbol, parity: int | None, shift: int, hbar_max: int | None):
    """Shared kernel for star, circ and wedge.

    Each term of ``f exp(i hbar P/2) g`` with ``k`` Poisson operators carries
    ``(i/2)^k hbar^k``.  ``parity`` keeps only even (0) or odd (1) ``k``;
    ``shift`` divides by ``(i hbar / 2)^shift`` (used for the wedge).
    """
    dim = _check_dims(f, g)
    out: dict = {}
    for ea, ga in f._terms.items():
        for eb, gb in g._terms.items():
            table = _bidiff(ea, eb)
            if not table:
                continue
            for ha, (ar, ai) in ga.items():
                for hb, (br, bi) in gb.items():
                    pr = ar * br - ai * bi
                    pi = ar * bi + ai * br
                    h0 = ha + hb
                    for k, c, e in table:
                        if parity is not None and k % 2 != parity:
                            continue
                        kk = k - shift
                        hp = h0 + kk
                        if hbar_max is not None and hp > hbar_max:
                            continue
                        sr, si = _I_POW[kk % 4]
                        scale = c / (1 << kk) if kk else c
                        # (pr + i pi) * (sr + i si) * scale
                        re = (pr * sr - pi * si) * scale
                        im = (pr * si + pi * sr) * scale
                        _accumulate(out, e, hp, re, im)
    return _finalize(dim, out)


def star_product(f: PolySymbol, g: PolySymbol, hbar_max: int | None = None) -> PolySymbol:
    """Groenewold product; the series terminates for polynomial symbols."""
    return _expand(f, g, None, 0, hbar_max)


def circ_product(f: PolySymbol, g: PolySymbol, hbar_max: int | None = None) -> PolySymbol:
    """Symmetric part ``(f*g + g*f)/2``."""
    return _expand(f, g, 0, 0, hbar_max)


def moyal_bracket(f: PolySymbol, g: PolySymbol, hbar_max: int | None = None) -> PolySymbol:
    """Skew part ``(f*g - g*f)/(i hbar)``."""
    return _expand(f, g, 1, 1, hbar_max)


def moyal_and_circ(f: PolySymbol, g: PolySymbol) -> tuple[PolySymbol, PolySymbol]:
    """Split ``f * g = f o g + (i hbar/2) f ^ g``; returns ``(circ, wedge)``."""
    return circ_product(f, g), moyal_bracket(f, g)


def evaluate_exact(f: PolySymbol, point: Sequence, hbar=0) -> tuple:
    """Exact value ``(re, im)`` at a rational point."""
    if len(point) != f.dim:
        raise DimensionError(f"point has {len(point)} components, symbol dim is {f.dim}")
    x = [to_rational(v) for v in point]
    h = to_rational(hbar)
    re = ZERO
    im = ZERO
    for e, g in f._terms.items():
        m = ONE
        for xi, p in zip(x, e):
            if p:
                m *= xi**p
        for hp, (a, b) in g.items():
            w = m * h**hp if hp else m
            re += a * w
            im += b * w
    return re, im


def evaluate(f: PolySymbol, point, hbar: float = 0.0) -> complex:
    """Numeric value at a real point with hbar substituted."""
    x = np.asarray(point, dtype=float)
    if x.shape != (f.dim,):
        raise DimensionError(f"point has shape {x.shape}, symbol dim is {f.dim}")
    if not np.all(np.isfinite(x)) or not math.isfinite(hbar):
        raise ValueError("evaluation point and hbar must be finite")
    if f.is_zero():
        return 0j
    E, C = f.to_arrays(hbar)
    return complex(np.sum(C * np.prod(x[None, :] ** E, axis=1)))


def evaluate_many(f: PolySymbol, points, hbar: float = 0.0) -> np.ndarray:
    """Vectorised :func:`evaluate` over an ``(N, dim)`` array."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] != f.dim:
        raise DimensionError(f"points must have shape (N, {f.dim})")
    if f.is_zero():
        return np.zeros(X.shape[0], dtype=complex)
    E, C = f.to_arrays(hbar)
    return np.prod(X[:, None, :] ** E[None, :, :], axis=2) @ C


def symmetrized_circ_power(factors: Sequence[PolySymbol]) -> PolySymbol:
    """Average of left-nested circ products over every ordering of ``factors``.

    This is the brute-force definition (``len(factors)!`` orderings); use
    :func:`qchar.dynamics.star_compose` for anything beyond a handful of factors.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("symmetrized circ power of an empty list is undefined")
    _check_dims(*factors)
    total = PolySymbol.zero(factors[0].dim)
    count = 0
    for perm in itertools.permutations(range(len(factors))):
        acc = factors[perm[0]]
        for j in perm[1:]:
            acc = circ_product(acc, factors[j])
        total = total + acc
        count += 1
    return total / count


def grade_extract(f: PolySymbol, hbar_power: int) -> PolySymbol:
    """Coefficient symbol of ``hbar**hbar_power`` (no hbar left in the result)."""
    if hbar_power < 0:
        raise ValueError("hbar power must be non-negative")
    out = {}
    for e, g in f._terms.items():
        c = g.get(hbar_power)
        if c is not None:
            out[e] = {0: c}
    return PolySymbol(f.dim, out, _trusted=True)


def is_linear(f: PolySymbol) -> bool:
    """True when every monomial has total degree at most one."""
    return all(sum(e) <= 1 for e in f._terms)


def polys_from_iterable(items: Iterable, dim: int) -> list[PolySymbol]:
    return [p if isinstance(p, PolySymbol) else PolySymbol.from_literal(p, dim) for p in items]
