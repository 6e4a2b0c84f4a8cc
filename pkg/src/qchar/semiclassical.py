"""Semiclassical propagation of quantum trajectories through order hbar^2.

The flow is expanded as ``u = u0 + hbar^2 u1 + O(hbar^4)``.  ``u0`` follows
Hamilton's equations, ``J1 = du0/dxi`` and ``J2 = d^2 u0/dxi dxi`` obey the
variational equations, and ``u1`` is driven by ``J1, J2`` through the
third and fourth derivatives of ``H``:

    du1^i/dt = F^i_{,k} u1^k - (1/16) F^i_{,ab} A^{ab} - (1/24) F^i_{,abc} B^{abc}

with ``F^i = -I^{ik} dH/dxi^k`` and ``A, B`` from :func:`kernels.gamma2_terms`.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import DOP853

from . import kernels
from .poly import PolySymbol, evaluate, partial_derivative
from .records import write_csv

__all__ = [
    "HamiltonianOracle",
    "PolynomialOracle",
    "CallableOracle",
    "TrajectoryState",
    "TrajectoryPath",
    "PropagationError",
    "rhs",
    "propagate",
    "evolve_observable",
    "hamiltonian_derivatives",
    "batch_propagate",
    "BatchResult",
    "paths_to_rows",
    "write_paths_csv",
]

log = logging.getLogger(__name__)


class PropagationError(RuntimeError):
    """Integration failed; ``time`` is where it happened."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time!r}")
        self.time = time


class HamiltonianOracle:
    """Numeric access to a function of phase space and its partial derivatives.

    Subclasses implement :meth:`derivative`; :meth:`tensors` returns the
    full symmetric derivative tensors used by the propagator.
    """

    dim: int
    max_order: int

    def value(self, x) -> float:
        return self.derivative(x, ())

    def derivative(self, x, multi_index: Sequence[int]) -> float:
        raise NotImplementedError

    def tensors(self, x, order: int) -> list[np.ndarray]:
        """``[f, df, d2f, ...]`` through ``order`` at ``x``."""
        d = self.dim
        out = [np.asarray(self.value(x), dtype=float)]
        for r in range(1, order + 1):
            T = np.zeros((d,) * r)
            for mi in combinations_with_replacement(range(d), r):
                v = self.derivative(x, mi)
                for perm in set(_perms(mi)):
                    T[perm] = v
            out.append(T)
        return out

    def _check(self, multi_index) -> tuple[int, ...]:
        mi = tuple(int(k) for k in multi_index)
        if len(mi) > self.max_order:
            raise ValueError(f"derivative order {len(mi)} exceeds supported order {self.max_order}")
        for k in mi:
            if not 0 <= k < self.dim:
                raise IndexError(f"variable index {k} out of range for dim {self.dim}")
        return mi


def _perms(mi):
    from itertools import permutations

    return permutations(mi)


class PolynomialOracle(HamiltonianOracle):
    """Exact derivatives of a polynomial symbol (any order).

    ``hbar`` is substituted into any explicit hbar-dependence of the symbol
    and only the real part is kept.
    """

    def __init__(self, f: PolySymbol, hbar: float = 0.0, max_order: int = 5):
        self.symbol = f
        self.dim = f.dim
        self.hbar = float(hbar)
        self.max_order = max_order
        self._cache: dict[tuple[int, ...], PolySymbol] = {}
        self._compiled: dict[int, kernels.CompiledDerivatives] = {}

    def _deriv_symbol(self, mi: tuple[int, ...]) -> PolySymbol:
        key = tuple(sorted(mi))
        if key not in self._cache:
            g = self.symbol
            for k in key:
                g = partial_derivative(g, k)
            self._cache[key] = g
        return self._cache[key]

    def derivative(self, x, multi_index: Sequence[int]) -> float:
        mi = self._check(multi_index)
        return evaluate(self._deriv_symbol(mi), x, self.hbar).real

    def compiled(self, order: int = 4) -> kernels.CompiledDerivatives:
        if order not in self._compiled:
            self._compiled[order] = kernels.CompiledDerivatives(self.symbol, order, self.hbar)
        return self._compiled[order]

    def tensors(self, x, order: int) -> list[np.ndarray]:
        if order > self.max_order:
            raise ValueError(f"derivative order {order} exceeds supported order {self.max_order}")
        return self.compiled(max(order, 1)).tensors(np.asarray(x, dtype=float))[: order + 1]


class CallableOracle(HamiltonianOracle):
    """Oracle from a plain function, with optional analytic derivatives.

    ``derivatives`` maps sorted multi-index tuples to callables.  Missing
    entries fall back to nested central differences: each order applies
    ``(g(x + h e_k) - g(x - h e_k)) / (2h)`` with
    ``h = eps**(1/(m+2)) * max(1, |x_k|)`` for a derivative of total order
    ``m``, which balances truncation against rounding for that order.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], float],
        dim: int,
        derivatives: dict[tuple[int, ...], Callable] | None = None,
        max_order: int = 4,
    ):
        self.func = func
        self.dim = dim
        self.max_order = max_order
        self.derivatives = {tuple(sorted(k)): v for k, v in (derivatives or {}).items()}

    def derivative(self, x, multi_index: Sequence[int]) -> float:
        mi = tuple(sorted(self._check(multi_index)))
        x = np.asarray(x, dtype=float)
        if mi in self.derivatives:
            return float(self.derivatives[mi](x))
        if not mi:
            return float(self.func(x))
        return _central(self.func, x, mi, len(mi))


def _central(func, x, mi, m) -> float:
    if not mi:
        return float(func(x))
    k, rest = mi[0], mi[1:]
    h = np.finfo(float).eps ** (1.0 / (m + 2)) * max(1.0, abs(x[k]))
    xp = x.copy()
    xm = x.copy()
    xp[k] += h
    xm[k] -= h
    return (_central(func, xp, rest, m) - _central(func, xm, rest, m)) / (2 * h)


def hamiltonian_derivatives(oracle: HamiltonianOracle, point, multi_index: Sequence[int]) -> float:
    """One partial derivative; ``multi_index`` lists variable indices, e.g. ``(0, 0, 1)``."""
    return oracle.derivative(np.asarray(point, dtype=float), multi_index)


@dataclass
class TrajectoryState:
    """Semiclassical state at one time; ``J2`` is the full symmetric tensor."""

    t: float
    u0: np.ndarray
    u1: np.ndarray
    J1: np.ndarray
    J2: np.ndarray

    @classmethod
    def initial(cls, xi, t: float = 0.0) -> TrajectoryState:
        xi = np.asarray(xi, dtype=float)
        d = len(xi)
        if d % 2:
            raise ValueError("phase-space dimension must be even")
        return cls(t, xi.copy(), np.zeros(d), np.eye(d), np.zeros((d, d, d)))

    @property
    def dim(self) -> int:
        return len(self.u0)

    def pack(self) -> np.ndarray:
        return kernels.pack_state(self.u0, self.u1, self.J1, self.J2)

    @classmethod
    def unpack(cls, y: np.ndarray, dim: int, t: float = 0.0) -> TrajectoryState:
        u0, u1, J1, J2 = kernels.unpack_state(np.asarray(y, dtype=float), dim)
        return cls(t, u0.copy(), u1.copy(), J1.copy(), J2.copy())

    def raised_J2(self) -> np.ndarray:
        """``J^{i,kl} = I^{ka} I^{lb} J^i_{ab}``."""
        n = self.dim // 2
        I = np.zeros((self.dim, self.dim))
        I[:n, n:] = -np.eye(n)
        I[n:, :n] = np.eye(n)
        return np.einsum("ka,lb,iab->ikl", I, I, self.J2)

    def position(self, hbar: float) -> np.ndarray:
        return self.u0 + hbar**2 * self.u1


def _derivative_source(oracle: HamiltonianOracle):
    if isinstance(oracle, PolynomialOracle):
        return oracle.compiled(4), None

    def f(y):
        return _rhs_generic(y, oracle)

    return None, f


def _rhs_generic(y: np.ndarray, oracle: HamiltonianOracle) -> np.ndarray:
    d = oracle.dim
    T = oracle.tensors(y[:d], 4)
    cd = _TensorShim(d, T)
    return kernels.rhs_numpy(y, cd)


class _TensorShim:
    """Duck-types :class:`kernels.CompiledDerivatives` for precomputed tensors."""

    max_order = 4

    def __init__(self, d, T):
        self.dim = d
        self._T = T

    def tensors(self, x):
        return self._T


def rhs(state: TrajectoryState, oracle: HamiltonianOracle) -> TrajectoryState:
    """Time derivative of ``state`` as a state-shaped object (``t`` is unchanged)."""
    if oracle.max_order < 4:
        raise ValueError("the propagator needs Hamiltonian derivatives up to order 4")
    y = state.pack()
    cd, f = _derivative_source(oracle)
    dy = kernels.rhs(y, cd) if cd is not None else f(y)
    return TrajectoryState.unpack(dy, state.dim, state.t)


@dataclass
class TrajectoryPath:
    """Sampled trajectory; arrays are indexed by sample."""

    times: np.ndarray
    u0: np.ndarray
    u1: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    energy0: float
    energy: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> TrajectoryState:
        return TrajectoryState(float(self.times[k]), self.u0[k], self.u1[k], self.J1[k], self.J2[k])

    @property
    def detJ(self) -> np.ndarray:
        return np.linalg.det(self.J1)

    @property
    def energy_residual(self) -> np.ndarray:
        return self.energy - self.energy0


def _sample_times(t_end: float, sample_times) -> np.ndarray:
    if not math.isfinite(t_end):
        raise ValueError("t_end must be finite")
    if sample_times is None:
        ts = np.array([0.0, t_end])
    else:
        ts = np.asarray(sample_times, dtype=float)
        if ts.ndim != 1 or len(ts) == 0 or not np.all(np.isfinite(ts)):
            raise ValueError("sample_times must be a finite 1-d sequence")
        if ts[0] != 0.0:
            ts = np.concatenate([[0.0], ts])
    steps = np.diff(ts)
    if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("sample_times must be strictly monotone starting at 0")
    return ts


def _adaptive_path(base, y0, ts, rtol, atol, min_step) -> np.ndarray:
    """DOP853 between consecutive sample times; node values are not interpolated."""
    out = np.empty((len(ts), len(y0)))
    out[0] = y0
    y = y0
    for j in range(1, len(ts)):
        solver = DOP853(lambda t, v: base(v), ts[j - 1], y, ts[j], rtol=rtol, atol=atol)
        with np.errstate(over="ignore", invalid="ignore"):
            while solver.status == "running":
                msg = solver.step()
                if solver.status == "failed":
                    raise PropagationError(f"adaptive step failed ({msg})", float(solver.t))
                if not np.all(np.isfinite(solver.y)):
                    raise PropagationError("non-finite state", float(solver.t))
                if solver.status == "running" and solver.step_size < min_step:
                    raise PropagationError("step underflow", float(solver.t))
        y = solver.y
        out[j] = y
    return out


def propagate(
    xi0,
    oracle: HamiltonianOracle,
    t_end: float,
    *,
    stepper: str = "rk4",
    dt: float = 1e-3,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    sample_times=None,
    min_step: float = 1e-12,
) -> TrajectoryPath:
    """Integrate the semiclassical system from ``xi0``.

    Parameters
    ----------
    xi0 : array_like
        Initial phase-space point; ``J1 = I``, ``u1 = J2 = 0`` at ``t = 0``.
    oracle : HamiltonianOracle
        Supplies derivatives of ``H`` through order 4.
    t_end : float
        Final time; ignored when ``sample_times`` is given.
    stepper : {"rk4", "adaptive"}
        Fixed-step RK4 (reference) or scipy's DOP853 with ``rtol``/``atol``.
    min_step : float
        Adaptive stepper only: an accepted interior step below this is
        reported as step underflow.
    sample_times : array_like, optional
        Monotone output times; ``0`` is prepended if missing.

    Raises
    ------
    PropagationError
        On a non-finite state or, for the adaptive stepper, step underflow.
    """
    xi0 = np.asarray(xi0, dtype=float)
    d = len(xi0)
    if d != oracle.dim:
        raise ValueError(f"point has dim {d}, oracle has dim {oracle.dim}")
    ts = _sample_times(float(t_end), sample_times)
    y0 = TrajectoryState.initial(xi0).pack()
    cd, f = _derivative_source(oracle)
    if stepper == "rk4":
        if not dt > 0:
            raise ValueError("dt must be positive")
        out, status, t_fail = kernels.rk4_path(y0, ts, dt, cd, f)
        if status:
            raise PropagationError("non-finite state", t_fail)
    elif stepper == "adaptive":
        if not (rtol > 0 and atol > 0):
            raise ValueError("tolerances must be positive")
        base = (lambda y: kernels.rhs(y, cd)) if cd is not None else f
        out = _adaptive_path(base, y0, ts, rtol, atol, min_step)
    else:
        raise ValueError(f"unknown stepper {stepper!r}")
    u0 = out[:, :d]
    u1 = out[:, d : 2 * d]
    J1 = out[:, 2 * d : 2 * d + d * d].reshape(-1, d, d)
    J2 = np.stack([kernels.unpack_state(row, d)[3] for row in out])
    energy = np.array([oracle.value(x) for x in u0])
    return TrajectoryPath(ts, u0, u1, J1, J2, float(oracle.value(xi0)), energy)


def evolve_observable(f: HamiltonianOracle, state: TrajectoryState, hbar: float) -> float:
    """``f(u0) + hbar^2 * gamma2 f`` at a propagated state.

    ``gamma2 f = u1^i f_i - (1/16) f_ij A^{ij} - (1/24) f_ijk B^{ijk}``
    with derivatives at ``u0``.
    """
    if f.max_order < 3:
        raise ValueError("observable needs derivatives up to order 3")
    f0, f1, f2, f3 = f.tensors(state.u0, 3)[:4]
    A, B = kernels.gamma2_terms(state.J1, state.J2)
    g2 = f1 @ state.u1 - np.sum(f2 * A) / 16.0 - np.sum(f3 * B) / 24.0
    return float(f0 + hbar**2 * g2)


@dataclass
class BatchResult:
    """Per-point outcome of :func:`batch_propagate`; exactly one field is set."""

    path: TrajectoryPath | None = None
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def batch_propagate(points, oracle: HamiltonianOracle, threads: int = 1, **settings) -> list[BatchResult]:
    """Propagate many points; results keep input order and failures are collected."""
    points = [np.asarray(p, dtype=float) for p in points]
    if not points:
        raise ValueError("need at least one point")

    def one(p):
        try:
            return BatchResult(path=propagate(p, oracle, **settings))
        except (PropagationError, FloatingPointError, ValueError) as exc:
            log.warning("point %s failed: %s", p.tolist(), exc)
            return BatchResult(error=exc)

    if isinstance(oracle, PolynomialOracle):
        oracle.compiled(4)  # build before threads share it
    if threads <= 1:
        return [one(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, points))


def path_header(dim: int) -> list[str]:
    return (
        ["t", "point_id"]
        + [f"u0[{i + 1}]" for i in range(dim)]
        + [f"u1[{i + 1}]" for i in range(dim)]
        + ["detJ", "energy_residual"]
    )


def paths_to_rows(paths: Sequence[TrajectoryPath | None]) -> list[list]:
    rows = []
    for pid, path in enumerate(paths):
        if path is None:
            continue
        det = path.detJ
        res = path.energy_residual
        for k in range(len(path)):
            rows.append(
                [float(path.times[k]), pid]
                + [float(v) for v in path.u0[k]]
                + [float(v) for v in path.u1[k]]
                + [float(det[k]), float(res[k])]
            )
    return rows


def write_paths_csv(path: Path | str, paths: Sequence[TrajectoryPath | None], dim: int) -> None:
    write_csv(path, path_header(dim), paths_to_rows(paths))
