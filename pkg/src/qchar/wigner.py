"""Expectation values against a stationary Gaussian Wigner function.

Observables evolve and the state stays fixed, so an expectation at time
``t`` is the Gaussian average of the evolved observable symbol.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "GaussianWignerState",
    "expectation_quadrature",
    "expectation_montecarlo",
    "expectation_record",
    "gauss_hermite_grid",
]


class NotPositiveDefiniteError(ValueError):
    """Covariance has no Cholesky factor."""


@dataclass(frozen=True)
class GaussianWignerState:
    """Normalised Gaussian ``W(xi)`` with given mean and covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        d = len(mean)
        if mean.ndim != 1 or d % 2:
            raise ValueError("mean must be a vector of even length")
        if cov.shape != (d, d):
            raise ValueError(f"covariance must be {d}x{d}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-14 * max(1.0, np.abs(cov).max())):
            raise NotPositiveDefiniteError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("covariance is not positive definite") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def cholesky(self) -> np.ndarray:
        return self._chol

    def density(self, x) -> float:
        x = np.asarray(x, dtype=float) - self.mean
        z = np.linalg.solve(self._chol, x)
        norm = (2 * math.pi) ** (self.dim / 2) * np.prod(np.diag(self._chol))
        return float(np.exp(-0.5 * z @ z) / norm)


def gauss_hermite_grid(state: GaussianWignerState, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product nodes in phase space and weights summing to 1."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    x, w = np.polynomial.hermite_e.hermegauss(degree)
    w = w / w.sum()
    d = state.dim
    Z = np.array(list(itertools.product(x, repeat=d)))
    W = np.array([math.prod(c) for c in itertools.product(w, repeat=d)])
    nodes = state.mean[None, :] + Z @ state.cholesky.T
    return nodes, W


def _pairwise_sum(v: np.ndarray) -> float:
    # fixed reduction tree so the result is independent of thread count
    v = np.asarray(v, dtype=float)
    while len(v) > 1:
        if len(v) % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0]) if len(v) else 0.0


def _values(observable: Callable, nodes: np.ndarray, threads: int) -> np.ndarray:
    if threads <= 1:
        return np.array([observable(x) for x in nodes], dtype=float)
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.array(list(pool.map(observable, nodes)), dtype=float)


def expectation_quadrature(
    state: GaussianWignerState,
    observable: Callable[[np.ndarray], float],
    degree: int = 20,
    threads: int = 1,
) -> float:
    """Gauss-Hermite tensor-grid average of ``observable`` over ``W``.

    ``observable`` maps an initial point to the evolved observable value
    (for example a closure around :func:`semiclassical.evolve_observable`
    or a τ-series evaluation).  Exact for polynomials of degree
    ``<= 2*degree - 1`` in each variable.
    """
    if state.dim > 6:
        raise ValueError("tensor quadrature is limited to n <= 3")
    nodes, W = gauss_hermite_grid(state, degree)
    return _pairwise_sum(W * _values(observable, nodes, threads))


def expectation_montecarlo(
    state: GaussianWignerState,
    observable: Callable[[np.ndarray], float],
    samples: int = 10000,
    seed: int = 0,
    threads: int = 1,
) -> tuple[float, float]:
    """Sample mean and standard error; deterministic for a given ``seed``."""
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((samples, state.dim))
    pts = state.mean[None, :] + Z @ state.cholesky.T
    v = _values(observable, pts, threads)
    mean = _pairwise_sum(v) / samples
    var = _pairwise_sum((v - mean) ** 2) / (samples - 1)
    return mean, math.sqrt(var / samples)


def expectation_record(observable: str, t: float, hbar: float, method: str, value: float, stderr=None) -> dict:
    rec = {"observable": observable, "t": float(t), "hbar": float(hbar), "method": method, "value": float(value)}
    if stderr is not None:
        rec["stderr"] = float(stderr)
    return rec
