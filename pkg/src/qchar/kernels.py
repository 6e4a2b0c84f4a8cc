"""Numeric kernels for the semiclassical propagator.

Two implementations of each hot routine: loop kernels compiled with
``numba.njit`` and vectorised numpy versions.  Both consume the same
:class:`CompiledDerivatives` tables, so they are interchangeable and are
cross-checked in the test-suite.

State vector layout for ``d = 2n`` phase-space variables::

    y = [u0 (d) | u1 (d) | J1 (d*d, row-major J1[i, k]) | J2 (d * P)]

where ``J2`` keeps only ``k <= l`` of ``J2[i, k, l]``, packed row-major over
the pairs ``(0,0), (0,1), ..., (0,d-1), (1,1), ...`` (``P = d(d+1)/2``).
"""
from __future__ import annotations

import itertools

import numpy as np

from . import _accel
from ._accel import njit
from .poly import PolySymbol, partial_derivative

__all__ = [
    "CompiledDerivatives",
    "state_size",
    "pack_state",
    "unpack_state",
    "pair_index",
    "rhs",
    "rhs_numpy",
    "rk4_path",
    "eval_derivatives",
    "gamma2_terms",
]


class CompiledDerivatives:
    """All partial derivatives of a polynomial up to ``max_order`` as flat arrays.

    Each distinct derivative (sorted multi-index) is one segment of
    ``E``/``C``; ``index[r]`` maps a full order-``r`` index tuple to its
    segment, so evaluating every derivative is a single pass over the terms.
    """

    def __init__(self, f: PolySymbol, max_order: int = 4, hbar: float = 0.0):
        d = f.dim
        self.dim = d
        self.max_order = max_order
        segs: list[tuple[int, ...]] = []
        E_parts, C_parts, S_parts = [], [], []
        seg_of: dict[tuple[int, ...], int] = {}
        for r in range(max_order + 1):
            for mi in itertools.combinations_with_replacement(range(d), r):
                g = f
                for k in mi:
                    g = partial_derivative(g, k)
                sid = len(segs)
                segs.append(mi)
                seg_of[mi] = sid
                if g.is_zero():
                    continue
                E, C = g.to_arrays(hbar)
                E_parts.append(E)
                C_parts.append(C.real.copy())
                S_parts.append(np.full(len(C), sid, dtype=np.int64))
        self.nseg = len(segs)
        if E_parts:
            self.E = np.ascontiguousarray(np.vstack(E_parts), dtype=np.int64)
            self.C = np.ascontiguousarray(np.concatenate(C_parts))
            self.seg = np.ascontiguousarray(np.concatenate(S_parts))
        else:
            self.E = np.zeros((0, d), dtype=np.int64)
            self.C = np.zeros(0)
            self.seg = np.zeros(0, dtype=np.int64)
        self.index = []
        for r in range(max_order + 1):
            idx = np.zeros((d,) * r, dtype=np.int64)
            for full in itertools.product(range(d), repeat=r):
                idx[full] = seg_of[tuple(sorted(full))]
            self.index.append(idx)
        # padded to order 4 so the kernels have a fixed signature
        for r in range(max_order + 1, 5):
            self.index.append(np.zeros((d,) * r, dtype=np.int64))

    def values(self, x: np.ndarray) -> np.ndarray:
        return _segment_values(self.E, self.C, self.seg, np.asarray(x, dtype=float), self.nseg)

    def tensors(self, x: np.ndarray) -> list:
        """``[f, df, d2f, ...]`` up to ``max_order`` at the point ``x``."""
        v = self.values(x)
        return [v[self.index[r]] for r in range(self.max_order + 1)]


def _segment_values(E, C, seg, x, nseg):
    if _accel.get_backend() == "numba":
        return _segment_values_nb(E, C, seg, x, nseg)
    if len(C) == 0:
        return np.zeros(nseg)
    terms = C * np.prod(x[None, :] ** E, axis=1)
    return np.bincount(seg, weights=terms, minlength=nseg)


@njit(cache=True, nogil=True)
def _segment_values_nb(E, C, seg, x, nseg):
    out = np.zeros(nseg)
    d = x.shape[0]
    for t in range(C.shape[0]):
        m = C[t]
        for v in range(d):
            e = E[t, v]
            if e:
                m *= x[v] ** e
        out[seg[t]] += m
    return out


def state_size(d: int) -> int:
    return 2 * d + d * d + d * (d * (d + 1) // 2)


def pair_index(d: int) -> np.ndarray:
    """``P[k, l]`` = packed slot of the symmetric pair ``(k, l)``."""
    P = np.zeros((d, d), dtype=np.int64)
    s = 0
    for k in range(d):
        for l in range(k, d):
            P[k, l] = P[l, k] = s
            s += 1
    return P


def pack_state(u0, u1, J1, J2) -> np.ndarray:
    d = len(u0)
    P = pair_index(d)
    npair = d * (d + 1) // 2
    J2p = np.zeros((d, npair))
    for k in range(d):
        for l in range(k, d):
            J2p[:, P[k, l]] = J2[:, k, l]
    return np.concatenate([np.asarray(u0, float), np.asarray(u1, float), np.ravel(J1), np.ravel(J2p)])


def unpack_state(y: np.ndarray, d: int):
    """Return ``(u0, u1, J1, J2)`` with ``J2`` expanded to a full ``(d, d, d)`` tensor."""
    u0 = y[:d]
    u1 = y[d : 2 * d]
    J1 = y[2 * d : 2 * d + d * d].reshape(d, d)
    J2p = y[2 * d + d * d :].reshape(d, -1)
    J2 = J2p[:, pair_index(d)]
    return u0, u1, J1, J2


def _symplectic(d: int) -> np.ndarray:
    n = d // 2
    I = np.zeros((d, d))
    I[:n, n:] = -np.eye(n)
    I[n:, :n] = np.eye(n)
    return I


def _flow_sign_perm(d: int):
    """``F^i = sgn[i] * dH/dxi^perm[i]`` (i.e. ``-I^{ik} d_k H``)."""
    n = d // 2
    perm = np.array([i + n if i < n else i - n for i in range(d)], dtype=np.int64)
    sgn = np.array([1.0 if i < n else -1.0 for i in range(d)])
    return sgn, perm


def gamma2_terms(J1: np.ndarray, J2: np.ndarray):
    """Contractions ``A[a,b] = I^{k1 l1} I^{k2 l2} J^a_{k1k2} J^b_{l1l2}`` and
    ``B[a,b,c] = I^{k1 l1} I^{k2 l2} J^a_{k1} J^b_{k2} J^c_{l1l2}``."""
    I = _symplectic(J1.shape[0])
    M = np.einsum("ka,lb,cab->ckl", I, I, J2)
    A = np.einsum("akl,bkl->ab", J2, M)
    B = np.einsum("ak,bl,ckl->abc", J1, J1, M)
    return A, B


def rhs_numpy(y: np.ndarray, cd: CompiledDerivatives) -> np.ndarray:
    d = cd.dim
    u0, u1, J1, J2 = unpack_state(y, d)
    _, H1, H2, H3, H4 = cd.tensors(u0)[:5]
    sgn, perm = _flow_sign_perm(d)
    F0 = sgn * H1[perm]
    F1 = sgn[:, None] * H2[perm]
    F2 = sgn[:, None, None] * H3[perm]
    F3 = sgn[:, None, None, None] * H4[perm]
    dJ1 = F1 @ J1
    dJ2 = np.einsum("imn,mk,nl->ikl", F2, J1, J1) + np.einsum("im,mkl->ikl", F1, J2)
    A, B = gamma2_terms(J1, J2)
    du1 = F1 @ u1 - np.einsum("iab,ab->i", F2, A) / 16.0 - np.einsum("iabc,abc->i", F3, B) / 24.0
    P = pair_index(d)
    iu = np.triu_indices(d)
    dJ2p = np.zeros((d, d * (d + 1) // 2))
    dJ2p[:, P[iu]] = dJ2[:, iu[0], iu[1]]
    return np.concatenate([F0, du1, dJ1.ravel(), dJ2p.ravel()])


@njit(cache=True, nogil=True)
def _rhs_nb(y, E, C, seg, nseg, idx1, idx2, idx3, idx4, P, out):
    d = idx1.shape[0]
    n = d // 2
    npair = d * (d + 1) // 2
    v = _segment_values_nb(E, C, seg, y[:d], nseg)
    o_u1 = d
    o_J1 = 2 * d
    o_J2 = 2 * d + d * d
    # F^i = sgn * d_{perm i} H
    sgn = np.empty(d)
    perm = np.empty(d, dtype=np.int64)
    for i in range(d):
        if i < n:
            sgn[i] = 1.0
            perm[i] = i + n
        else:
            sgn[i] = -1.0
            perm[i] = i - n
    J1 = np.empty((d, d))
    for i in range(d):
        for k in range(d):
            J1[i, k] = y[o_J1 + i * d + k]
    J2 = np.empty((d, d, d))
    for i in range(d):
        for k in range(d):
            for l in range(d):
                J2[i, k, l] = y[o_J2 + i * npair + P[k, l]]
    # raised second Jacobi field M[c,k,l] = I^{k a} I^{l b} J2[c,a,b]; I^{k a} nonzero only at a = conj(k)
    M = np.empty((d, d, d))
    Isg = np.empty(d)
    for k in range(d):
        Isg[k] = -1.0 if k < n else 1.0
    for c in range(d):
        for k in range(d):
            for l in range(d):
                M[c, k, l] = Isg[k] * Isg[l] * J2[c, perm[k], perm[l]]
    A = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            s = 0.0
            for k in range(d):
                for l in range(d):
                    s += J2[a, k, l] * M[b, k, l]
            A[a, b] = s
    B = np.zeros((d, d, d))
    for a in range(d):
        for b in range(d):
            for c in range(d):
                s = 0.0
                for k in range(d):
                    for l in range(d):
                        s += J1[a, k] * J1[b, l] * M[c, k, l]
                B[a, b, c] = s
    for i in range(d):
        pi = perm[i]
        si = sgn[i]
        out[i] = si * v[idx1[pi]]
        du1 = 0.0
        for k in range(d):
            du1 += si * v[idx2[pi, k]] * y[o_u1 + k]
        t2 = 0.0
        t3 = 0.0
        for a in range(d):
            for b in range(d):
                t2 += si * v[idx3[pi, a, b]] * A[a, b]
                for c in range(d):
                    t3 += si * v[idx4[pi, a, b, c]] * B[a, b, c]
        out[o_u1 + i] = du1 - t2 / 16.0 - t3 / 24.0
        for k in range(d):
            s = 0.0
            for m in range(d):
                s += si * v[idx2[pi, m]] * J1[m, k]
            out[o_J1 + i * d + k] = s
        for k in range(d):
            for l in range(k, d):
                s = 0.0
                for m in range(d):
                    f1 = si * v[idx2[pi, m]]
                    s += f1 * J2[m, k, l]
                    for q in range(d):
                        s += si * v[idx3[pi, m, q]] * J1[m, k] * J1[q, l]
                out[o_J2 + i * npair + P[k, l]] = s


def rhs(y: np.ndarray, cd: CompiledDerivatives) -> np.ndarray:
    """Time derivative of the packed state, on the active backend."""
    if cd.max_order < 4:
        raise ValueError("the propagator needs Hamiltonian derivatives up to order 4")
    if _accel.get_backend() == "numba":
        out = np.empty_like(y)
        ix = cd.index
        _rhs_nb(y, cd.E, cd.C, cd.seg, cd.nseg, ix[1], ix[2], ix[3], ix[4], pair_index(cd.dim), out)
        return out
    return rhs_numpy(y, cd)


@njit(cache=True, nogil=True)
def _rk4_nb(y0, times, dt, E, C, seg, nseg, idx1, idx2, idx3, idx4, P, out):
    """Fixed-step RK4 through ``times``; returns (status, failing time)."""
    y = y0.copy()
    ns = y.shape[0]
    k1 = np.empty(ns)
    k2 = np.empty(ns)
    k3 = np.empty(ns)
    k4 = np.empty(ns)
    tmp = np.empty(ns)
    t = times[0]
    out[0, :] = y
    for j in range(1, times.shape[0]):
        span = times[j] - times[j - 1]
        nsteps = int(np.ceil(span / dt - 1e-9))
        if nsteps < 1:
            nsteps = 1
        h = span / nsteps
        for s in range(nsteps):
            _rhs_nb(y, E, C, seg, nseg, idx1, idx2, idx3, idx4, P, k1)
            for q in range(ns):
                tmp[q] = y[q] + 0.5 * h * k1[q]
            _rhs_nb(tmp, E, C, seg, nseg, idx1, idx2, idx3, idx4, P, k2)
            for q in range(ns):
                tmp[q] = y[q] + 0.5 * h * k2[q]
            _rhs_nb(tmp, E, C, seg, nseg, idx1, idx2, idx3, idx4, P, k3)
            for q in range(ns):
                tmp[q] = y[q] + h * k3[q]
            _rhs_nb(tmp, E, C, seg, nseg, idx1, idx2, idx3, idx4, P, k4)
            ok = True
            for q in range(ns):
                y[q] = y[q] + h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
                if not np.isfinite(y[q]):
                    ok = False
            t = times[j - 1] + (s + 1) * h
            if not ok:
                return 1, t
        out[j, :] = y
    return 0, t


def _rk4_numpy(y0, times, dt, f, out):
    y = y0.copy()
    out[0] = y
    t = times[0]
    for j in range(1, len(times)):
        span = times[j] - times[j - 1]
        nsteps = max(int(np.ceil(span / dt - 1e-9)), 1)
        h = span / nsteps
        for s in range(nsteps):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = times[j - 1] + (s + 1) * h
            if not np.all(np.isfinite(y)):
                return 1, t
        out[j] = y
    return 0, t


def rk4_path(y0: np.ndarray, times: np.ndarray, dt: float, cd: CompiledDerivatives | None = None, f=None):
    """Integrate with fixed-step RK4, recording the state at each of ``times``.

    Each interval between consecutive sample times is split into
    ``ceil(span/dt)`` equal steps.  Returns ``(states, status, t_fail)``;
    ``status`` is 1 when the state became non-finite at ``t_fail``.
    """
    times = np.ascontiguousarray(times, dtype=float)
    out = np.full((len(times), len(y0)), np.nan)
    if f is None and _accel.get_backend() == "numba":
        ix = cd.index
        status, t = _rk4_nb(
            np.ascontiguousarray(y0, dtype=float), times, float(dt), cd.E, cd.C, cd.seg, cd.nseg,
            ix[1], ix[2], ix[3], ix[4], pair_index(cd.dim), out,
        )
        return out, int(status), float(t)
    if f is None:
        f = lambda y: rhs_numpy(y, cd)  # noqa: E731
    # overflow on the way to a non-finite state is reported through status
    with np.errstate(over="ignore", invalid="ignore"):
        status, t = _rk4_numpy(np.asarray(y0, dtype=float), times, dt, f, out)
    return out, status, float(t)


def eval_derivatives(cd: CompiledDerivatives, x) -> list:
    return cd.tensors(np.asarray(x, dtype=float))
