"""Acceptance criteria, each returning a measured outcome and a verdict.

Shared by the ``verify-all`` command and ``tests/test_acceptance.py``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import constraints as cons
from .dynamics import CLASSICAL, QUANTUM, canonicity_deviation, check_inertia_flow, flow_series, observable_series, verify_identity
from .numstar import generating_map_example
from .poly import PolySymbol, grade_extract
from .records import dumps_json
from .scenario import builtin_hamiltonian
from .semiclassical import PolynomialOracle, evolve_observable, propagate

__all__ = [
    "CriterionResult",
    "CRITERIA",
    "constraint_family",
    "run_criteria",
    "verify_all_document",
    "criterion_lines",
]


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": bool(self.passed), "details": self.details}

    def line(self) -> str:
        return f"criterion {self.id:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}"


def _family() -> dict[str, PolySymbol]:
    return {name: builtin_hamiltonian(name, 1) for name in ("harmonic", "quartic_iso", "quartic_1d")}


def c1_moyal_invariance() -> CriterionResult:
    recs = {name: verify_identity("moyal-invariance", H, 6, label=name) for name, H in _family().items()}
    return CriterionResult(
        1,
        "exact Moyal-bracket invariance, K=6",
        all(r.residual_zero for r in recs.values()),
        {name: r.residual_zero for name, r in recs.items()},
    )


def c2_energy_and_composition() -> CriterionResult:
    details = {}
    ok = True
    for name, H in _family().items():
        for kind in ("energy-conservation", "composition-law"):
            r = verify_identity(kind, H, 6, label=name)
            details[f"{name}/{kind}"] = r.residual_zero
            ok &= r.residual_zero
    return CriterionResult(2, "exact energy conservation (K=6) and composition law (combined order 6)", ok, details)


def c3_connector() -> CriterionResult:
    r = verify_identity("classical-quantum-connector", builtin_hamiltonian("quartic_1d", 1), 4, hbar_max=2)
    return CriterionResult(3, "classical-quantum connector through hbar^2, combined order 4", r.residual_zero, r.to_dict())


def c4_harmonic_exactness() -> CriterionResult:
    H = builtin_hamiltonian("harmonic", 1)
    ts = np.linspace(0.0, 10.0, 1001)
    oracle = PolynomialOracle(H)
    u1_max = 0.0
    u0_dev = 0.0
    for xi in ([1.0, 0.0], [0.3, -0.7]):
        path = propagate(xi, oracle, 10.0, dt=1e-3, sample_times=ts)
        q0, p0 = xi
        exact = np.column_stack([q0 * np.cos(ts) + p0 * np.sin(ts), p0 * np.cos(ts) - q0 * np.sin(ts)])
        u1_max = max(u1_max, float(np.max(np.linalg.norm(path.u1, axis=1))))
        u0_dev = max(u0_dev, float(np.max(np.abs(path.u0 - exact))))
    return CriterionResult(
        4,
        "harmonic oscillator: |u1| <= 1e-12 and u0 within 1e-10 of the rotation, t in [0,10], dt=1e-3",
        u1_max <= 1e-12 and u0_dev <= 1e-10,
        {"max_norm_u1": u1_max, "max_u0_deviation": u0_dev, "tol_u1": 1e-12, "tol_u0": 1e-10},
    )


def _onsets(H: PolySymbol, K: int) -> list[int | None]:
    out = []
    for comp in flow_series(H, K):
        g2 = comp.grade(2)
        orders = sorted(idx[0] for idx, _ in g2.items())
        out.append(orders[0] if orders else None)
    return out


def c5_hbar2_onset() -> CriterionResult:
    H = builtin_hamiltonian("quartic_1d", 1)
    onsets = _onsets(H, 6)
    present = [o for o in onsets if o is not None]
    flow_onset = min(present) if present else None
    return CriterionResult(
        5,
        "hbar^2 grade of the flow vanishes at tau^0..tau^4 and is nonzero at tau^5",
        flow_onset == 5,
        {"flow_onset": flow_onset, "onset_u_q": onsets[0], "onset_u_p": onsets[1]},
    )


def c6_canonicity_failure() -> CriterionResult:
    H = builtin_hamiltonian("quartic_iso", 1)
    D = canonicity_deviation(H, 2)
    coeff = grade_extract(D[0][1][2], 2)
    moyal = verify_identity("moyal-invariance", H, 6)
    return CriterionResult(
        6,
        "quartic flow is not canonical at tau^2 hbar^2 while the Moyal residual is zero",
        (not coeff.is_zero()) and moyal.residual_zero,
        {"D12_tau2_hbar2": str(coeff), "moyal_residual_zero": moyal.residual_zero},
    )


def c7_ode_vs_oracle() -> CriterionResult:
    H = builtin_hamiltonian("quartic_1d", 1)
    xi, hbar, tau = [1.0, 0.3], 0.1, 0.1
    path = propagate(xi, PolynomialOracle(H), tau, dt=1e-3)
    st = path.state(-1)
    u = flow_series(H, 10)
    exact = np.array([c.evaluate(xi, hbar, tau).real for c in u])
    dev = float(np.max(np.abs(st.position(hbar) - exact)))
    q = PolySymbol.variable(0, 2)
    obs = evolve_observable(PolynomialOracle(q * q, max_order=3), st, hbar)
    obs_exact = observable_series(q * q, H, 10).evaluate(xi, hbar, tau).real
    obs_dev = abs(obs - obs_exact)
    return CriterionResult(
        7,
        "ODE propagator vs exact series at xi=(1,0.3), hbar=0.1, tau=0.1 (K=10), tol 1e-8",
        dev <= 1e-8 and obs_dev <= 1e-8,
        {"max_component_deviation": dev, "q2_deviation": obs_dev, "tol": 1e-8},
    )


def c8_generating_map() -> CriterionResult:
    details = {}
    ok = True
    for Q, P in ((1.0, 0.0), (1.0, 1.0)):
        r = generating_map_example(Q, P, 0.1)
        errs = r["abs_rel_errors"]
        ok &= max(errs) <= 1e-6
        details[f"({Q:g},{P:g})"] = {
            "circ_h2": r["computed_circ_h2"],
            "wedge_h2": r["computed_wedge_h2"],
            "rel_errors": errs,
        }
    return CriterionResult(8, "generating-map hbar^2 coefficients within 1e-6 relative", ok, details)


def constraint_family():
    """Linear symplectic constraint bases on n=2 and test Hamiltonians."""
    x1, x2, y1, y2 = (PolySymbol.variable(i, 4) for i in range(4))
    bases = {"(q2,p2)": [x2, y2], "(q2-p1,p2)": [x2 - y1, y2]}
    hams = {
        "harmonic": (x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2) / 2,
        "coupled": (x1 * x1 + y1 * y1) / 2 + x1**4 / 4 + x2 * x2 * y1 * y1 + x1 * y2,
    }
    observables = [x1, x2, y1, y2, x1 * y1 + x2 * y2, x1 * x2 * y2 + y2**3]
    return bases, hams, observables


def c9_constraints() -> CriterionResult:
    bases, hams, observables = constraint_family()
    details = {}
    ok = True
    for bname, G in bases.items():
        cs = cons.validate_symplectic_basis(G)
        for m, f in enumerate(observables):
            for mode in (CLASSICAL, QUANTUM):
                r = cons.check_involution(f, cs, mode)
                details[f"{bname}/involution-{mode}/f{m}"] = r.residual_zero
                ok &= r.residual_zero
        for hname, H in hams.items():
            for mode in (CLASSICAL, QUANTUM):
                r1 = cons.check_constraint_preservation(H, cs, 4, mode)
                r2 = cons.check_flow_projection_commute(H, cs, 4, mode, hbar_max=2)
                details[f"{bname}/{hname}/preservation-{mode}"] = r1.residual_zero
                details[f"{bname}/{hname}/commute-{mode}"] = r2.residual_zero
                ok &= r1.residual_zero and r2.residual_zero
    return CriterionResult(9, "constraint suite: involution, preservation, commutation, idempotence", ok, details)


def c10_inertia() -> CriterionResult:
    p = PolySymbol.variable(1, 2)
    r = check_inertia_flow(p**4, 4)
    return CriterionResult(10, "inertia flow for H'=p^4 is canonical and Moyal-preserving", r.residual_zero, r.to_dict())


CRITERIA: list[Callable[[], CriterionResult]] = [
    c1_moyal_invariance,
    c2_energy_and_composition,
    c3_connector,
    c4_harmonic_exactness,
    c5_hbar2_onset,
    c6_canonicity_failure,
    c7_ode_vs_oracle,
    c8_generating_map,
    c9_constraints,
    c10_inertia,
]


def run_criteria() -> list[CriterionResult]:
    return [c() for c in CRITERIA]


def _document(results: list[CriterionResult]) -> dict:
    return {"criteria": [r.to_dict() for r in results]}


def verify_all_document() -> tuple[dict, list[CriterionResult]]:
    """Run criteria 1-10 twice; criterion 11 is byte equality of the two documents."""
    first = run_criteria()
    second = run_criteria()
    same = dumps_json(_document(first)) == dumps_json(_document(second))
    results = first + [
        CriterionResult(11, "repeated evaluation gives byte-identical results", same, {"repeats": 2})
    ]
    doc = _document(results)
    doc["all_passed"] = all(r.passed for r in results)
    return doc, results


def criterion_lines(results: list[CriterionResult]) -> list[str]:
    return [r.line() for r in results]

