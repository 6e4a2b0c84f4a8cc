"""Declarative scenarios: parse, validate and execute a JSON run description.

A scenario file looks like::

    {
      "n": 1,
      "hbar": 0.1,
      "hamiltonian": "quartic_1d",
      "initial_points": [[1.0, 0.3]],
      "time": {"t_end": 1.0, "dt": 1e-3, "sample_times": [0.5, 1.0]},
      "orders": {"tau_series": 6, "hbar_order": 2, "projection_max_k": 8},
      "observables": [[{"coeff_re": "1", "coeff_im": "0", "hbar_power": 0, "exponents": [2, 0]}]],
      "wigner_state": {"mean": [1.0, 0.0], "covariance": [[0.5, 0], [0, 0.5]]},
      "constraints": [...],
      "verify": ["moyal-invariance"],
      "seed": 0,
      "outputs": {"format": "csv"}
    }

Only ``n``, ``hamiltonian`` and ``hbar`` are required.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import constraints as cons
from .dynamics import IDENTITY_KINDS, QUANTUM, verify_identity
from .poly import PolySymbol
from .records import VerificationRecord, write_csv, write_json
from .semiclassical import PolynomialOracle, PropagationError, batch_propagate, evolve_observable, write_paths_csv
from .wigner import GaussianWignerState, NotPositiveDefiniteError, expectation_montecarlo, expectation_quadrature

__all__ = [
    "Scenario",
    "ScenarioError",
    "NumericalFailure",
    "builtin_hamiltonian",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "project_scenario",
    "BUILTINS",
    "CONSTRAINT_CHECKS",
]

BUILTINS = ("harmonic", "quartic_iso", "quartic_1d")
CONSTRAINT_CHECKS = ("involution", "constraint-preservation", "flow-projection-commute")


class ScenarioError(ValueError):
    """The scenario could not be parsed or failed validation (exit status 2)."""


class NumericalFailure(RuntimeError):
    """A numerical step failed while running a scenario (exit status 3)."""


def builtin_hamiltonian(name: str, n: int) -> PolySymbol:
    """``harmonic``: sum (q^2+p^2)/2; ``quartic_iso``: (sum q^2+p^2)^2;
    ``quartic_1d``: sum p^2/2 + q^4/4."""
    d = 2 * n
    q = [PolySymbol.variable(i, d) for i in range(n)]
    p = [PolySymbol.variable(n + i, d) for i in range(n)]
    if name == "harmonic":
        return sum(((a * a + b * b) / 2 for a, b in zip(q, p)), PolySymbol.zero(d))
    if name == "quartic_iso":
        r2 = sum((a * a + b * b for a, b in zip(q, p)), PolySymbol.zero(d))
        return r2 * r2
    if name == "quartic_1d":
        return sum((b * b / 2 + a**4 / 4 for a, b in zip(q, p)), PolySymbol.zero(d))
    raise ScenarioError(f"unknown builtin Hamiltonian {name!r}; expected one of {BUILTINS}")


@dataclass
class Scenario:
    n: int
    hbar: float
    hamiltonian: PolySymbol
    hamiltonian_label: str
    initial_points: list[np.ndarray] = field(default_factory=list)
    t_end: float = 1.0
    dt: float = 1e-3
    stepper: str = "rk4"
    rtol: float = 1e-10
    atol: float = 1e-10
    sample_times: np.ndarray | None = None
    tau_order: int = 6
    hbar_order: int = 2
    max_k: int = cons.DEFAULT_MAX_K
    observables: list[tuple[str, PolySymbol]] = field(default_factory=list)
    wigner: GaussianWignerState | None = None
    wigner_method: str = "quadrature"
    wigner_degree: int = 20
    wigner_samples: int = 2000
    constraints: cons.ConstraintSet | None = None
    verify: list[str] = field(default_factory=list)
    seed: int = 0
    out_format: str = "csv"
    out_path: str | None = None

    @property
    def dim(self) -> int:
        return 2 * self.n

    def times(self) -> np.ndarray:
        if self.sample_times is not None:
            return self.sample_times
        return np.array([0.0, self.t_end])


def _poly(literal, dim: int, what: str) -> PolySymbol:
    try:
        return PolySymbol.from_literal(literal, dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad polynomial literal for {what}: {exc}") from exc


def _number(x, what: str, *, positive=False, nonneg=False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"{what} must be a number")
    x = float(x)
    if not math.isfinite(x):
        raise ScenarioError(f"{what} must be finite")
    if positive and x <= 0:
        raise ScenarioError(f"{what} must be > 0")
    if nonneg and x < 0:
        raise ScenarioError(f"{what} must be >= 0")
    return x


def _int(x, what: str, lo: int = 0) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < lo:
        raise ScenarioError(f"{what} must be an integer >= {lo}")
    return x


def parse_scenario(doc: Any) -> Scenario:
    """Validate a decoded JSON document and build a :class:`Scenario`."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    known = {
        "n", "hbar", "hamiltonian", "initial_points", "time", "orders", "observables",
        "wigner_state", "constraints", "verify", "seed", "outputs", "name",
    }
    extra = set(doc) - known
    if extra:
        raise ScenarioError(f"unknown scenario keys: {sorted(extra)}")
    for key in ("n", "hbar", "hamiltonian"):
        if key not in doc:
            raise ScenarioError(f"missing required key {key!r}")
    n = _int(doc["n"], "n", 1)
    d = 2 * n
    hbar = _number(doc["hbar"], "hbar", nonneg=True)
    h = doc["hamiltonian"]
    if isinstance(h, str):
        H, label = builtin_hamiltonian(h, n), h
    else:
        H = _poly(h, d, "hamiltonian")
        label = str(H)
    if not H.is_hermitian_symbol():
        raise ScenarioError("hamiltonian must be a Hermitian symbol")
    sc = Scenario(n=n, hbar=hbar, hamiltonian=H, hamiltonian_label=label)

    pts = doc.get("initial_points", [])
    if not isinstance(pts, list):
        raise ScenarioError("initial_points must be a list")
    for k, p in enumerate(pts):
        if not isinstance(p, list) or len(p) != d:
            raise ScenarioError(f"initial_points[{k}] must have length {d}")
        sc.initial_points.append(np.array([_number(v, f"initial_points[{k}]") for v in p]))

    t = doc.get("time", {})
    if not isinstance(t, dict):
        raise ScenarioError("time must be an object")
    sc.t_end = _number(t.get("t_end", 1.0), "time.t_end")
    sc.dt = _number(t.get("dt", 1e-3), "time.dt", positive=True)
    sc.stepper = t.get("stepper", "rk4")
    if sc.stepper not in ("rk4", "adaptive"):
        raise ScenarioError("time.stepper must be 'rk4' or 'adaptive'")
    sc.rtol = _number(t.get("rtol", 1e-10), "time.rtol", positive=True)
    sc.atol = _number(t.get("atol", 1e-10), "time.atol", positive=True)
    if "sample_times" in t:
        st = t["sample_times"]
        if not isinstance(st, list) or not st:
            raise ScenarioError("time.sample_times must be a non-empty list")
        arr = np.array([_number(v, "time.sample_times") for v in st])
        if arr[0] != 0.0:
            arr = np.concatenate([[0.0], arr])
        if np.any(np.diff(arr) <= 0):
            raise ScenarioError("time.sample_times must be strictly increasing and positive")
        sc.sample_times = arr
        sc.t_end = float(arr[-1])

    o = doc.get("orders", {})
    if not isinstance(o, dict):
        raise ScenarioError("orders must be an object")
    sc.tau_order = _int(o.get("tau_series", 6), "orders.tau_series", 1)
    sc.hbar_order = _int(o.get("hbar_order", 2), "orders.hbar_order")
    if sc.hbar_order > 2:
        raise ScenarioError("orders.hbar_order must be <= 2")
    sc.max_k = _int(o.get("projection_max_k", cons.DEFAULT_MAX_K), "orders.projection_max_k", 1)

    obs = doc.get("observables", [])
    if not isinstance(obs, list):
        raise ScenarioError("observables must be a list")
    for k, item in enumerate(obs):
        name = f"f{k}"
        if isinstance(item, dict) and "terms" in item and "name" in item:
            name = str(item["name"])
            item = item["terms"]
        f = _poly(item, d, f"observables[{k}]")
        sc.observables.append((name, f))

    w = doc.get("wigner_state")
    if w is not None:
        if not isinstance(w, dict) or "mean" not in w or "covariance" not in w:
            raise ScenarioError("wigner_state needs mean and covariance")
        try:
            sc.wigner = GaussianWignerState(np.array(w["mean"], dtype=float), np.array(w["covariance"], dtype=float))
        except (NotPositiveDefiniteError, ValueError, TypeError) as exc:
            raise ScenarioError(f"wigner_state: {exc}") from exc
        if sc.wigner.dim != d:
            raise ScenarioError(f"wigner_state must have dimension {d}")
        sc.wigner_method = w.get("method", "quadrature")
        if sc.wigner_method not in ("quadrature", "montecarlo"):
            raise ScenarioError("wigner_state.method must be 'quadrature' or 'montecarlo'")
        sc.wigner_degree = _int(w.get("degree", 20), "wigner_state.degree", 1)
        sc.wigner_samples = _int(w.get("samples", 2000), "wigner_state.samples", 2)

    cl = doc.get("constraints")
    if cl is not None:
        if not isinstance(cl, list) or len(cl) % 2 or not cl:
            raise ScenarioError("constraints must be a non-empty list of even length")
        G = [_poly(g, d, f"constraints[{k}]") for k, g in enumerate(cl)]
        try:
            sc.constraints = cons.validate_symplectic_basis(G)
        except cons.ConstraintError as exc:
            raise ScenarioError(f"constraints: {exc}") from exc

    v = doc.get("verify", [])
    if not isinstance(v, list):
        raise ScenarioError("verify must be a list")
    for kind in v:
        if kind not in IDENTITY_KINDS + CONSTRAINT_CHECKS:
            raise ScenarioError(f"unknown verification kind {kind!r}")
        if kind in CONSTRAINT_CHECKS and sc.constraints is None:
            raise ScenarioError(f"verification {kind!r} needs constraints")
    sc.verify = list(v)
    sc.seed = _int(doc.get("seed", 0), "seed")

    out = doc.get("outputs", {})
    if not isinstance(out, dict):
        raise ScenarioError("outputs must be an object")
    sc.out_format = out.get("format", "csv")
    if sc.out_format not in ("csv", "json"):
        raise ScenarioError("outputs.format must be 'csv' or 'json'")
    sc.out_path = out.get("path")
    return sc


def load_scenario(path: Path | str) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return parse_scenario(doc)


def _effective_hamiltonian(sc: Scenario) -> PolySymbol:
    if sc.constraints is None:
        return sc.hamiltonian
    try:
        return cons.projected_hamiltonian(sc.hamiltonian, sc.constraints, QUANTUM, sc.max_k)
    except cons.NonTerminatingProjection as exc:
        raise NumericalFailure(str(exc)) from exc


def _verify(sc: Scenario, H: PolySymbol) -> list[VerificationRecord]:
    recs = []
    K = sc.tau_order
    for kind in sc.verify:
        if kind in IDENTITY_KINDS:
            kk = min(K, 4) if kind == "classical-quantum-connector" else K
            recs.append(verify_identity(kind, H, kk, label=sc.hamiltonian_label))
        elif kind == "involution":
            for mode in ("classical", QUANTUM):
                recs.append(cons.check_involution(sc.hamiltonian, sc.constraints, mode, sc.max_k))
        elif kind == "constraint-preservation":
            for mode in ("classical", QUANTUM):
                recs.append(cons.check_constraint_preservation(sc.hamiltonian, sc.constraints, K, mode, sc.max_k))
        else:
            for mode in ("classical", QUANTUM):
                recs.append(
                    cons.check_flow_projection_commute(sc.hamiltonian, sc.constraints, min(K, 4), mode, max_k=sc.max_k)
                )
    return recs


def _settings(sc: Scenario) -> dict:
    return dict(
        t_end=sc.t_end, stepper=sc.stepper, dt=sc.dt, rtol=sc.rtol, atol=sc.atol,
        sample_times=sc.sample_times,
    )


def run_scenario(sc: Scenario, out_dir: Path | str | None = None, *, fmt: str | None = None, threads: int = 1) -> dict:
    """Execute a scenario and write its artifacts into ``out_dir``.

    Returns a summary with ``files`` (written paths, sorted) and ``verified``
    (``True`` when every requested verification has a zero residual).

    Raises
    ------
    NumericalFailure
        When a trajectory diverges or a projection fails to terminate.
    """
    if out_dir is None:
        out_dir = sc.out_path or "results"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = fmt or sc.out_format
    files: list[str] = []
    H = _effective_hamiltonian(sc)
    hbar_eff = sc.hbar if sc.hbar_order >= 2 else 0.0

    if sc.initial_points:
        oracle = PolynomialOracle(H)
        results = batch_propagate(sc.initial_points, oracle, threads=threads, **_settings(sc))
        failed = [(k, r.error) for k, r in enumerate(results) if not r.ok]
        if failed:
            k, err = failed[0]
            raise NumericalFailure(f"point {k}: {err}")
        paths = [r.path for r in results]
        if fmt == "csv":
            write_paths_csv(out / "paths.csv", paths, sc.dim)
            files.append("paths.csv")
        else:
            from .semiclassical import path_header, paths_to_rows

            header = path_header(sc.dim)
            write_json(out / "paths.json", {"columns": header, "rows": paths_to_rows(paths)})
            files.append("paths.json")
        if sc.observables:
            rows = []
            for name, f in sc.observables:
                fo = PolynomialOracle(f, sc.hbar, max_order=3)
                for pid, path in enumerate(paths):
                    for k in range(len(path)):
                        val = evolve_observable(fo, path.state(k), hbar_eff)
                        rows.append([float(path.times[k]), pid, name, val])
            header = ["t", "point_id", "observable", "value"]
            if fmt == "csv":
                write_csv(out / "observables.csv", header, rows)
                files.append("observables.csv")
            else:
                write_json(out / "observables.json", {"columns": header, "rows": rows})
                files.append("observables.json")

    if sc.wigner is not None and sc.observables:
        files.append(_expectations(sc, H, hbar_eff, out, threads))

    if sc.constraints is not None:
        write_json(out / "projection.json", projection_report(sc))
        files.append("projection.json")

    verified = True
    if sc.verify:
        recs = _verify(sc, sc.hamiltonian if sc.constraints is None else H)
        verified = all(r.residual_zero for r in recs)
        write_json(out / "verification.json", {"records": [r.to_dict() for r in recs], "all_zero": verified})
        files.append("verification.json")
    return {"files": sorted(files), "verified": verified}


def _expectations(sc: Scenario, H: PolySymbol, hbar_eff: float, out: Path, threads: int) -> str:
    oracle = PolynomialOracle(H)
    times = sc.times()
    settings = _settings(sc)
    if sc.wigner_method == "quadrature":
        from .wigner import gauss_hermite_grid

        nodes, _ = gauss_hermite_grid(sc.wigner, sc.wigner_degree)
    else:
        rng = np.random.default_rng(sc.seed)
        Z = rng.standard_normal((sc.wigner_samples, sc.dim))
        nodes = sc.wigner.mean[None, :] + Z @ sc.wigner.cholesky.T
    results = batch_propagate(list(nodes), oracle, threads=threads, **settings)
    bad = [k for k, r in enumerate(results) if not r.ok]
    if bad:
        raise NumericalFailure(f"expectation node {bad[0]} failed: {results[bad[0]].error}")
    lookup = {tuple(x): r.path for x, r in zip(map(tuple, nodes), results)}
    records = []
    for name, f in sc.observables:
        fo = PolynomialOracle(f, sc.hbar, max_order=3)
        for k, t in enumerate(times):
            def value(x, k=k):
                return evolve_observable(fo, lookup[tuple(x)].state(k), hbar_eff)

            if sc.wigner_method == "quadrature":
                v = expectation_quadrature(sc.wigner, value, sc.wigner_degree)
                records.append(_exp_record(name, t, sc.hbar, "quadrature", v))
            else:
                mean, se = expectation_montecarlo(sc.wigner, value, sc.wigner_samples, sc.seed)
                records.append(_exp_record(name, t, sc.hbar, "montecarlo", mean, se))
    write_json(out / "expectations.json", {"records": records})
    return "expectations.json"


def _exp_record(name, t, hbar, method, value, stderr=None) -> dict:
    from .wigner import expectation_record

    return expectation_record(name, t, hbar, method, value, stderr)


def projection_report(sc: Scenario) -> dict:
    """Projected Hamiltonian and observables (both modes) as polynomial literals."""
    if sc.constraints is None:
        raise ScenarioError("scenario has no constraints")
    cs = sc.constraints
    doc: dict = {"constraints": cs.to_literal(), "hamiltonian": sc.hamiltonian.to_literal()}
    try:
        for mode in ("classical", QUANTUM):
            Hp = cons.projected_hamiltonian(sc.hamiltonian, cs, mode, sc.max_k)
            inv = cons.check_involution(sc.hamiltonian, cs, mode, sc.max_k)
            doc[mode] = {
                "projected_hamiltonian": Hp.to_literal(),
                "projected_hamiltonian_text": str(Hp),
                "involution": inv.to_dict(),
                "observables": {
                    name: cons.project(f, cs, mode, sc.max_k).to_literal() for name, f in sc.observables
                },
            }
    except cons.NonTerminatingProjection as exc:
        raise NumericalFailure(str(exc)) from exc
    return doc


def project_scenario(sc: Scenario, out_dir: Path | str) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = projection_report(sc)
    write_json(out / "projection.json", doc)
    ok = all(doc[m]["involution"]["residual_zero"] for m in ("classical", QUANTUM))
    return {"files": ["projection.json"], "verified": ok}


__all__ += ["projection_report", "PropagationError"]
