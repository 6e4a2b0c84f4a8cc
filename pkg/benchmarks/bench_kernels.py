"""Compare the numba and numpy backends on the semiclassical kernels.

Times one right-hand-side evaluation and a full fixed-step RK4 path for the
built-in Hamiltonians.  Compilation happens in a warm-up call that is not
timed.  Both backends must agree; the maximum path difference is reported.

Usage::

    python benchmarks/bench_kernels.py --n 2 --steps 2000 --repeat 5
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from qchar import _accel, kernels
from qchar.scenario import BUILTINS, builtin_hamiltonian


def _initial(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return kernels.pack_state(0.5 * rng.normal(size=d), np.zeros(d), np.eye(d), np.zeros((d, d, d)))


def bench(name: str, n: int, steps: int, repeat: int, seed: int) -> dict:
    H = builtin_hamiltonian(name, n)
    cd = kernels.CompiledDerivatives(H, 4)
    y0 = _initial(H.dim, seed)
    dt = 1e-3
    times = np.array([0.0, steps * dt])
    row = {"hamiltonian": name, "n": n, "state_size": int(y0.size), "steps": steps}
    paths = {}
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    prev = _accel.get_backend()
    try:
        for b in backends:
            _accel.set_backend(b)
            kernels.rhs(y0, cd)
            kernels.rk4_path(y0, times, dt, cd)
            t_rhs = min(timeit.repeat(lambda: kernels.rhs(y0, cd), number=200, repeat=repeat)) / 200
            t_path = min(timeit.repeat(lambda: kernels.rk4_path(y0, times, dt, cd), number=1, repeat=repeat))
            paths[b] = kernels.rk4_path(y0, times, dt, cd)[0]
            row[f"{b}_rhs_us"] = t_rhs * 1e6
            row[f"{b}_path_s"] = t_path
    finally:
        _accel.set_backend(prev)
    if "numba" in paths:
        row["rhs_speedup"] = row["numpy_rhs_us"] / row["numba_rhs_us"]
        row["path_speedup"] = row["numpy_path_s"] / row["numba_path_s"]
        row["max_abs_diff"] = float(np.max(np.abs(paths["numba"] - paths["numpy"])))
    return row


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[1, 2], help="degrees of freedom")
    parser.add_argument("--hamiltonian", choices=BUILTINS, nargs="+", default=list(BUILTINS))
    parser.add_argument("--steps", type=int, default=2000, help="RK4 steps per path")
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (best is kept)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true", help="print one JSON object per row")
    args = parser.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; timing the numpy backend only")
    rows = [bench(h, n, args.steps, args.repeat, args.seed) for n in args.n for h in args.hamiltonian]
    for row in rows:
        if args.json:
            print(json.dumps(row, sort_keys=True))
            continue
        line = f"{row['hamiltonian']:<12} n={row['n']}  rhs numpy {row['numpy_rhs_us']:9.1f} us"
        if "numba_rhs_us" in row:
            line += (
                f"  numba {row['numba_rhs_us']:8.1f} us (x{row['rhs_speedup']:.1f})"
                f"  path numpy {row['numpy_path_s']:.3f} s  numba {row['numba_path_s']:.4f} s"
                f" (x{row['path_speedup']:.1f})  diff {row['max_abs_diff']:.1e}"
            )
        else:
            line += f"  path {row['numpy_path_s']:.3f} s"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
