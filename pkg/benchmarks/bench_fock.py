"""Compiled vs numpy assembly of correlation blocks.

    python benchmarks/bench_fock.py [--repeat 3] [--json out.json]

Both backends are run on the same monomials and bases; the sparse results
must agree exactly before any timing is reported.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from dilute_fermi.cli.verify import small_system
from dilute_fermi.correlation import BlockKind, assemble_block, build_trial_system
from dilute_fermi.fock import BACKEND

CASES = (
    ("small/H0", "small", BlockKind.H0),
    ("small/Q1", "small", BlockKind.Q1),
    ("small/Q4", "small", BlockKind.Q4),
    ("trial/Q1", "trial", BlockKind.Q1),
    ("trial/X", "trial", BlockKind.X),
    ("trial/B", "trial", BlockKind.B),
)


def _systems():
    basis, mp, K = small_system()
    rho = 1e-2
    s = build_trial_system(rho / 2, rho / 2, (7 / (rho / 2)) ** (1 / 3), cap=4, check_band=False)
    return {"small": (basis, mp, K), "trial": (s.basis, s.mp, s.kernels)}


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def run(repeat: int = 3) -> list[dict]:
    systems = _systems()
    rows = []
    for name, sysname, kind in CASES:
        basis, mp, K = systems[sysname]
        res = {}
        for backend in ("cython", "numpy"):
            if backend == "cython" and BACKEND != "cython":
                continue
            res[backend] = _time(lambda: assemble_block(kind, basis, mp, K, backend=backend), repeat)
        row = {"case": name, "dim": basis.dim, "nnz": int(res["numpy"][1].matrix.nnz),
               "numpy_s": res["numpy"][0]}
        if "cython" in res:
            d = res["cython"][1].matrix - res["numpy"][1].matrix
            row["max_diff"] = float(abs(d).max()) if d.nnz else 0.0
            row["cython_s"] = res["cython"][0]
            row["speedup"] = row["numpy_s"] / row["cython_s"]
        rows.append(row)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--json")
    a = p.parse_args(argv)
    rows = run(a.repeat)
    print(f"{'case':10s} {'dim':>7s} {'nnz':>9s} {'numpy [s]':>10s} {'cython [s]':>10s} {'speedup':>8s} {'max diff':>9s}")
    for r in rows:
        print(f"{r['case']:10s} {r['dim']:7d} {r['nnz']:9d} {r['numpy_s']:10.4f} "
              f"{r.get('cython_s', float('nan')):10.4f} {r.get('speedup', float('nan')):8.1f} "
              f"{r.get('max_diff', float('nan')):9.1e}")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
