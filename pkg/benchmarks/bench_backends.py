"""Compare the numba and numpy backends on the hot loops.

Usage: python3 benchmarks/bench_backends.py [--repeat 3] [--json out.json]

Each case runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` timed runs; the best time is reported together with the
largest relative difference between the two backends' outputs.
"""
from __future__ import annotations

import argparse
import json
import math
import time

import numpy as np

from weakcz import _accel
from weakcz.grid import GridFunction, GridSpec, cells_in_box
from weakcz.kernel import make_homogeneous_model, make_tensor_hilbert
from weakcz.maximal import maximal_function
from weakcz.operator import AtomicMeasure, TruncationPolicy, apply_atoms, apply_functions
from weakcz.verify.lemma1 import CoverSet, doubled_union, lemma1_sum


def _maximal_1d():
    g = GridSpec.from_box([-4], [4], 2.0 ** -9)
    f = GridFunction.indicator(g, [0], [1])
    return lambda: maximal_function(f).values


def _maximal_2d():
    g = GridSpec.from_box([-2, -2], [2, 2], 2.0 ** -4)
    f = GridFunction.indicator(g, [0, 0], [1, 1])
    return lambda: maximal_function(f).values


def _tuples():
    g = GridSpec.from_box([-4], [5], 2.0 ** -7)
    f = GridFunction.indicator(g, [0], [1])
    k = make_homogeneous_model(1, 2)
    x = g.centers()[::4]
    return lambda: apply_functions(k, [f, f], x, TruncationPolicy()).values


def _hilbert_midpoint():
    g = GridSpec.from_box([-4], [5], 2.0 ** -8)
    f = GridFunction.indicator(g, [0], [1])
    k = make_tensor_hilbert(2)
    x = g.centers()[::8]
    return lambda: apply_functions(k, [f, f], x, route="tuples").values


def _atoms():
    g = GridSpec.from_box([-64], [64], 2.0 ** -8)
    d = AtomicMeasure([[0.0], [0.5]], [1.0, 0.5])
    k = make_homogeneous_model(1, 2)
    return lambda: apply_atoms(k, [d, d], g.centers()).values


def _lemma1():
    g = GridSpec.from_box([-64], [64], 2.0 ** -6)
    s = CoverSet.from_cells(cells_in_box(g, [-1], [1]), [0.0], 1.0)
    k = make_tensor_hilbert(1).scaled(math.pi)
    outer = doubled_union([[s]]).complement()
    return lambda: np.array([lemma1_sum([[s]], k, outer).total])


CASES = {
    "maximal 1d (4096 cells)": _maximal_1d,
    "maximal 2d (64x64)": _maximal_2d,
    "operator tuples, homogeneous m=2": _tuples,
    "operator tuples, tensor-Hilbert m=2": _hilbert_midpoint,
    "operator atoms, 32768 targets": _atoms,
    "Hormander sum, one interval": _lemma1,
}


def _time(fn, repeat):
    fn()
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, np.asarray(out, dtype=float)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--json", help="write results to this file")
    args = p.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1
    before = _accel.backend()
    rows = []
    try:
        for name, make in CASES.items():
            res = {}
            for be in ("numba", "numpy"):
                _accel.set_backend(be)
                res[be] = _time(make(), args.repeat)
            a, b = res["numba"][1], res["numpy"][1]
            scale = np.maximum(np.abs(b), 1e-300)
            diff = float(np.max(np.abs(a - b) / scale)) if a.size else 0.0
            rows.append({"case": name, "numba_s": res["numba"][0], "numpy_s": res["numpy"][0],
                         "speedup": res["numpy"][0] / res["numba"][0], "max_rel_diff": diff})
    finally:
        _accel.set_backend(before)
    w = max(len(r["case"]) for r in rows)
    print(f"{'case':<{w}}  {'numba [s]':>10}  {'numpy [s]':>10}  {'speedup':>8}  {'max rel diff':>12}")
    for r in rows:
        print(f"{r['case']:<{w}}  {r['numba_s']:>10.4f}  {r['numpy_s']:>10.4f}  "
              f"{r['speedup']:>8.1f}  {r['max_rel_diff']:>12.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
