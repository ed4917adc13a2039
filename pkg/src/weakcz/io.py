"""Serialization of grid functions, cube lists, distribution functions and operator values.

Floats are written with ``repr`` (shortest round-trip form), so the JSON and
text forms of a grid function read back bit for bit.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence

import numpy as np

from .dyadic import DyadicCube
from .grid import GridFunction, GridSpec


def grid_to_json(grid: GridSpec) -> dict:
    return {"n": grid.n, "h": grid.h, "lo": grid.lower.tolist(), "hi": grid.upper.tolist()}


def grid_from_json(d: dict) -> GridSpec:
    g = GridSpec.from_box(d["lo"], d["hi"], float(d["h"]))
    if g.n != int(d["n"]):
        raise ValueError("dimension does not match the extent corners")
    return g


def function_to_json(F: GridFunction) -> dict:
    d = grid_to_json(F.grid)
    d["values"] = [float(v) for v in F.values.ravel()]
    return d


def function_from_json(d: dict) -> GridFunction:
    g = grid_from_json(d)
    vals = np.asarray(d["values"], dtype=float)
    if vals.size != g.size:
        raise ValueError(f"expected {g.size} values, got {vals.size}")
    return GridFunction(g, vals.reshape(g.shape))


def dumps_function(F: GridFunction) -> str:
    return json.dumps(function_to_json(F), allow_nan=False) + "\n"


def loads_function(text: str) -> GridFunction:
    return function_from_json(json.loads(text))


def function_to_text(F: GridFunction) -> str:
    """Header lines ``n``, ``h``, ``lo``, ``hi``, then one value per line (row-major)."""
    g = F.grid
    lines = [f"n {g.n}", f"h {g.h!r}",
             "lo " + " ".join(repr(float(v)) for v in g.lower),
             "hi " + " ".join(repr(float(v)) for v in g.upper)]
    lines += [repr(float(v)) for v in F.values.ravel()]
    return "\n".join(lines) + "\n"


def function_from_text(text: str) -> GridFunction:
    rows = [r.strip() for r in text.splitlines() if r.strip()]
    head = {}
    for r in rows[:4]:
        key, _, rest = r.partition(" ")
        head[key] = rest.split()
    if set(head) != {"n", "h", "lo", "hi"}:
        raise ValueError("grid function text needs n, h, lo and hi header lines")
    d = {"n": int(head["n"][0]), "h": float(head["h"][0]),
         "lo": [float(v) for v in head["lo"]], "hi": [float(v) for v in head["hi"]],
         "values": [float(v) for v in rows[4:]]}
    return function_from_json(d)


def cubes_to_json(cubes: Iterable[DyadicCube]) -> list:
    return [q.to_json() for q in cubes]


def cubes_from_json(items: Sequence[dict]) -> list[DyadicCube]:
    return [DyadicCube.from_json(d) for d in items]


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def distribution_csv(pairs: Iterable[tuple[float, float]]) -> str:
    return _csv(["t", "measure"], pairs)


def operator_csv(targets: np.ndarray, values, tail=None) -> str:
    """Rows ``x_1..x_n, value, tail_bound``."""
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    vals = np.asarray(values, dtype=float)
    tail = np.full(len(vals), np.nan) if tail is None else np.asarray(tail, dtype=float)
    head = [f"x{i + 1}" for i in range(x.shape[1])] + ["value", "tail_bound"]
    return _csv(head, ([*row, v, tb] for row, v, tb in zip(x, vals, tail)))
