"""Distribution functions and weak-L^p quasinorms of grid functions."""
from __future__ import annotations

import numpy as np

from ..grid import GridFunction

DEFAULT_MIN_CELLS = 64


def distribution_function(F: GridFunction, t_grid) -> list[tuple[float, float]]:
    """``(t, |{|F| > t}|)`` for each ``t`` of a strictly increasing positive grid."""
    t = np.asarray(t_grid, dtype=float).reshape(-1)
    if t.size and (np.any(t <= 0) or np.any(np.diff(t) <= 0)):
        raise ValueError("t-grid must be positive and strictly increasing")
    a = np.sort(np.abs(F.values).ravel())
    counts = a.size - np.searchsorted(a, t, side="right")
    return [(float(tt), float(c) * F.grid.cell_volume) for tt, c in zip(t, counts)]


def log_t_grid(F: GridFunction, count: int = 64) -> np.ndarray:
    """``count`` log-uniform levels from the smallest positive ``|F|`` to ``max |F|``."""
    a = np.abs(F.values)
    pos = a[a > 0]
    if pos.size == 0:
        return np.zeros(0)
    lo, hi = float(pos.min()), float(pos.max())
    if lo == hi or count == 1:
        return np.array([hi])
    return np.geomspace(lo, hi, count)


def _levels(F: GridFunction):
    """Distinct values ``v`` of ``|F|`` (descending) with the cell count of ``{|F| >= v}``."""
    v = np.sort(np.abs(F.values).ravel())[::-1]
    v = v[v > 0]
    if v.size == 0:
        return v, np.zeros(0, dtype=np.int64)
    last = np.r_[v[1:] != v[:-1], True]
    counts = np.arange(1, v.size + 1)
    return v[last], counts[last]


def weak_quasinorm(F: GridFunction, p: float, t_grid=None, *,
                   min_cells: int | None = DEFAULT_MIN_CELLS) -> float:
    """``sup_t t |{|F| > t}|^{1/p}``.

    Without a t-grid the supremum is exact over all ``t > 0``: between two
    consecutive values of ``|F|`` the level set is constant, so the sup is
    ``max_v v |{|F| >= v}|^{1/p}``.  With a grid the sup is over its points.

    Level sets made of fewer than ``min_cells`` cells are ignored, because a
    singular peak sampled at a few cell centers overstates its own measure
    by a factor that does not shrink with ``h``.  When no level is that well
    resolved (or ``min_cells`` is None) every level counts.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    vol = F.grid.cell_volume
    if t_grid is None:
        v, c = _levels(F)
        if v.size == 0:
            return 0.0
    else:
        dist = distribution_function(F, t_grid)
        if not dist:
            return 0.0
        v = np.array([d[0] for d in dist])
        c = np.rint(np.array([d[1] for d in dist]) / vol).astype(np.int64)
    vals = v * (c * vol) ** (1.0 / p)
    if min_cells:
        ok = c >= min_cells
        if ok.any():
            vals = vals[ok]
    return float(vals.max()) if vals.size else 0.0
