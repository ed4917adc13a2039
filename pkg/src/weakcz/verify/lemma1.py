"""Estimator for the geometric Hormander sum.

For collections of sets ``S_{i,j}`` with centers ``c_{i,j}`` the quantity is

    sum_{j_1..j_l} w(j) * int_{outer} sup_{y in prod S} |K(x, y) - K(x, c)| dx

with ``w(j) = prod |S_{i,j_i}|`` by default (``sup="global"`` moves the sup
outside the integral).  The sup runs over a finite set of probe points per
set, so the result is a lower estimate of the exact sum.
With ``l = m - 1`` (one dimension only) the remaining kernel slot is
integrated over the grid, inside the sup.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
import math
from typing import Sequence

import numpy as np

from .. import _accel
from .._accel import njit
from ..dyadic import DyadicCube, cube_center, cube_diam
from ..grid import CellSet, measure
from ..kernel import CODE_USER, KernelSpec, eval_builtin


@dataclass(frozen=True, eq=False)
class CoverSet:
    """A set ``S`` (cell union) with a center, a covering radius and probe points."""

    cells: CellSet
    center: np.ndarray
    radius: float
    probes: np.ndarray

    @property
    def measure(self) -> float:
        return measure(self.cells)

    @classmethod
    def from_cube(cls, q: DyadicCube, grid) -> "CoverSet":
        """Probes: the ``{0, 1/2, 1}^n`` lattice (corners, face midpoints, center)."""
        lat = np.array(list(product((0.0, 0.5, 1.0), repeat=q.n)))
        probes = q.lower + lat * q.side
        return cls(q.cells(grid), cube_center(q), 0.5 * cube_diam(q), probes)

    @classmethod
    def from_cells(cls, cells: CellSet, center, radius: float | None = None) -> "CoverSet":
        """Probes: the center and the cell vertices extreme along each lattice direction."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        grid = cells.grid
        idx = cells.indices()
        if idx.size == 0:
            raise ValueError("cover set has no cells")
        corners = np.array(list(product((0, 1), repeat=grid.n)))
        verts = ((idx[:, None, :] + corners[None, :, :]) * grid.h).reshape(-1, grid.n)
        verts = np.unique(verts, axis=0)
        probes = [center]
        for d in product((-1, 0, 1), repeat=grid.n):
            if not any(d):
                continue
            probes.append(verts[int(np.argmax(verts @ np.asarray(d, dtype=float)))])
        probes = np.unique(np.asarray(probes), axis=0)
        if radius is None:
            radius = float(np.max(np.linalg.norm(verts - center, axis=1)))
        return cls(cells, center, float(radius), probes)


def doubled_union(collections: Sequence[Sequence[CoverSet]]) -> CellSet:
    """Cells whose centers lie within twice the radius of some set's center."""
    grid = collections[0][0].cells.grid
    c = grid.centers()
    mask = np.zeros(grid.size, dtype=bool)
    for coll in collections:
        for s in coll:
            mask |= np.linalg.norm(c - s.center, axis=1) < 2 * s.radius
    return CellSet(grid, mask.reshape(grid.shape))


@njit(error_model="numpy")
def _diff_sum_nb(code, params, X, P, C, pointwise, skip_y, y, eps):
    # pointwise: sum_x max_p |K(x,P_p) - K(x,C)|; otherwise max_p sum_x |...|.
    # With skip_y, x within eps of y (the free slot, last in P and C) is left out.
    nP = P.shape[0]
    dead = np.zeros(nP, dtype=np.bool_)
    sums = np.zeros(nP)
    total = 0.0
    for i in range(X.shape[0]):
        if skip_y and abs(X[i, 0] - y) < eps:
            continue
        base = eval_builtin(code, params, X[i], C)
        best = 0.0
        for p in range(nP):
            if dead[p]:
                continue
            v = abs(eval_builtin(code, params, X[i], P[p]) - base)
            if not np.isfinite(v):
                dead[p] = True
                continue
            sums[p] += v
            if v > best:
                best = v
        total += best
    nskip = 0
    gmax = 0.0
    for p in range(nP):
        if dead[p]:
            nskip += 1
        elif sums[p] > gmax:
            gmax = sums[p]
    return (total if pointwise else gmax), nskip


def _diff_sum_np(k, X, P, C, pointwise, skip_y, y, eps):
    if skip_y:
        X = X[np.abs(X[:, 0] - y) >= eps]
    if len(X) == 0:
        return 0.0, 0
    base = k.evaluate(X, np.broadcast_to(C, (len(X),) + C.shape))
    diffs = np.stack([np.abs(k.evaluate(X, np.broadcast_to(p, (len(X),) + p.shape)) - base)
                      for p in P])                           # (nP, nX)
    dead = ~np.all(np.isfinite(diffs), axis=1)
    live = diffs[~dead]
    if live.shape[0] == 0:
        return 0.0, int(dead.sum())
    if pointwise:
        return float(live.max(axis=0).sum()), int(dead.sum())
    return float(live.sum(axis=1).max()), int(dead.sum())


def _diff(k, X, P, C, pointwise, skip_y, y, eps, use_nb):
    if use_nb:
        return _diff_sum_nb(k.code, k.param_array, X, P, C, pointwise, skip_y, y, eps)
    return _diff_sum_np(k, X, P, C, pointwise, skip_y, y, eps)


@dataclass(frozen=True)
class Lemma1Result:
    """Sum, the ratio ``sum / sum_i |Omega_i|`` and probe bookkeeping.

    ``tuple_values`` maps each index tuple to its unweighted integral, so a
    caller can reweight without recomputing.
    """

    total: float
    ratio: float
    omega_measure: float
    tuples: int
    probes_skipped: int
    probes_total: int
    tuple_values: dict = field(default_factory=dict, repr=False, compare=False)


def lemma1_sum(collections: Sequence[Sequence[CoverSet]], k: KernelSpec, outer: CellSet, *,
               weights: Sequence[Sequence[float]] | None = None,
               free_domain: CellSet | None = None, eps_cells: float = 2.0,
               sup: str = "pointwise") -> Lemma1Result:
    """Geometric Hormander sum over all tuples of sets, one set per collection.

    Parameters
    ----------
    collections : l sequences of CoverSet
        ``l = m``, or ``l = m - 1`` when ``n = 1``; collection ``i`` fills
        kernel slot ``i``, the free slot (if any) is the last.
    outer : CellSet
        Integration domain for ``x`` (the box minus the doubled sets).
    weights : optional per-collection weight arrays
        Replace ``|S_{i,j}|``; tuples with zero weight are skipped.
    free_domain : CellSet, optional
        Domain of the free slot (default: the whole grid); points within
        ``eps_cells * h`` of ``x`` are left out.
    sup : {"pointwise", "global"}
        ``"global"`` takes the sup over probe tuples of the x-integral.
        ``"pointwise"`` (default) integrates the pointwise sup; it is never
        smaller, so bounds built on it remain valid.
    """
    if sup not in ("pointwise", "global"):
        raise ValueError("sup must be 'pointwise' or 'global'")
    pointwise = sup == "pointwise"
    l = len(collections)
    if l == 0 or any(len(c) == 0 for c in collections):
        raise ValueError("collections must be nonempty")
    if l == k.m:
        free = False
    elif l == k.m - 1 and k.n == 1:
        free = True
    else:
        raise ValueError("supported configurations are l = m, or l = m - 1 with n = 1")
    grid = outer.grid
    X = np.ascontiguousarray(outer.centers())
    hx = grid.cell_volume
    if weights is None:
        weights = [[s.measure for s in coll] for coll in collections]
    weights = [np.asarray(w, dtype=float) for w in weights]
    omega = 0.0
    for coll in collections:
        mask = np.zeros(grid.shape, dtype=bool)
        for s in coll:
            mask |= s.cells.mask
        omega += mask.sum() * hx
    if free:
        dom = free_domain if free_domain is not None else CellSet.full(grid)
        Y = np.ascontiguousarray(dom.centers())
        eps = eps_cells * grid.h
    use_nb = _accel.USE_NUMBA and k.code != CODE_USER
    total = 0.0
    skipped = 0
    probes_total = 0
    count = 0
    values = {}
    for js in product(*[range(len(c)) for c in collections]):
        w = 1.0
        for i, j in enumerate(js):
            w *= weights[i][j]
        if w == 0.0:
            continue
        sets = [collections[i][j] for i, j in enumerate(js)]
        P = np.ascontiguousarray(
            np.array([np.stack(p) for p in product(*[s.probes for s in sets])]), dtype=float)
        C = np.ascontiguousarray(np.stack([s.center for s in sets]), dtype=float)
        if free:
            val, sk = 0.0, 0
            for y in Y:
                Py = np.ascontiguousarray(np.concatenate(
                    [P, np.broadcast_to(y, (len(P), 1, 1))], axis=1))
                Cy = np.ascontiguousarray(np.vstack([C, y[None, :]]))
                v, s_ = _diff(k, X, Py, Cy, pointwise, True, float(y[0]), eps, use_nb)
                val += v * hx * hx
                sk += s_
            probes_total += len(P) * len(Y)
        else:
            val, sk = _diff(k, X, P, C, pointwise, False, 0.0, 0.0, use_nb)
            val *= hx
            probes_total += len(P)
            if sk == len(P) and len(X):
                raise ValueError(f"every probe tuple for sets {js} hits a kernel singularity")
        skipped += int(sk)
        values[js] = float(val)
        total += abs(w) * val
        count += 1
    ratio = total / omega if omega > 0 else math.nan
    return Lemma1Result(float(total), float(ratio), float(omega), count, skipped, probes_total,
                        values)


def sup_inf_ratio(collections: Sequence[Sequence[CoverSet]], outer: CellSet) -> float:
    """Largest ``sum(|x-c_i| + r_i) / sum(|x-c_i| - r_i)`` over tuples and outer cells.

    Farthest and nearest points of a ball ``B(c, r)`` sit at distances
    ``|x - c| + r`` and ``|x - c| - r``; outside the doubled balls this ratio
    is at most 3.
    """
    X = outer.centers()
    worst = 0.0
    for sets in product(*collections):
        d = np.stack([np.linalg.norm(X - s.center, axis=1) for s in sets], axis=1)
        r = np.array([s.radius for s in sets])
        num = (d + r).sum(axis=1)
        den = (d - r).sum(axis=1)
        if np.any(den <= 0):
            return math.inf
        worst = max(worst, float(np.max(num / den)))
    return worst
