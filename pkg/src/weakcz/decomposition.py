"""Constructions used by the two weak-type arguments.

``split`` produces the good/bad decomposition: the maximal-function level set
``G_i``, the parts ``g_i`` and ``b_i``, the Whitney pieces ``b_{i,j}`` with their
integrals ``a_{i,j}`` and the surrogate atoms at cube centers.
``build_ball_system`` produces the disjointified balls whose measures match
the atom weights, and ``sigma_inputs`` the interpolating argument lists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
import math
from typing import Sequence

import numpy as np

from .dyadic import DyadicCube, cube_center, whitney
from .grid import CellSet, GridFunction, GridMismatchError, GridSpec, restrict
from .maximal import maximal_function
from .operator import AtomicMeasure


class ResolutionError(ValueError):
    """Whitney cubes could not cover a level set at the grid scale."""


class BallRoomError(ValueError):
    """A ball needed for an atom does not fit in the extent box."""


@dataclass(frozen=True, eq=False)
class SlotSplit:
    """Good/bad data for one input ``f``.

    Pieces are the Whitney cubes (largest first, then by corner) followed by
    single-cell pieces for any remainder cells.  ``labels`` maps every cell
    to its piece index, or -1 outside ``G``.
    """

    f: GridFunction
    Mf: GridFunction
    G: CellSet
    g: GridFunction
    b: GridFunction
    cubes: tuple[DyadicCube, ...]
    remainder: CellSet
    labels: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)     # a_{i,j}
    masses: np.ndarray = field(repr=False)      # ||b_{i,j}||_1
    centers: np.ndarray = field(repr=False)
    volumes: np.ndarray = field(repr=False)
    mass_ratio: np.ndarray = field(repr=False)  # masses / ((17 sqrt n)^n t^{1/m} |Q|)

    @property
    def resolution_ok(self) -> bool:
        return self.remainder.is_empty()

    @property
    def num_pieces(self) -> int:
        return len(self.weights)

    def piece(self, j: int) -> GridFunction:
        return GridFunction(self.f.grid, np.where(self.labels == j, self.b.values, 0.0))

    def piece_cells(self, j: int) -> CellSet:
        return CellSet(self.f.grid, self.labels == j)

    def b_truncated(self, N: int | None) -> GridFunction:
        """``b^N``: the sum of the first ``N`` pieces."""
        if N is None:
            return self.b
        keep = (self.labels >= 0) & (self.labels < N)
        return GridFunction(self.f.grid, np.where(keep, self.b.values, 0.0))

    def nu(self, N: int | None = None) -> AtomicMeasure:
        """Surrogate measure ``sum_{j<N} a_j delta_{c_j}``."""
        N = self.num_pieces if N is None else min(N, self.num_pieces)
        return AtomicMeasure(self.centers[:N].reshape(N, self.f.grid.n), self.weights[:N])


@dataclass(frozen=True, eq=False)
class GoodBadSplit:
    slots: tuple[SlotSplit, ...]
    G: CellSet
    t: float
    m: int

    @property
    def resolution_ok(self) -> bool:
        return all(s.resolution_ok for s in self.slots)

    def pattern_inputs(self, pattern: Sequence[str], N: int | None = None) -> list[GridFunction]:
        """``h_i = g_i`` or ``b_i^N`` according to ``pattern``."""
        return [s.g if p == "g" else s.b_truncated(N) for s, p in zip(self.slots, pattern)]


MASS_FACTOR = 17.0


def _split_slot(f: GridFunction, Mf: GridFunction, t: float, m: int) -> SlotSplit:
    grid = f.grid
    n = grid.n
    thr = t ** (1.0 / m)
    G = CellSet(grid, Mf.values > thr)
    b = restrict(f, G)
    g = GridFunction(grid, np.where(G.mask, 0.0, f.values))
    labels = np.full(grid.shape, -1, dtype=np.int64)
    cubes: tuple[DyadicCube, ...] = ()
    remainder = CellSet.empty(grid)
    centers, volumes = [], []
    if not G.is_empty():
        wr = whitney(G)
        cubes = wr.cubes
        remainder = wr.remainder
        for j, q in enumerate(cubes):
            labels[q.cell_slices(grid)] = j
            centers.append(cube_center(q))
            volumes.append(q.volume)
        rest = np.argwhere(remainder.mask)
        for r, idx in enumerate(rest):
            labels[tuple(idx)] = len(cubes) + r
            centers.append((idx + np.asarray(grid.lo) + 0.5) * grid.h)
            volumes.append(grid.cell_volume)
    P = len(centers)
    lab = labels.ravel()
    inside = lab >= 0
    vals = b.values.ravel()[inside] * grid.cell_volume
    weights = np.bincount(lab[inside], weights=vals, minlength=P)[:P]
    masses = np.bincount(lab[inside], weights=np.abs(vals), minlength=P)[:P]
    volumes = np.asarray(volumes, dtype=float)
    centers = np.asarray(centers, dtype=float).reshape(P, n)
    bound = (MASS_FACTOR * math.sqrt(n)) ** n * thr * volumes
    ratio = masses / bound if P else np.zeros(0)
    labels.setflags(write=False)
    return SlotSplit(f, Mf, G, g, b, tuple(cubes), remainder, labels, weights, masses,
                     centers, volumes, ratio)


def split(fs: Sequence[GridFunction], t: float, *, maximal: Sequence[GridFunction] | None = None,
          strict: bool = False) -> GoodBadSplit:
    """Good/bad decomposition of each ``f_i`` at height ``t^{1/m}``, ``m = len(fs)``.

    Parameters
    ----------
    maximal : sequence of GridFunction, optional
        Precomputed ``M f_i``; the maximal function does not depend on ``t``,
        so ledgers pass it in once.
    strict : bool
        Raise :class:`ResolutionError` when a level set leaves Whitney
        remainder cells instead of carrying them as single-cell pieces.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    fs = list(fs)
    if not fs:
        raise ValueError("need at least one function")
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise GridMismatchError("inputs live on different grids")
    m = len(fs)
    if maximal is None:
        maximal = [maximal_function(f) for f in fs]
    slots = tuple(_split_slot(f, M, t, m) for f, M in zip(fs, maximal))
    if strict:
        for i, s in enumerate(slots):
            if not s.resolution_ok:
                raise ResolutionError(
                    f"G_{i + 1} has {s.remainder.count} cells below Whitney resolution; refine h")
    Gmask = np.zeros(grid.shape, dtype=bool)
    for s in slots:
        Gmask |= s.G.mask
    return GoodBadSplit(slots, CellSet(grid, Gmask), float(t), m)


def enumerate_splittings(m: int) -> list[tuple[str, ...]]:
    """All ``2^m`` good/bad patterns, lexicographic with ``"g"`` before ``"b"``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return list(product("gb", repeat=m))


@dataclass(frozen=True, eq=False)
class BallSlot:
    """Disjointified balls for one atomic measure, in input order."""

    grid: GridSpec
    centers: np.ndarray
    weights: np.ndarray
    radii: np.ndarray
    targets: np.ndarray
    labels: np.ndarray = field(repr=False)
    star_labels: np.ndarray = field(repr=False)
    star_clipped: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def measures(self) -> np.ndarray:
        counts = np.bincount(self.labels[self.labels >= 0], minlength=self.size)
        return counts[:self.size] * self.grid.cell_volume

    @property
    def star_measures(self) -> np.ndarray:
        counts = np.bincount(self.star_labels[self.star_labels >= 0], minlength=self.size)
        return counts[:self.size] * self.grid.cell_volume

    @property
    def relative_errors(self) -> np.ndarray:
        return np.abs(self.measures - self.targets) / self.targets

    def piece(self, j: int) -> CellSet:
        return CellSet(self.grid, self.labels == j)

    def star_piece(self, j: int) -> CellSet:
        return CellSet(self.grid, self.star_labels == j)

    @property
    def union(self) -> CellSet:
        return CellSet(self.grid, self.labels >= 0)

    @property
    def star_union(self) -> CellSet:
        return CellSet(self.grid, self.star_labels >= 0)


@dataclass(frozen=True, eq=False)
class BallSystem:
    grid: GridSpec
    t: float
    m: int
    slots: tuple[BallSlot, ...]

    @property
    def E_star(self) -> CellSet:
        mask = np.zeros(self.grid.shape, dtype=bool)
        for s in self.slots:
            mask |= s.star_labels >= 0
        return CellSet(self.grid, mask)

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "m": self.m,
            "h": self.grid.h,
            "slots": [{
                "order": list(range(s.size)),
                "centers": s.centers.tolist(),
                "weights": s.weights.tolist(),
                "radii": s.radii.tolist(),
                "target_measures": s.targets.tolist(),
                "measures": s.measures.tolist(),
                "star_measures": s.star_measures.tolist(),
                "star_clipped": [bool(v) for v in s.star_clipped],
            } for s in self.slots],
            "E_star_measure": self.E_star.count * self.grid.cell_volume,
        }


def _pick_radius(d_sorted: np.ndarray, K: int, h: float) -> float:
    """Radius whose open ball holds a count of the sorted distances closest to ``K``."""
    uniq, counts = np.unique(d_sorted, return_counts=True)
    cum = np.concatenate(([0], np.cumsum(counts)))         # cum[k] = #(d < uniq[k])
    k = int(np.argmin(np.abs(cum - K)))                     # first minimizer = smaller count
    if k == 0:
        return 0.5 * uniq[0]
    hi = uniq[k] if k < len(uniq) else uniq[-1] + h
    return 0.5 * (uniq[k - 1] + hi)


def _build_slot(nu: AtomicMeasure, t: float, m: int, grid: GridSpec, slot: int) -> BallSlot:
    centers = grid.centers()
    lab = np.full(grid.size, -1, dtype=np.int64)
    star = np.full(grid.size, -1, dtype=np.int64)
    N = len(nu)
    radii = np.zeros(N)
    targets = nu.weights * t ** (-1.0 / m)
    clipped = np.zeros(N, dtype=bool)
    lower, upper = grid.lower, grid.upper
    for j in range(N):
        x = nu.points[j]
        if not grid.contains_point(x):
            raise BallRoomError(f"slot {slot + 1} atom {j} at {x.tolist()} lies outside the box")
        free = np.nonzero(lab < 0)[0]
        d = np.linalg.norm(centers[free] - x, axis=1)
        K = int(round(targets[j] / grid.cell_volume))
        if K > len(free):
            raise BallRoomError(f"slot {slot + 1} atom {j} at {x.tolist()} needs measure "
                                f"{targets[j]:.6g}, more than the free room in the box")
        r = _pick_radius(np.sort(d), K, grid.h)
        room = float(min((x - lower).min(), (upper - x).min()))
        if r > room:
            raise BallRoomError(f"slot {slot + 1} atom {j} at {x.tolist()}: ball of radius "
                                f"{r:.6g} leaves the box; enlarge the extent")
        radii[j] = r
        lab[free[d < r]] = j
        clipped[j] = 2 * r > room
        d_all = np.linalg.norm(centers - x, axis=1)
        star[(d_all < 2 * r) & (star < 0)] = j
    lab = lab.reshape(grid.shape)
    star = star.reshape(grid.shape)
    lab.setflags(write=False)
    star.setflags(write=False)
    return BallSlot(grid, nu.points.copy(), nu.weights.copy(), radii, targets, lab, star, clipped)


def build_ball_system(nus: Sequence[AtomicMeasure], t: float, grid: GridSpec,
                      m: int | None = None) -> BallSystem:
    """Disjointified balls with ``|E_{i,j}| = a_{i,j} t^{-1/m}``, atoms in input order.

    A piece is the set of free cells (not yet in an earlier piece of the same
    slot) whose centers lie in the open ball ``B(x_{i,j}, r)``.  Free cell
    counts change only at the sorted center distances, so the radius is found
    by a search over those breakpoints; it is the midpoint of the gap whose
    count is closest to the target.  Doubled pieces use radius ``2r``.

    ``m`` defaults to the number of measures.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    m = len(nus) if m is None else int(m)
    if m < len(nus):
        raise ValueError("m must be at least the number of measures")
    for i, nu in enumerate(nus):
        if len(nu) and np.any(nu.weights <= 0):
            j = int(np.argmax(nu.weights <= 0))
            raise ValueError(f"slot {i + 1} atom {j} has nonpositive weight "
                             f"{nu.weights[j]!r}; split by sign first")
        if len(nu) and nu.n != grid.n:
            raise ValueError("atom dimension does not match the grid")
    slots = tuple(_build_slot(nu, float(t), m, grid, i) for i, nu in enumerate(nus))
    return BallSystem(grid, float(t), m, slots)


def sigma_inputs(system: BallSystem, nus: Sequence[AtomicMeasure], fs: Sequence[GridFunction],
                 k: int) -> list:
    """Arguments of ``sigma_k``: scaled indicators of ``E_1..E_k``, then the remaining inputs."""
    l = len(nus)
    if not 0 <= k <= l:
        raise ValueError("k must lie in 0..l")
    scale = system.t ** (1.0 / system.m)
    lead = [GridFunction(system.grid, scale * system.slots[i].union.mask) for i in range(k)]
    return lead + list(nus[k:]) + list(fs)
