"""Dyadic cubes and the Whitney decomposition with constants (2, 8).

A cube at level ``k`` with integer corner ``z`` is ``prod [z_i 2^-k, (z_i+1) 2^-k)``.
When the grid width is ``h = 2^-j`` every cell is itself the level-``j`` cube
with the same integer index, which is what makes cube unions exact.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .grid import CellSet, GridSpec, cell_distance_sq, measure


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Cube of side ``2**-k`` with lower corner ``z * 2**-k``."""

    k: int
    z: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "z", tuple(int(v) for v in self.z))

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def side(self) -> float:
        return math.ldexp(1.0, -self.k)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.z, dtype=float) * self.side

    @property
    def upper(self) -> np.ndarray:
        return (np.asarray(self.z, dtype=float) + 1.0) * self.side

    @property
    def volume(self) -> float:
        return self.side ** self.n

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.k - 1, tuple(v >> 1 for v in self.z))

    def children(self) -> list["DyadicCube"]:
        return [DyadicCube(self.k + 1, tuple(2 * v + e for v, e in zip(self.z, c)))
                for c in np.ndindex(*(2,) * self.n)]

    def contains(self, other: "DyadicCube") -> bool:
        if other.k < self.k:
            return False
        shift = other.k - self.k
        return all((b >> shift) == a for a, b in zip(self.z, other.z))

    def cell_slices(self, grid: GridSpec) -> tuple[slice, ...]:
        """Array slices of ``grid`` covered by this cube (grid width must be finer)."""
        j = grid.dyadic_exponent()
        if j < self.k:
            raise ValueError("cube is finer than the grid")
        r = 1 << (j - self.k)
        return tuple(slice(v * r - a, (v + 1) * r - a) for v, a in zip(self.z, grid.lo))

    def cells(self, grid: GridSpec) -> CellSet:
        mask = np.zeros(grid.shape, dtype=bool)
        mask[self.cell_slices(grid)] = True
        return CellSet(grid, mask)

    def to_json(self) -> dict:
        return {"k": self.k, "z": list(self.z)}

    @classmethod
    def from_json(cls, d: dict) -> "DyadicCube":
        return cls(d["k"], tuple(d["z"]))


def cube_center(q: DyadicCube) -> np.ndarray:
    return (np.asarray(q.z, dtype=float) + 0.5) * q.side


def cube_diam(q: DyadicCube) -> float:
    return math.sqrt(q.n) * q.side


@dataclass(frozen=True)
class WhitneyResult:
    """Whitney cubes (largest first, then by corner) and the cells no cube could cover."""

    cubes: tuple[DyadicCube, ...]
    remainder: CellSet

    @property
    def resolution_ok(self) -> bool:
        return self.remainder.is_empty()

    def __iter__(self):
        return iter(self.cubes)

    def __len__(self):
        return len(self.cubes)


def _block_reduce(a: np.ndarray, op) -> np.ndarray:
    """Reduce over 2x...x2 blocks; every axis length must be even."""
    n = a.ndim
    shape = []
    for d in a.shape:
        shape += [d // 2, 2]
    return op(a.reshape(shape), axis=tuple(range(1, 2 * n, 2)))


def _upsample(a: np.ndarray) -> np.ndarray:
    for ax in range(a.ndim):
        a = np.repeat(a, 2, axis=ax)
    return a


def whitney(s: CellSet) -> WhitneyResult:
    """Maximal dyadic cubes ``Q`` inside ``s`` with ``dist(Q, complement) >= 2 diam(Q)``.

    Containment and distance are tracked on a pyramid of block reductions, so
    the cost is linear in the number of cells.  The good property is inherited
    by children, hence a cube is emitted exactly when it is good and its parent
    is not.  Cells not covered at cell scale form the remainder.
    """
    if s.is_empty():
        raise ValueError("Whitney decomposition of an empty set")
    grid = s.grid
    j = grid.dyadic_exponent()
    n = grid.n
    width = max(grid.shape)
    levels = max(1, int(math.ceil(math.log2(width))) + 1)
    block = 1 << levels
    lo = np.asarray(grid.lo)
    alo = (lo // block) * block
    ahi = -((-np.asarray(grid.hi)) // block) * block
    off = tuple(slice(a - b, a - b + d) for a, b, d in zip(lo, alo, grid.shape))

    inside = np.zeros(tuple(ahi - alo), dtype=bool)
    inside[off] = s.mask
    dist = np.zeros(inside.shape, dtype=np.int64)
    dist[off] = cell_distance_sq(s)

    good_levels = []
    for L in range(levels + 1):
        side2 = 1 << (2 * L)
        good_levels.append(inside & (dist >= 4 * n * side2))
        if L < levels:
            inside = _block_reduce(inside, np.all)
            dist = _block_reduce(dist, np.min)

    cubes: list[DyadicCube] = []
    for L in range(levels, -1, -1):
        good = good_levels[L]
        if L < levels:
            good = good & ~_upsample(good_levels[L + 1])
        if not good.any():
            continue
        base = alo >> L
        for idx in np.argwhere(good):
            cubes.append(DyadicCube(j - L, tuple(int(v) for v in idx + base)))
    covered = good_levels[0][off]
    remainder = CellSet(grid, s.mask & ~covered)
    return WhitneyResult(tuple(cubes), remainder)


def whitney_check(s: CellSet, cubes) -> dict:
    """Independent check of the Whitney properties of ``cubes`` against ``s``.

    Returns the extreme distance-to-diameter ratios, the covered measure, and
    whether the cubes are disjoint and inside ``s``.
    """
    from .grid import complement_frontier, distance_to_complement

    grid = s.grid
    frontier = complement_frontier(s)
    count = np.zeros(grid.shape, dtype=np.int64)
    ratios = []
    for q in cubes:
        count[q.cell_slices(grid)] += 1
        d = distance_to_complement(s, q.lower, q.upper, frontier)
        ratios.append(d / cube_diam(q))
    return {
        "min_ratio": min(ratios) if ratios else math.inf,
        "max_ratio": max(ratios) if ratios else 0.0,
        "disjoint": bool(count.max(initial=0) <= 1),
        "inside": bool(not np.any((count > 0) & ~s.mask)),
        "covered_measure": float(sum(q.volume for q in cubes)),
        "set_measure": measure(s),
    }
