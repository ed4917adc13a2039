"""Uniform-grid functions and cell sets on R^n.

Cell ``z`` (an integer vector) occupies ``prod [z_i h, (z_i + 1) h)`` and its
center is ``(z + 1/2) h``.  Functions are piecewise constant on cells and sets
are unions of cells, so measures and L^1 norms of cell-aligned data are exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage


class GridMismatchError(ValueError):
    """Two objects that must share a grid do not."""


@dataclass(frozen=True)
class GridSpec:
    """Dimension, cell width and the integer extent ``lo <= z < hi``."""

    n: int
    h: float
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError("cell width must be positive")
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        if len(lo) != self.n or len(hi) != self.n:
            raise ValueError("extent corners must have one entry per axis")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("extent box is empty")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_box(cls, lower: Sequence[float], upper: Sequence[float], h: float) -> "GridSpec":
        """Grid covering the physical box ``[lower, upper)``; corners must sit on cell edges."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        lo = np.rint(lower / h)
        hi = np.rint(upper / h)
        if not (np.allclose(lo * h, lower, rtol=0, atol=1e-12 * h)
                and np.allclose(hi * h, upper, rtol=0, atol=1e-12 * h)):
            raise ValueError("box corners are not multiples of h")
        return cls(len(lower), h, tuple(lo.astype(int)), tuple(hi.astype(int)))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float) * self.h

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float) * self.h

    def axes(self) -> list[np.ndarray]:
        """Cell-center coordinates along each axis."""
        return [(np.arange(a, b) + 0.5) * self.h for a, b in zip(self.lo, self.hi)]

    def centers(self) -> np.ndarray:
        """All cell centers, row-major, shape ``(size, n)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def center_arrays(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def index_of(self, z: Sequence[int]) -> tuple[int, ...]:
        """Array position of integer cell ``z``."""
        return tuple(int(v) - a for v, a in zip(z, self.lo))

    def cell_of(self, point: Sequence[float]) -> tuple[int, ...]:
        return tuple(int(np.floor(p / self.h)) for p in np.atleast_1d(point))

    def contains_point(self, point: Sequence[float]) -> bool:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        return bool(np.all(p >= self.lower) and np.all(p < self.upper))

    def dyadic_exponent(self) -> int:
        """``j`` with ``h == 2**-j``; raises if ``h`` is not dyadic."""
        mant, exp = np.frexp(self.h)
        if mant != 0.5:
            raise ValueError(f"cell width {self.h!r} is not a power of two")
        return int(1 - exp)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape))

    def _check(self, other: "GridSpec") -> None:
        if other != self:
            raise GridMismatchError("objects live on different grids")


class GridFunction:
    """Piecewise-constant function, one value per cell of ``grid``."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values):
        v = np.array(values, dtype=float)
        if v.shape != grid.shape:
            v = v.reshape(grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        self.grid = grid
        self.values = v

    @classmethod
    def from_callable(cls, grid: GridSpec, func) -> "GridFunction":
        """Sample ``func`` at cell centers; ``func`` takes n coordinate arrays."""
        return cls(grid, func(*grid.center_arrays()))

    @classmethod
    def indicator(cls, grid: GridSpec, lower, upper, value: float = 1.0) -> "GridFunction":
        return cls(grid, value * cells_in_box(grid, lower, upper).mask)

    def __repr__(self):
        return f"GridFunction(n={self.grid.n}, h={self.grid.h}, shape={self.values.shape})"

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self.grid._check(other.grid)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self.grid._check(other.grid)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def abs(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values))

    def support(self) -> "CellSet":
        return CellSet(self.grid, self.values != 0)

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def equals(self, other: "GridFunction") -> bool:
        return self.grid == other.grid and np.array_equal(self.values, other.values)


class CellSet:
    """A finite union of grid cells, stored as a boolean mask over the extent."""

    __slots__ = ("grid", "mask")

    def __init__(self, grid: GridSpec, mask):
        mk = np.array(mask, dtype=bool)
        if mk.shape != grid.shape:
            mk = mk.reshape(grid.shape)
        mk.setflags(write=False)
        self.grid = grid
        self.mask = mk

    @classmethod
    def empty(cls, grid: GridSpec) -> "CellSet":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: GridSpec) -> "CellSet":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def from_indices(cls, grid: GridSpec, cells: Iterable[Sequence[int]]) -> "CellSet":
        mask = np.zeros(grid.shape, dtype=bool)
        for z in cells:
            idx = grid.index_of(np.atleast_1d(z))
            if any(i < 0 or i >= s for i, s in zip(idx, grid.shape)):
                raise ValueError(f"cell {tuple(z)} lies outside the extent box")
            mask[idx] = True
        return cls(grid, mask)

    def __repr__(self):
        return f"CellSet(n={self.grid.n}, h={self.grid.h}, cells={self.count})"

    def __len__(self):
        return self.count

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def is_empty(self) -> bool:
        return not self.mask.any()

    def indices(self) -> np.ndarray:
        """Integer cell coordinates of the members, shape ``(count, n)``, row-major order."""
        return np.argwhere(self.mask) + np.asarray(self.grid.lo)

    def centers(self) -> np.ndarray:
        return (self.indices() + 0.5) * self.grid.h

    def complement(self) -> "CellSet":
        return CellSet(self.grid, ~self.mask)

    def __or__(self, other: "CellSet") -> "CellSet":
        self.grid._check(other.grid)
        return CellSet(self.grid, self.mask | other.mask)

    def __and__(self, other: "CellSet") -> "CellSet":
        self.grid._check(other.grid)
        return CellSet(self.grid, self.mask & other.mask)

    def __sub__(self, other: "CellSet") -> "CellSet":
        self.grid._check(other.grid)
        return CellSet(self.grid, self.mask & ~other.mask)

    def issubset(self, other: "CellSet") -> bool:
        self.grid._check(other.grid)
        return not np.any(self.mask & ~other.mask)

    def equals(self, other: "CellSet") -> bool:
        return self.grid == other.grid and np.array_equal(self.mask, other.mask)


def cells_in_box(grid: GridSpec, lower, upper) -> CellSet:
    """Cells whose center lies in the half-open box ``[lower, upper)``."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    mask = np.ones(grid.shape, dtype=bool)
    for ax, c in enumerate(grid.axes()):
        sel = (c >= lower[ax]) & (c < upper[ax])
        shape = [1] * grid.n
        shape[ax] = -1
        mask &= sel.reshape(shape)
    return CellSet(grid, mask)


def measure(s: CellSet) -> float:
    """Lebesgue measure of a cell union: number of cells times ``h**n``."""
    return s.count * s.grid.cell_volume


def superlevel_set(F: GridFunction, t: float) -> CellSet:
    """Cells where ``|F| > t`` (strict)."""
    if not t > 0:
        raise ValueError("threshold must be positive")
    return CellSet(F.grid, np.abs(F.values) > t)


def l1_norm(F: GridFunction) -> float:
    return float(np.abs(F.values).sum() * F.grid.cell_volume)


def linf_norm(F: GridFunction) -> float:
    return float(np.abs(F.values).max()) if F.values.size else 0.0


def l2_norm(F: GridFunction) -> float:
    return float(np.sqrt(np.square(F.values).sum() * F.grid.cell_volume))


def restrict(F: GridFunction, s: CellSet) -> GridFunction:
    """``F`` on ``s``, zero elsewhere."""
    F.grid._check(s.grid)
    return GridFunction(F.grid, np.where(s.mask, F.values, 0.0))


def complement_frontier(s: CellSet) -> np.ndarray:
    """Integer indices of complement cells touching ``s`` (faces or corners)."""
    grown = ndimage.binary_dilation(
        np.pad(s.mask, 1), structure=np.ones((3,) * s.grid.n, dtype=bool))
    padded = np.pad(s.mask, 1)
    frontier = grown & ~padded
    # padded coordinates are shifted by one
    return np.argwhere(frontier) - 1 + np.asarray(s.grid.lo)


def distance_to_complement(s: CellSet, lower, upper, frontier: np.ndarray | None = None) -> float:
    """Euclidean distance from the box ``[lower, upper]`` to the closed complement of ``s``.

    The complement includes everything outside the extent box.  Returns 0 when
    the box meets the complement.  ``frontier`` caches
    ``complement_frontier(s)`` across many queries.
    """
    grid = s.grid
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if np.any(upper < lower):
        raise ValueError("query box has upper < lower")
    h = grid.h
    # distance to the outside of the extent box
    to_edge = np.minimum(lower - grid.lower, grid.upper - upper)
    best = max(float(to_edge.min()), 0.0)
    if best == 0.0:
        return 0.0
    cells = complement_frontier(s) if frontier is None else frontier
    if len(cells) == 0:
        return best
    c_lo = cells * h
    c_hi = c_lo + h
    gap = np.maximum(0.0, np.maximum(c_lo - upper, lower - c_hi))
    d2 = np.einsum("ij,ij->i", gap, gap)
    return float(min(best, np.sqrt(d2.min())))


def cell_distance_sq(s: CellSet) -> np.ndarray:
    """Exact squared distance, in units of ``h**2``, from each cell to the complement of ``s``.

    The nearest points of two integer boxes can be taken at lattice vertices,
    so this is a Euclidean distance transform on the vertex lattice followed
    by a minimum over each cell's corners.  Cells outside ``s`` get 0.
    """
    n = s.grid.n
    padded = np.pad(s.mask, 1)          # ring of complement cells around the box
    q = np.pad(padded, 1)
    vshape = tuple(d + 1 for d in padded.shape)
    inside = np.ones(vshape, dtype=bool)
    for corner in np.ndindex(*(2,) * n):
        sl = tuple(slice(1 - e, 1 - e + v) for e, v in zip(corner, vshape))
        inside &= q[sl]
    if inside.any():
        edt = ndimage.distance_transform_edt(inside)
    else:
        edt = np.zeros(vshape)
    d2v = np.rint(edt * edt).astype(np.int64)
    out = None
    for corner in np.ndindex(*(2,) * n):
        sl = tuple(slice(e, e + d) for e, d in zip(corner, padded.shape))
        out = d2v[sl] if out is None else np.minimum(out, d2v[sl])
    inner = tuple(slice(1, -1) for _ in range(n))
    return np.where(s.mask, out[inner], 0)
