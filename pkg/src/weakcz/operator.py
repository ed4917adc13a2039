"""Evaluation of ``T`` on grid functions, atomic measures and mixtures.

Every slot is reduced to a list of points with weights: atoms keep theirs,
a grid function contributes its nonzero cell centers with weight ``f * h^n``
(midpoint rule).  ``T`` at a target is then the finite tuple sum of
``prod(weights) * K(x, points)``.  Function slots drop points closer than
``eps`` to the target.

Three routes share this model:

``tuples``     generic sum over all point tuples (any kernel);
``separable``  the same sum factorized for tensor kernels;
``exact``      tensor-Hilbert with exact per-cell antiderivatives
               (principal value, no exclusion).
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Sequence, Union

import numpy as np

from . import _accel
from ._accel import njit
from .grid import GridFunction, GridMismatchError
from .kernel import (CODE_TENSOR_HILBERT, CODE_USER, KernelEvaluationError, KernelSpec,
                     eval_builtin)

DEFAULT_BUDGET = 10 ** 9


class BudgetExceededError(RuntimeError):
    """The requested evaluation exceeds the tuple budget."""


class AtomicMeasure:
    """Finite sum of weighted point masses ``sum_j a_j delta_{x_j}``."""

    __slots__ = ("points", "weights")

    def __init__(self, points, weights):
        w = np.array(weights, dtype=float).reshape(-1)
        p = np.array(points, dtype=float)
        if p.ndim == 1:
            p = p.reshape(len(w), -1) if len(w) else p.reshape(0, 1)
        if p.shape[0] != w.shape[0]:
            raise ValueError("points and weights differ in length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(w))):
            raise ValueError("atoms must have finite points and weights")
        p.setflags(write=False)
        w.setflags(write=False)
        self.points = p
        self.weights = w

    @classmethod
    def dirac(cls, point, weight: float = 1.0) -> "AtomicMeasure":
        return cls(np.atleast_1d(np.asarray(point, dtype=float))[None, :], [weight])

    @classmethod
    def from_pairs(cls, pairs) -> "AtomicMeasure":
        pairs = list(pairs)
        if not pairs:
            raise ValueError("no atoms given; pass points/weights arrays for an empty measure")
        pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p, _ in pairs]
        return cls(np.stack(pts), [w for _, w in pairs])

    def __repr__(self):
        return f"AtomicMeasure(n={self.n}, atoms={len(self)}, mass={self.total_variation:.6g})"

    def __len__(self):
        return self.weights.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def total_variation(self) -> float:
        return float(np.abs(self.weights).sum())

    def truncate(self, N: int) -> "AtomicMeasure":
        return AtomicMeasure(self.points[:N], self.weights[:N])

    def scaled(self, c: float) -> "AtomicMeasure":
        return AtomicMeasure(self.points, self.weights * float(c))

    def translated(self, v) -> "AtomicMeasure":
        return AtomicMeasure(self.points + np.asarray(v, dtype=float), self.weights)

    def nonzero(self) -> "AtomicMeasure":
        keep = self.weights != 0
        return AtomicMeasure(self.points[keep], self.weights[keep])

    def split_by_sign(self) -> tuple["AtomicMeasure", "AtomicMeasure"]:
        """Positive part and the absolute value of the negative part."""
        pos = self.weights > 0
        neg = self.weights < 0
        return (AtomicMeasure(self.points[pos], self.weights[pos]),
                AtomicMeasure(self.points[neg], -self.weights[neg]))

    def equals(self, other: "AtomicMeasure") -> bool:
        return (np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights))

    def to_json(self) -> dict:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}


@dataclass(frozen=True)
class TruncationPolicy:
    """Diagonal handling for function slots.

    ``eps_cells`` is the exclusion radius in units of ``h``; with
    ``principal_value`` on, one-dimensional tensor-Hilbert evaluations use
    the exact antiderivative route instead of exclusion.
    """

    eps_cells: float = 2.0
    principal_value: bool = True
    report_tail: bool = True

    def __post_init__(self):
        if not self.eps_cells >= 0.5:
            raise ValueError("exclusion radius must be at least h/2")

    def eps(self, h: float) -> float:
        return self.eps_cells * h


@dataclass(frozen=True)
class OperatorValues:
    """Values of ``T`` at the targets.

    ``tail_bound`` estimates the contribution of the excluded near-diagonal
    tuples as ``C_K * eps^{-nm} * (their total |weight|)``; it is 0 when
    nothing was excluded, NaN when ``C_K`` is unknown, None when not requested.
    ``singular`` flags targets where a nonzero-weight tuple was undefined;
    those values are NaN.
    """

    values: np.ndarray
    tail_bound: np.ndarray | None
    singular: np.ndarray
    route: str

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


Slot = Union[GridFunction, AtomicMeasure]


@dataclass
class _Packed:
    points: np.ndarray
    weights: np.ndarray
    offsets: np.ndarray
    is_func: np.ndarray


def _slot_points(s: Slot):
    if isinstance(s, GridFunction):
        mask = s.values != 0
        idx = np.argwhere(mask)
        pts = (idx + np.asarray(s.grid.lo) + 0.5) * s.grid.h
        return pts, s.values[mask] * s.grid.cell_volume, True
    if isinstance(s, AtomicMeasure):
        keep = s.weights != 0
        return s.points[keep], s.weights[keep], False
    raise TypeError(f"slot must be GridFunction or AtomicMeasure, got {type(s).__name__}")


def _pack(slots) -> _Packed:
    pts, wts, offs, isf = [], [], [0], []
    for s in slots:
        p, w, f = _slot_points(s)
        pts.append(p)
        wts.append(w)
        offs.append(offs[-1] + len(w))
        isf.append(f)
    n = pts[0].shape[1] if pts else 1
    return _Packed(np.ascontiguousarray(np.concatenate(pts).reshape(-1, n), dtype=float),
                   np.ascontiguousarray(np.concatenate(wts), dtype=float),
                   np.asarray(offs, dtype=np.int64), np.asarray(isf, dtype=np.bool_))


@njit(error_model="numpy")
def _tuples_nb(code, params, targets, pts, wts, offs, isfunc, eps):
    T, n = targets.shape
    m = offs.shape[0] - 1
    out = np.zeros(T)
    excl = np.zeros(T)
    bad = np.zeros(T, dtype=np.bool_)
    sizes = np.empty(m, dtype=np.int64)
    total = 1
    for i in range(m):
        sizes[i] = offs[i + 1] - offs[i]
        total *= sizes[i]
    near = np.zeros(pts.shape[0], dtype=np.bool_)
    ys = np.empty((m, n))
    idx = np.zeros(m, dtype=np.int64)
    eps2 = eps * eps
    for t in range(T):
        x = targets[t]
        for i in range(m):
            for p in range(offs[i], offs[i + 1]):
                near[p] = False
                if isfunc[i]:
                    d2 = 0.0
                    for a in range(n):
                        d = x[a] - pts[p, a]
                        d2 += d * d
                    near[p] = d2 < eps2
        acc = 0.0
        ex = 0.0
        for i in range(m):
            idx[i] = 0
        for _ in range(total):
            w = 1.0
            skip = False
            for i in range(m):
                p = offs[i] + idx[i]
                w *= wts[p]
                if near[p]:
                    skip = True
            if w != 0.0:
                if skip:
                    ex += abs(w)
                else:
                    for i in range(m):
                        p = offs[i] + idx[i]
                        for a in range(n):
                            ys[i, a] = pts[p, a]
                    v = eval_builtin(code, params, x, ys)
                    if np.isfinite(v):
                        acc += w * v
                    else:
                        bad[t] = True
            i = m - 1
            while i >= 0:
                idx[i] += 1
                if idx[i] < sizes[i]:
                    break
                idx[i] = 0
                i -= 1
        out[t] = acc
        excl[t] = ex
    return out, excl, bad


def _tuples_np(k: KernelSpec, targets, pk: _Packed, eps):
    T, n = targets.shape
    m = len(pk.offsets) - 1
    sizes = np.diff(pk.offsets)
    total = int(np.prod(sizes))
    out = np.zeros(T)
    excl = np.zeros(T)
    bad = np.zeros(T, dtype=bool)
    if total == 0:
        return out, excl, bad
    evaluate = k.evaluate
    chunk = max(1, (1 << 20) // max(1, T * m * n))
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk))
        idx = np.unravel_index(flat, tuple(sizes))
        rows = [pk.offsets[i] + idx[i] for i in range(m)]
        w = np.prod(np.stack([pk.weights[r] for r in rows]), axis=0)
        ys = np.stack([pk.points[r] for r in rows], axis=1)          # (C, m, n)
        near = np.zeros((T, len(flat)), dtype=bool)
        for i in range(m):
            if pk.is_func[i]:
                d2 = np.square(targets[:, None, :] - ys[None, :, i, :]).sum(axis=2)
                near |= d2 < eps * eps
        live = ~near & (w != 0)[None, :]
        excl += np.where(near, np.abs(w)[None, :], 0.0).sum(axis=1)
        tt, cc = np.nonzero(live)
        if tt.size == 0:
            continue
        vals = np.asarray(evaluate(targets[tt], ys[cc]), dtype=float)
        fin = np.isfinite(vals)
        bad[tt[~fin]] = True
        np.add.at(out, tt[fin], w[cc[fin]] * vals[fin])
    return out, excl, bad


@njit(error_model="numpy")
def _cauchy_factor_nb(x, pts, wts, eps):
    # sum_p w_p / (pi (x - p)) over |x - p| >= eps; eps < 0 keeps everything
    T = x.shape[0]
    out = np.zeros(T)
    far = np.zeros(T)
    bad = np.zeros(T, dtype=np.bool_)
    for t in range(T):
        acc = 0.0
        wf = 0.0
        for p in range(pts.shape[0]):
            d = x[t] - pts[p]
            if eps >= 0.0 and abs(d) < eps:
                continue
            wf += abs(wts[p])
            if d == 0.0:
                bad[t] = True
                continue
            acc += wts[p] / (math.pi * d)
        out[t] = acc
        far[t] = wf
    return out, far, bad


def _cauchy_factor_np(x, pts, wts, eps):
    d = x[:, None] - pts[None, :]
    keep = np.ones(d.shape, dtype=bool) if eps < 0 else np.abs(d) >= eps
    zero = (d == 0) & keep
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(keep & ~zero, wts[None, :] / (math.pi * d), 0.0)
    far = np.where(keep, np.abs(wts)[None, :], 0.0).sum(axis=1)
    return terms.sum(axis=1), far, zero.any(axis=1)


@njit(error_model="numpy")
def _log_factor_nb(x, edges, jumps):
    # (1/pi) sum_e J_e ln|x - e|
    T = x.shape[0]
    out = np.zeros(T)
    bad = np.zeros(T, dtype=np.bool_)
    for t in range(T):
        acc = 0.0
        for e in range(edges.shape[0]):
            d = abs(x[t] - edges[e])
            if d == 0.0:
                bad[t] = True
                continue
            acc += jumps[e] * math.log(d)
        out[t] = acc / math.pi
    return out, bad


def _log_factor_np(x, edges, jumps):
    d = np.abs(x[:, None] - edges[None, :])
    zero = d == 0
    with np.errstate(divide="ignore"):
        terms = np.where(zero, 0.0, jumps[None, :] * np.log(np.where(zero, 1.0, d)))
    return terms.sum(axis=1) / math.pi, zero.any(axis=1)


def _edge_jumps(f: GridFunction):
    v = f.values
    padded = np.concatenate(([0.0], v, [0.0]))
    jumps = padded[1:] - padded[:-1]            # value right minus value left
    edges = (np.arange(f.grid.lo[0], f.grid.hi[0] + 1)) * f.grid.h
    keep = jumps != 0
    return np.ascontiguousarray(edges[keep]), np.ascontiguousarray(jumps[keep])


def _as_targets(targets, n: int) -> np.ndarray:
    x = np.asarray(targets, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if n == 1 else x.reshape(1, n)
    if x.shape[1] != n:
        raise ValueError(f"targets must have {n} coordinates")
    if not np.all(np.isfinite(x)):
        raise ValueError("targets must be finite")
    return np.ascontiguousarray(x)


def _validate(k: KernelSpec, slots: Sequence[Slot]):
    if len(slots) != k.m:
        raise ValueError(f"kernel takes {k.m} slots, got {len(slots)}")
    grid = None
    for s in slots:
        if isinstance(s, GridFunction):
            if grid is None:
                grid = s.grid
            elif s.grid != grid:
                raise GridMismatchError("function slots live on different grids")
            if s.grid.n != k.n:
                raise ValueError("function dimension does not match the kernel")
        elif isinstance(s, AtomicMeasure):
            if len(s) and s.n != k.n:
                raise ValueError("atom dimension does not match the kernel")
        else:
            raise TypeError(f"slot must be GridFunction or AtomicMeasure, got {type(s).__name__}")
    return grid


def _choose_route(k: KernelSpec, policy: TruncationPolicy, route: str) -> str:
    sep = k.separable and k.n == 1 and k.code == CODE_TENSOR_HILBERT
    if route == "auto":
        if sep:
            return "exact" if policy.principal_value else "separable"
        return "tuples"
    if route in ("exact", "separable") and not sep:
        raise ValueError(f"route {route!r} needs the one-dimensional tensor-Hilbert kernel")
    if route not in ("exact", "separable", "tuples"):
        raise ValueError(f"unknown route {route!r}")
    return route


def apply_slots(k: KernelSpec, slots: Sequence[Slot], targets, policy: TruncationPolicy | None = None,
                *, budget: float = DEFAULT_BUDGET, on_singular: str = "raise",
                route: str = "auto") -> OperatorValues:
    """``T(slot_1, ..., slot_m)`` at each target, slots in kernel order.

    Parameters
    ----------
    on_singular : {"raise", "nan"}
        What to do at targets where a nonzero-weight tuple makes ``K``
        undefined: raise :class:`KernelEvaluationError` naming the target, or
        return NaN there and flag it in ``singular``.
    route : {"auto", "tuples", "separable", "exact"}
        Evaluation route; "auto" picks the exact route for tensor-Hilbert
        with principal value on, the factorized route when it is off, and
        the generic tuple sum otherwise.
    """
    policy = policy or TruncationPolicy()
    grid = _validate(k, slots)
    x = _as_targets(targets, k.n)
    route = _choose_route(k, policy, route)
    eps = policy.eps(grid.h) if grid is not None else 0.0
    if route == "tuples":
        out, excl, bad = _run_tuples(k, slots, x, eps, budget)
    else:
        out, excl, bad = _run_factored(k, slots, x, eps, budget, exact=(route == "exact"))
    if bad.any():
        if on_singular == "raise":
            t = int(np.argmax(bad))
            raise KernelEvaluationError(_describe_singular(k, slots, x[t]), x[t])
        out = np.where(bad, np.nan, out)
    tail = None
    if policy.report_tail:
        if k.C_K is None:
            tail = np.where(excl > 0, np.nan, 0.0)
        else:
            tail = k.C_K * excl / eps ** (k.n * k.m) if eps > 0 else np.zeros_like(excl)
    return OperatorValues(out, tail, bad, route)


def _run_tuples(k, slots, x, eps, budget):
    pk = _pack(slots)
    sizes = np.diff(pk.offsets)
    count = float(len(x)) * float(np.prod(sizes.astype(float)))
    if count > budget:
        raise BudgetExceededError(
            f"{count:.3g} kernel tuples exceed the budget of {budget:.3g}; "
            "coarsen the grid, shrink supports or raise the budget")
    if _accel.USE_NUMBA and k.code != CODE_USER:
        return _tuples_nb(k.code, k.param_array, x, pk.points, pk.weights, pk.offsets,
                          pk.is_func, float(eps))
    return _tuples_np(k, x, pk, float(eps))


def _run_factored(k, slots, x, eps, budget, exact):
    x1 = np.ascontiguousarray(x[:, 0])
    work = 0.0
    parts = []
    for s in slots:
        if exact and isinstance(s, GridFunction):
            parts.append(("log",) + _edge_jumps(s))
        else:
            p, w, isf = _slot_points(s)
            parts.append(("cauchy", np.ascontiguousarray(p[:, 0]), np.ascontiguousarray(w),
                          eps if isf else -1.0))
        work += len(parts[-1][1])
    if work * len(x) > budget:
        raise BudgetExceededError(
            f"{work * len(x):.3g} kernel evaluations exceed the budget of {budget:.3g}")
    nb = _accel.USE_NUMBA
    value = np.full(len(x), k.scale)
    total_abs = np.ones(len(x))
    far_abs = np.ones(len(x))
    bad = np.zeros(len(x), dtype=bool)
    for part in parts:
        if part[0] == "log":
            f, b = (_log_factor_nb if nb else _log_factor_np)(x1, part[1], part[2])
            w_all = 0.0
            far = np.zeros(len(x))
        else:
            _, p, w, e = part
            f, far, b = (_cauchy_factor_nb if nb else _cauchy_factor_np)(x1, p, w, e)
            w_all = float(np.abs(w).sum())
        value = value * f
        bad |= b
        total_abs = total_abs * w_all
        far_abs = far_abs * far
    # log factors carry zero weight in both products, so they add no excluded mass
    excl = np.maximum(total_abs - far_abs, 0.0)
    return value, excl, bad


def _describe_singular(k, slots, x) -> str:
    atoms = []
    for i, s in enumerate(slots):
        if isinstance(s, AtomicMeasure):
            hit = np.nonzero(np.all(s.points == x, axis=1) & (s.weights != 0))[0]
            if hit.size:
                atoms.append(f"slot {i + 1} atom {int(hit[0])} at {s.points[hit[0]].tolist()}")
    where = "; ".join(atoms) if atoms else "a grid-cell edge or a cell center"
    return f"kernel {k.name} is undefined at target {x.tolist()} ({where})"


def apply_functions(k: KernelSpec, fs: Sequence[GridFunction], targets,
                    policy: TruncationPolicy | None = None, **kw) -> OperatorValues:
    """``T(f_1, ..., f_m)`` at each target (midpoint rule with diagonal exclusion)."""
    for f in fs:
        if not isinstance(f, GridFunction):
            raise TypeError("apply_functions takes grid functions only")
    return apply_slots(k, list(fs), targets, policy, **kw)


def apply_atoms(k: KernelSpec, nus: Sequence[AtomicMeasure], targets, **kw) -> OperatorValues:
    """The exact finite sum ``sum prod(a) K(x, x_{1,j_1}, ..., x_{m,j_m})``."""
    for nu in nus:
        if not isinstance(nu, AtomicMeasure):
            raise TypeError("apply_atoms takes atomic measures only")
    return apply_slots(k, list(nus), targets, TruncationPolicy(), **kw)


def apply_mixed(k: KernelSpec, nus: Sequence[AtomicMeasure], fs: Sequence[GridFunction], targets,
                policy: TruncationPolicy | None = None, **kw) -> OperatorValues:
    """``T(nu_1, ..., nu_l, f_{l+1}, ..., f_m)``: atoms in the leading slots."""
    if not 1 <= len(nus) <= k.m:
        raise ValueError("need between 1 and m atomic slots")
    return apply_slots(k, list(nus) + list(fs), targets, policy, **kw)
