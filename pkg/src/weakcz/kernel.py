"""Multilinear Calderon-Zygmund kernels and sampling checks of their conditions.

A kernel is a function ``K(x, y_1, ..., y_m)`` on ``R^{n(m+1)}``.  Built-in
kernels carry an integer ``code`` and a parameter vector so the compiled
operator loops can evaluate them directly.  A user kernel only needs the
vectorized ``evaluate`` and runs on the numpy path.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import Callable

import numpy as np

from ._accel import njit

CODE_USER = -1
CODE_HOMOGENEOUS = 0
CODE_TENSOR_HILBERT = 1
CODE_RIESZ = 2


class KernelEvaluationError(RuntimeError):
    """The kernel returned a non-finite value at an admissible point."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


@njit(error_model="numpy")
def eval_builtin(code, params, x, ys):
    """Scalar evaluation of a built-in kernel; ``x`` is ``(n,)``, ``ys`` is ``(m, n)``."""
    m, n = ys.shape
    scale = params[0]
    if code == CODE_HOMOGENEOUS:
        s = 0.0
        for i in range(m):
            d2 = 0.0
            for a in range(n):
                d = x[a] - ys[i, a]
                d2 += d * d
            s += math.sqrt(d2)
        return scale / s ** (n * m)
    elif code == CODE_TENSOR_HILBERT:
        v = scale
        for i in range(m):
            v /= math.pi * (x[0] - ys[i, 0])
        return v
    elif code == CODE_RIESZ:
        j = int(params[1])
        r2 = 0.0
        for i in range(m):
            for a in range(n):
                d = x[a] - ys[i, a]
                r2 += d * d
        u = x[j % n] - ys[j // n, j % n]
        return scale * u / math.sqrt(r2) ** (n * m + 1)
    return math.nan


def _eval_builtin_np(code: int, params: np.ndarray, x: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized built-in evaluation; ``x`` is ``(B, n)``, ``ys`` is ``(B, m, n)``."""
    _, m, n = ys.shape
    diff = x[:, None, :] - ys
    scale = params[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        if code == CODE_HOMOGENEOUS:
            s = np.sqrt(np.square(diff).sum(axis=2)).sum(axis=1)
            return scale / s ** (n * m)
        if code == CODE_TENSOR_HILBERT:
            return scale / np.prod(math.pi * diff[:, :, 0], axis=1)
        if code == CODE_RIESZ:
            j = int(params[1])
            r = np.sqrt(np.square(diff).sum(axis=(1, 2)))
            return scale * diff[:, j // n, j % n] / r ** (n * m + 1)
    raise ValueError(f"unknown kernel code {code}")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel evaluator plus declared constants and boundedness metadata.

    Attributes
    ----------
    evaluate : callable
        ``evaluate(x, ys)`` with ``x`` of shape ``(B, n)`` and ``ys`` of shape
        ``(B, m, n)``, returning ``(B,)`` values.
    C_K, delta : float or None
        Declared size/smoothness constant and Holder exponent (None = unknown).
    norm : float or None
        Value used for the ``(L^2)^m -> L^{2/m}`` operator norm, if any.
    separable : bool
        ``K`` is ``scale * prod_i k(x - y_i)`` in one dimension, which enables
        the factorized and exact-antiderivative operator routes.
    """

    name: str
    n: int
    m: int
    evaluate: Callable = field(repr=False, compare=False)
    C_K: float | None = None
    delta: float | None = None
    norm: float | None = None
    norm_note: str = ""
    is_known_bounded: bool = False
    code: int = CODE_USER
    params: tuple = ()
    separable: bool = False

    @property
    def param_array(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float)

    @property
    def scale(self) -> float:
        return float(self.params[0]) if self.params else 1.0

    def __call__(self, x, *ys) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, self.n)
        y = np.stack([np.atleast_1d(np.asarray(v, dtype=float)).reshape(self.n) for v in ys])
        if y.shape[0] != self.m:
            raise ValueError(f"kernel takes {self.m} y-arguments")
        return float(self.evaluate(x, y[None])[0])

    def scaled(self, c: float) -> "KernelSpec":
        """The kernel ``c*K`` with constants adjusted."""
        c = float(c)
        mul = lambda v: None if v is None else abs(c) * v  # noqa: E731
        if self.code != CODE_USER:
            params = (self.scale * c,) + tuple(self.params[1:])
            code, p = self.code, np.asarray(params, dtype=float)
            ev = lambda x, ys: _eval_builtin_np(code, p, x, ys)  # noqa: E731
        else:
            base = self.evaluate
            params = self.params
            ev = lambda x, ys: c * base(x, ys)  # noqa: E731
        return replace(self, evaluate=ev, params=params, C_K=mul(self.C_K), norm=mul(self.norm),
                       name=f"{c!r}*{self.name}" if self.code == CODE_USER else self.name)


def _builtin(name, n, m, code, params, **kw) -> KernelSpec:
    p = np.asarray(params, dtype=float)
    return KernelSpec(name=name, n=n, m=m, evaluate=lambda x, ys: _eval_builtin_np(code, p, x, ys),
                      code=code, params=tuple(float(v) for v in params), **kw)


def make_homogeneous_model(n: int, m: int, c: float = 1.0) -> KernelSpec:
    """``c / (sum_i |x - y_i|)^{nm}``: saturates the size condition, positive, not bounded."""
    if not c > 0:
        raise ValueError("c must be positive")
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return _builtin("homogeneous", n, m, CODE_HOMOGENEOUS, (c,), C_K=float(c), delta=1.0,
                    is_known_bounded=False,
                    norm_note="positive kernel; not bounded on (L^2)^m")


def make_tensor_hilbert(m: int) -> KernelSpec:
    """``prod_i 1/(pi (x - y_i))`` on the line; ``T(f_1..f_m) = prod_i H f_i``.

    Undefined when ``x = y_i`` for any slot, so the operator pairs it with a
    principal-value rule.  Holder's inequality and ``||Hf||_2 = ||f||_2`` give
    the operator norm 1.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    return _builtin("tensor-hilbert", 1, m, CODE_TENSOR_HILBERT, (1.0,), C_K=None, delta=1.0,
                    norm=1.0, is_known_bounded=True, separable=True,
                    norm_note="product of Hilbert transforms, Holder: ||Hf||_2 = ||f||_2; "
                              "principal value")


def make_multilinear_riesz(n: int, m: int, j: int) -> KernelSpec:
    """``u_j / |u|^{nm+1}`` with ``u = (x - y_1, ..., x - y_m)`` stacked in ``R^{nm}``.

    ``j`` is 1-based.  Bounded on products of Lebesgue spaces (cited); no
    numeric operator norm is attached.
    """
    if not 1 <= j <= n * m:
        raise ValueError("direction j must satisfy 1 <= j <= n*m")
    return _builtin("riesz", n, m, CODE_RIESZ, (1.0, j - 1), C_K=float(math.sqrt(m) ** (n * m)),
                    delta=1.0, is_known_bounded=True,
                    norm_note="multilinear Riesz transform, bounded (cited); norm not quantified")


def kernel_by_name(name: str, n: int = 1, m: int = 2, c: float = 1.0, j: int = 1) -> KernelSpec:
    if name == "homogeneous":
        return make_homogeneous_model(n, m, c)
    if name == "tensor-hilbert":
        if n != 1:
            raise ValueError("tensor-hilbert is defined for n = 1 only")
        k = make_tensor_hilbert(m)
        return k if c == 1.0 else k.scaled(c)
    if name == "riesz":
        return make_multilinear_riesz(n, m, j)
    raise ValueError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class SamplerConfig:
    """Random admissible tuples for the condition checks.

    Scales are log-uniform on ``2^-scale_exp .. 2^scale_exp``; each offset
    ``x - y_i`` has a length within a factor ``2^spread`` of that scale.
    """

    samples: int = 512
    seed: int = 0
    scale_exp: float = 20.0
    spread: float = 3.0
    first_step: int = 4
    steps: int = 12

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be at least 1")


def _sample_tuples(k: KernelSpec, cfg: SamplerConfig, spread: float):
    rng = np.random.default_rng(cfg.seed)
    B, n, m = cfg.samples, k.n, k.m
    lam = np.exp2(rng.uniform(-cfg.scale_exp, cfg.scale_exp, B))
    x = rng.uniform(-1.0, 1.0, (B, n)) * lam[:, None]
    u = rng.standard_normal((B, m, n))
    u /= np.linalg.norm(u, axis=2, keepdims=True)
    r = lam[:, None] * np.exp2(-rng.uniform(0.0, spread, (B, m)))
    ys = x[:, None, :] - u * r[:, :, None]
    return x, ys


def _sum_dist(x, ys):
    return np.linalg.norm(x[:, None, :] - ys, axis=2).sum(axis=1)


def check_size(k: KernelSpec, cfg: SamplerConfig | None = None) -> float:
    """Sampled ``sup |K(x, y)| (sum_i |x - y_i|)^{nm}``."""
    cfg = cfg or SamplerConfig()
    x, ys = _sample_tuples(k, cfg, spread=10.0)
    vals = np.asarray(k.evaluate(x, ys), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise KernelEvaluationError(f"kernel {k.name} is not finite at x={x[i]}, y={ys[i]}",
                                    (x[i], ys[i]))
    return float(np.max(np.abs(vals) * _sum_dist(x, ys) ** (k.n * k.m)))


@dataclass(frozen=True)
class SmoothnessEstimate:
    """Fitted Holder exponent and constant.

    ``delta`` is the smallest of the per-variant median slopes and ``constant``
    the largest per-variant constant; ``variants`` maps ``"x"``, ``"y1"``, ...
    to ``(delta, constant)``.  ``infinitely_smooth`` is set (and ``delta`` is
    None) when every sampled difference vanishes.
    """

    delta: float | None
    constant: float
    variants: dict
    infinitely_smooth: bool = False

    def __iter__(self):
        return iter((self.delta, self.constant))


def check_smoothness(k: KernelSpec, cfg: SamplerConfig | None = None) -> SmoothnessEstimate:
    """Fit ``log |K(x,y) - K(x',y)|`` against ``log |x - x'|`` on shrinking steps.

    Steps are ``rho_s = 2^-s * max_i |x - y_i| / 2`` for ``s`` in
    ``first_step .. first_step + steps - 1``, applied to ``x`` and to each
    ``y_j`` along a random unit direction.  All steps obey the half-max
    constraint.  Per sample, least squares on the nonzero differences gives a
    slope; the variant exponent is the median slope and its constant is the
    largest ``exp(intercept)`` at that exponent, with the difference
    normalized by ``(sum |x - y_i|)^{nm}`` and the step by ``sum |x - y_i|``.
    """
    cfg = cfg or SamplerConfig()
    if cfg.steps < 3:
        raise ValueError("smoothness fit needs at least 3 scales")
    x, ys = _sample_tuples(k, cfg, spread=cfg.spread)
    B, n, m = cfg.samples, k.n, k.m
    rng = np.random.default_rng(cfg.seed + 1)
    S = _sum_dist(x, ys)
    D = np.linalg.norm(x[:, None, :] - ys, axis=2).max(axis=1)
    base = np.asarray(k.evaluate(x, ys), dtype=float)
    steps = np.arange(cfg.first_step, cfg.first_step + cfg.steps)
    variants = {}
    any_nonzero = False
    for var in ["x"] + [f"y{i + 1}" for i in range(m)]:
        u = rng.standard_normal((B, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        logr = np.empty((B, len(steps)))
        logd = np.empty((B, len(steps)))
        for c, s in enumerate(steps):
            rho = np.ldexp(D / 2.0, -int(s))
            if var == "x":
                xx, yy = x + u * rho[:, None], ys
            else:
                i = int(var[1:]) - 1
                xx, yy = x, ys.copy()
                yy[:, i, :] += u * rho[:, None]
            moved = np.asarray(k.evaluate(xx, yy), dtype=float)
            diff = np.abs(moved - base)
            if not np.all(np.isfinite(diff)):
                i = int(np.argmax(~np.isfinite(diff)))
                raise KernelEvaluationError(f"kernel {k.name} is not finite near x={x[i]}",
                                            (x[i], ys[i]))
            logr[:, c] = np.log(rho / S)
            with np.errstate(divide="ignore"):
                logd[:, c] = np.log(diff * S ** (n * m))
        ok = np.isfinite(logd)
        slopes, xs, ysl = [], [], []
        for b in range(B):
            sel = ok[b]
            if sel.sum() < 3:
                continue
            X, Y = logr[b, sel], logd[b, sel]
            slope = np.polyfit(X, Y, 1)[0]
            slopes.append(slope)
            xs.append(X)
            ysl.append(Y)
        if not slopes:
            variants[var] = (None, 0.0)
            continue
        any_nonzero = True
        d_hat = float(np.median(slopes))
        const = max(float(np.exp(np.mean(Y - d_hat * X))) for X, Y in zip(xs, ysl))
        variants[var] = (d_hat, const)
    if not any_nonzero:
        return SmoothnessEstimate(None, 0.0, variants, infinitely_smooth=True)
    fitted = [v for v in variants.values() if v[0] is not None]
    return SmoothnessEstimate(min(v[0] for v in fitted), max(v[1] for v in fitted), variants)
