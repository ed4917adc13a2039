import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakcz.grid import GridFunction, GridSpec
from weakcz.kernel import CODE_USER, KernelEvaluationError, KernelSpec, make_homogeneous_model, \
    make_tensor_hilbert
from weakcz.operator import (AtomicMeasure, BudgetExceededError, TruncationPolicy, apply_atoms,
                             apply_functions, apply_mixed)

TARGETS = np.concatenate([np.linspace(-3.0, -0.3, 10), np.linspace(1.3, 4.0, 10)])


def _hilbert_sq(x):
    return (np.log(np.abs(x / (x - 1))) / math.pi) ** 2


def _setup(j=8):
    g = GridSpec.from_box([-4], [5], 2.0 ** -j)
    f = GridFunction.indicator(g, [0], [1])
    return g, f


def test_atomic_measure_basics():
    nu = AtomicMeasure([[0.0], [1.0], [2.0]], [1.0, -2.0, 0.0])
    assert len(nu) == 3 and nu.n == 1
    assert nu.total_variation == 3.0
    assert len(nu.nonzero()) == 2
    pos, neg = nu.split_by_sign()
    assert pos.total_variation == 1.0 and neg.total_variation == 2.0
    assert len(nu.truncate(1)) == 1
    assert nu.scaled(2.0).total_variation == 6.0
    assert nu.translated([1.0]).points[0, 0] == 1.0
    assert AtomicMeasure.dirac([0.0]).equals(AtomicMeasure([[0.0]], [1.0]))


def test_exact_route_closed_form(backend):
    g, f = _setup()
    vals = apply_functions(make_tensor_hilbert(2), [f, f], TARGETS[:, None])
    assert vals.route == "exact"
    np.testing.assert_allclose(vals.values, _hilbert_sq(TARGETS), rtol=0, atol=1e-4)


def test_midpoint_route_closed_form(backend):
    g, f = _setup()
    vals = apply_functions(make_tensor_hilbert(2), [f, f], TARGETS[:, None],
                           TruncationPolicy(eps_cells=2.0), route="tuples")
    np.testing.assert_allclose(vals.values, _hilbert_sq(TARGETS), rtol=0.02)


def test_separable_route_matches_tuples(backend):
    g, f = _setup(6)
    k = make_tensor_hilbert(2)
    pol = TruncationPolicy(principal_value=False)
    a = apply_functions(k, [f, f], TARGETS[:, None], pol, route="separable")
    b = apply_functions(k, [f, f], TARGETS[:, None], pol, route="tuples")
    np.testing.assert_allclose(a.values, b.values, rtol=1e-10)


def test_atoms_closed_form(backend):
    k = make_homogeneous_model(1, 2)
    d = AtomicMeasure.dirac([0.0])
    x = np.array([[0.5], [-2.0], [7.0]])
    out = apply_atoms(k, [d, d], x)
    np.testing.assert_allclose(out.values, 1 / (2 * np.abs(x[:, 0])) ** 2, rtol=1e-14)
    np.testing.assert_array_equal(out.tail_bound, 0.0)


def test_atoms_singular_target(backend):
    k = make_homogeneous_model(1, 2)
    d = AtomicMeasure.dirac([0.0])
    with pytest.raises(KernelEvaluationError, match="slot 1 atom 0"):
        apply_atoms(k, [d, d], [[0.0]])
    out = apply_atoms(k, [d, d], [[0.0], [1.0]], on_singular="nan")
    assert math.isnan(out.values[0]) and out.singular.tolist() == [True, False]


def test_mixed_matches_direct_sum(backend):
    g = GridSpec.from_box([-2], [2], 2.0 ** -5)
    f = GridFunction.indicator(g, [0], [1], 0.5)
    k = make_homogeneous_model(1, 2)
    nu = AtomicMeasure([[-1.0], [0.25]], [2.0, 1.0])
    x = np.array([[1.5], [-0.6]])
    got = apply_mixed(k, [nu], [f], x).values
    y = g.axes()[0]
    fv = f.values
    ref = []
    for xx in x[:, 0]:
        s = 0.0
        for p, a in zip(nu.points[:, 0], nu.weights):
            ok = np.abs(xx - y) >= 2 * g.h
            s += a * np.sum(fv[ok] / (np.abs(xx - p) + np.abs(xx - y[ok])) ** 2) * g.h
        ref.append(s)
    np.testing.assert_allclose(got, ref, rtol=1e-12)


def test_backends_agree_2d():
    from weakcz import _accel
    g = GridSpec.from_box([-1, -1], [1, 1], 2.0 ** -3)
    f = GridFunction.indicator(g, [0, 0], [0.5, 0.5])
    k = make_homogeneous_model(2, 2)
    x = np.array([[0.9, -0.7], [0.1, 0.1]])
    before = _accel.backend()
    try:
        _accel.set_backend("numba")
        a = apply_functions(k, [f, f], x)
        _accel.set_backend("numpy")
        b = apply_functions(k, [f, f], x)
    finally:
        _accel.set_backend(before)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12)
    np.testing.assert_allclose(a.tail_bound, b.tail_bound, rtol=1e-12)


def test_user_kernel_runs_on_numpy_path():
    k = KernelSpec("sum", 1, 2, lambda x, ys: 1.0 / (1.0 + np.abs(x[:, None, 0] - ys[..., 0]).sum(1)),
                   code=CODE_USER)
    d = AtomicMeasure.dirac([0.0])
    assert apply_atoms(k, [d, d], [[1.0]]).values[0] == pytest.approx(1 / 3)


def test_tail_bound_unknown_constant():
    g, f = _setup(5)
    out = apply_functions(make_tensor_hilbert(2), [f, f], [[0.5]],
                          TruncationPolicy(principal_value=False), route="tuples")
    assert math.isnan(out.tail_bound[0])


def test_tail_bound_formula():
    g = GridSpec.from_box([-1], [1], 2.0 ** -4)
    f = GridFunction.indicator(g, [0], [0.25])
    k = make_homogeneous_model(1, 2)
    pol = TruncationPolicy(eps_cells=2.0)
    out = apply_functions(k, [f, f], [[0.03125]], pol)
    # every support cell center is within 2h of 1/32 except those at distance >= 1/8
    y = g.axes()[0][f.values > 0]
    near = np.abs(0.03125 - y) < 2 * g.h
    excl = (len(y) ** 2 - np.sum(~near) ** 2) * g.h ** 2
    assert out.tail_bound[0] == pytest.approx(excl / (2 * g.h) ** 2)


def test_budget():
    g, f = _setup(6)
    with pytest.raises(BudgetExceededError):
        apply_functions(make_homogeneous_model(1, 2), [f, f], g.centers(), budget=1e3)


def test_validation():
    g, f = _setup(4)
    k = make_homogeneous_model(1, 2)
    with pytest.raises(ValueError):
        apply_functions(k, [f], [[0.0]])
    with pytest.raises(ValueError):
        apply_mixed(k, [], [f, f], [[0.0]])
    with pytest.raises(ValueError):
        TruncationPolicy(eps_cells=0.25)


@settings(max_examples=20, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3))
def test_multilinear_power_of_two(p, q):
    g = GridSpec.from_box([-2], [2], 2.0 ** -4)
    f = GridFunction.indicator(g, [0], [1])
    k = make_homogeneous_model(1, 2)
    x = np.array([[1.7], [-1.1]])
    base = apply_functions(k, [f, f], x).values
    scaled = apply_functions(k, [f * 2.0 ** p, f * 2.0 ** q], x).values
    np.testing.assert_array_equal(scaled, base * 2.0 ** (p + q))


def test_symmetric_slots():
    g = GridSpec.from_box([-2], [2], 2.0 ** -5)
    f1 = GridFunction.indicator(g, [0], [1])
    f2 = GridFunction.indicator(g, [-1.5], [-0.5], 2.0)
    k = make_homogeneous_model(1, 2)
    x = np.array([[1.7], [-0.1]])
    a = apply_functions(k, [f1, f2], x).values
    b = apply_functions(k, [f2, f1], x).values
    np.testing.assert_allclose(a, b, rtol=1e-12)
