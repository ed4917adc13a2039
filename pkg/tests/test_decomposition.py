import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from weakcz.decomposition import (BallRoomError, ResolutionError, build_ball_system,
                                  enumerate_splittings, sigma_inputs, split)
from weakcz.grid import GridFunction, GridSpec, l1_norm, linf_norm, measure
from weakcz.operator import AtomicMeasure


def _f(j=7):
    g = GridSpec.from_box([-4], [5], 2.0 ** -j)
    return g, GridFunction.indicator(g, [0], [1])


def test_patterns():
    assert enumerate_splittings(2) == [("g", "g"), ("g", "b"), ("b", "g"), ("b", "b")]
    assert len(enumerate_splittings(3)) == 8
    with pytest.raises(ValueError):
        enumerate_splittings(0)


def test_split_reconstructs_f():
    g, f = _f()
    sp = split([f, f], 0.25)
    for s in sp.slots:
        assert (s.g + s.b).equals(f)
        assert linf_norm(s.g) <= 0.5
        assert measure(s.G) == pytest.approx(3.0, abs=2 * g.h)   # Mf > 1/2 on (-1, 2)
        # the weights carry the whole mass of b, piece by piece
        assert s.weights.sum() == pytest.approx(f.integral())
        assert np.all(s.mass_ratio <= 1.0)
        for j in range(s.num_pieces):
            assert s.piece(j).integral() == pytest.approx(s.weights[j])
    assert sp.G.equals(sp.slots[0].G)


def test_split_high_t_is_all_good():
    g, f = _f()
    sp = split([f, f], 4.0)                  # Mf <= 1 < 2
    s = sp.slots[0]
    assert s.G.is_empty() and s.num_pieces == 0
    assert s.g.equals(f)
    assert len(s.nu()) == 0


def test_truncation_and_surrogate():
    g, f = _f()
    s = split([f, f], 0.25).slots[0]
    N = 3
    bN = s.b_truncated(N)
    assert bN.integral() == pytest.approx(s.weights[:N].sum())
    nu = s.nu(N)
    assert len(nu) == N
    np.testing.assert_array_equal(nu.weights, s.weights[:N])
    assert s.b_truncated(None).equals(s.b)


def test_strict_resolution():
    g, f = _f(4)
    with pytest.raises(ResolutionError):
        split([f, f], 0.25, strict=True)


def test_pattern_inputs():
    g, f = _f()
    sp = split([f, f], 0.25)
    gb = sp.pattern_inputs(("g", "b"), N=2)
    assert gb[0].equals(sp.slots[0].g)
    assert gb[1].equals(sp.slots[1].b_truncated(2))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.floats(0.01, 4))
def test_split_properties(vals, t):
    g = GridSpec.from_box([-8], [8], 2.0 ** -2)
    f = GridFunction(g, np.pad(vals, 28))
    sp = split([f, f], t)
    thr = math.sqrt(t)
    # the mass bound needs G away from the edge of the box
    assume(not (sp.G.mask[0] or sp.G.mask[-1]))
    for s in sp.slots:
        assert (s.g + s.b).equals(f)
        assert linf_norm(s.g) <= thr * (1 + 1e-12)
        assert np.all(s.mass_ratio <= 1 + 1e-12)


def test_single_atom_ball():
    g = GridSpec.from_box([-8], [8], 2.0 ** -8)
    d = AtomicMeasure.dirac([0.0])
    sys_ = build_ball_system([d, d], 4.0, g)
    for s in sys_.slots:
        assert s.radii.tolist() == [0.25]
        assert s.measures.tolist() == [0.5]
        assert s.star_measures.tolist() == [1.0]
    assert measure(sys_.E_star) == 1.0
    js = sys_.to_json()
    assert js["slots"][0]["radii"] == [0.25]


def test_two_close_atoms():
    g = GridSpec.from_box([-4], [4], 2.0 ** -8)
    nu = AtomicMeasure([[0.0], [0.1]], [0.5, 0.5])
    s = build_ball_system([nu, nu], 4.0, g).slots[0]
    assert s.radii.tolist() == [0.125, 0.25]
    np.testing.assert_allclose(s.measures, 0.25, rtol=1e-3)
    assert not np.any((s.labels == 0) & (s.labels == 1))


def test_ball_errors():
    g = GridSpec.from_box([-1], [1], 2.0 ** -6)
    with pytest.raises(BallRoomError):
        build_ball_system([AtomicMeasure.dirac([5.0])], 4.0, g, 2)
    with pytest.raises(BallRoomError):
        build_ball_system([AtomicMeasure.dirac([0.9])], 4.0, g, 2)
    with pytest.raises(BallRoomError):
        build_ball_system([AtomicMeasure.dirac([0.0], 100.0)], 4.0, g, 2)
    with pytest.raises(ValueError):
        build_ball_system([AtomicMeasure.dirac([0.0], -1.0)], 4.0, g, 2)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(0.05, 0.5)), min_size=1, max_size=5),
       st.floats(1.0, 16.0))
def test_ball_targets_property(atoms, t):
    g = GridSpec.from_box([-8], [8], 2.0 ** -9)
    nu = AtomicMeasure([[a] for a, _ in atoms], [w for _, w in atoms])
    s = build_ball_system([nu], t, g, 2).slots[0]
    # symmetric balls gain two cells at a time; the cell count is rounded first
    assert np.all(np.abs(s.measures - s.targets) <= 1.5 * g.h + 1e-15)
    assert np.all(s.star_measures <= 4 * s.radii + 1e-12)


def test_sigma_inputs():
    g = GridSpec.from_box([-8], [8], 2.0 ** -6)
    d = AtomicMeasure.dirac([0.0])
    sys_ = build_ball_system([d, d], 4.0, g)
    lead = sigma_inputs(sys_, [d, d], [], 1)
    assert isinstance(lead[0], GridFunction) and lead[1] is d
    assert l1_norm(lead[0]) == pytest.approx(1.0)      # t^{1/m} |E_1| = 2 * 0.5
    with pytest.raises(ValueError):
        sigma_inputs(sys_, [d, d], [], 3)
