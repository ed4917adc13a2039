import numpy as np
import pytest

from weakcz.grid import GridFunction, GridSpec
from weakcz.kernel import CODE_USER, KernelSpec, make_homogeneous_model, make_tensor_hilbert
from weakcz.verify.theorem1 import permuted_kernel, theorem1_ledger


@pytest.fixture(scope="module")
def small_run():
    g = GridSpec.from_box([-8], [8], 2.0 ** -6)
    f = GridFunction.indicator(g, [0], [1])
    ts = np.geomspace(2.0 ** -4, 4.0, 6)
    return theorem1_ledger([f, f], ts, make_tensor_hilbert(2), (2, 8))


def test_all_entries_pass(small_run):
    assert small_run.all_pass, [(e.name, e.lhs, e.rhs) for e in small_run.failures()]
    names = {e.name.split("[")[0].split(" ")[0] for e in small_run.entries}
    for key in ("G_measure", "g_linf", "whitney", "mass_bound", "cancellation_cubes",
                "E1_chebyshev", "Es_sum", "A2_final"):
        assert any(n.startswith(key) for n in names), key


def test_constants_reported(small_run):
    c = small_run.constants
    assert 0 < c["A2_root_emp"] < 2
    assert set(c["A1_fit_by_N"]) == {"2", "8"}
    assert c["M_norm_emp"] <= 2.0 + 1e-12       # sharp 1D weak (1,1) constant


def test_deterministic(small_run):
    g = GridSpec.from_box([-8], [8], 2.0 ** -6)
    f = GridFunction.indicator(g, [0], [1])
    again = theorem1_ledger([f, f], np.geomspace(2.0 ** -4, 4.0, 6), make_tensor_hilbert(2), (2, 8))
    assert again.dumps() == small_run.dumps()


def test_validation():
    g = GridSpec.from_box([-4], [4], 2.0 ** -5)
    f = GridFunction.indicator(g, [0], [1])
    k = make_tensor_hilbert(2)
    with pytest.raises(ValueError):
        theorem1_ledger([f, f], [], k)
    with pytest.raises(ValueError):
        theorem1_ledger([f, f], [1.0, 0.5], k)
    with pytest.raises(ValueError):
        theorem1_ledger([f], [1.0], k)
    with pytest.raises(ValueError):
        theorem1_ledger([f, f], [1.0], k, N_list=(0,))
    with pytest.raises(ValueError, match="allow_unbounded"):
        theorem1_ledger([f, f], [1.0], make_homogeneous_model(1, 2))


def test_permuted_kernel():
    k = make_tensor_hilbert(2)
    assert permuted_kernel(k, (1, 0)) is k
    asym = KernelSpec("asym", 1, 2, lambda x, ys: ys[:, 0, 0] - 2 * ys[:, 1, 0], code=CODE_USER)
    p = permuted_kernel(asym, (1, 0))
    assert p(0.0, 1.0, 5.0) == pytest.approx(asym(0.0, 5.0, 1.0))
