import json

import pytest

from weakcz.grid import GridFunction, GridSpec
from weakcz.kernel import make_homogeneous_model
from weakcz.operator import AtomicMeasure
from weakcz.verify.theorem2 import HypothesisError, LedgerConfig, theorem2_ledger

K = make_homogeneous_model(1, 2)


def _entries(led, name):
    return [e for e in led.entries if e.name == name]


def test_dirac_scenario():
    g = GridSpec.from_box([-8], [8], 2.0 ** -8)
    d = AtomicMeasure.dirac([0.0])
    led = theorem2_ledger([d, d], [], 4.0, K, grid=g)
    assert led.all_pass, [(e.name, e.lhs, e.rhs) for e in led.failures()]
    (e,) = _entries(led, "E_star")
    assert e.rhs == 2.0 and e.lhs == 1.0
    assert led.constants["weak_value"] == pytest.approx(1.0, rel=0.05)
    assert led.constants["radii"] == [[0.25], [0.25]]


@pytest.mark.parametrize("points,box", [([0.0, 10.0], (-4, 14)), ([0.0, 0.1], (-4, 4))])
def test_two_atom_scenarios(points, box):
    g = GridSpec.from_box([box[0]], [box[1]], 2.0 ** -8)
    nu = AtomicMeasure([[p] for p in points], [0.5, 0.5])
    led = theorem2_ledger([nu, nu], [], 4.0, K, grid=g)
    assert led.all_pass, [(e.name, e.lhs, e.rhs) for e in led.failures()]
    errs = [e for e in led.entries if e.name.startswith("Eij_measure")]
    assert len(errs) == 4 and all(e.lhs <= 1e-3 for e in errs)
    (e,) = _entries(led, "E_star")
    assert e.rhs == 2.0


def test_mixed_atom_and_function():
    g = GridSpec.from_box([-6], [6], 2.0 ** -6)
    f = GridFunction.indicator(g, [0], [1], 1.5)
    nu = AtomicMeasure([[0.5], [-1.0]], [1.0, 0.5])
    led = theorem2_ledger([nu], [f], 4.0, K, grid=g)
    assert led.all_pass, [(e.name, e.lhs, e.rhs) for e in led.failures()]
    assert any(e.name.startswith("Pk_lemma") for e in led.entries)


def test_hypothesis_violation_names_slot():
    g = GridSpec.from_box([-4], [4], 2.0 ** -5)
    f = GridFunction.indicator(g, [0], [1], 3.0)
    with pytest.raises(HypothesisError, match="slot 2"):
        theorem2_ledger([AtomicMeasure.dirac([0.0])], [f], 4.0, K, grid=g)


def test_trivial_inputs():
    g = GridSpec.from_box([-4], [4], 2.0 ** -5)
    d = AtomicMeasure.dirac([0.0])
    led = theorem2_ledger([d], [g.zeros()], 4.0, K, grid=g)
    assert led.all_pass and led.constants["trivial"]


def test_argument_validation():
    g = GridSpec.from_box([-4], [4], 2.0 ** -5)
    d = AtomicMeasure.dirac([0.0])
    with pytest.raises(ValueError):
        theorem2_ledger([d], [], 4.0, K, grid=g)
    with pytest.raises(ValueError):
        theorem2_ledger([d, d], [], -1.0, K, grid=g)
    with pytest.raises(ValueError):
        theorem2_ledger([d, d], [], 4.0, K)


def test_deterministic_json():
    g = GridSpec.from_box([-8], [8], 2.0 ** -6)
    nu = AtomicMeasure([[0.0], [2.0]], [0.5, 1.0])
    cfg = LedgerConfig(seed=3)
    a = theorem2_ledger([nu, nu], [], 4.0, K, grid=g, config=cfg).dumps()
    b = theorem2_ledger([nu, nu], [], 4.0, K, grid=g, config=cfg).dumps()
    assert a == b
    assert json.loads(a)["provenance"]["seed"] == 3
