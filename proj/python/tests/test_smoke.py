import json
import math
import pathlib

import numpy as np
import pytest

import rigidity

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def test_builtin_names():
    assert "ginibre" in rigidity.builtin_densities()
    assert "sine" in rigidity.builtin_kernels()


def test_ginibre_orders():
    orders = rigidity.classify(rigidity.builtin("ginibre"), k_cap=1)
    assert [o["verdict"] for o in orders] == ["KRigid", "NotKRigid"]


def test_radial_power_law():
    doc = rigidity.builtin("power_law", d=2, alpha=4.0)
    assert rigidity.pole_test(doc, [1, 0])["verdict"] == "Pole"
    assert rigidity.pole_test(doc, [2, 0])["verdict"] == "NoPole"


def test_ma1_residuals():
    cov = {"d": 1, "values": [{"m": [0], "value": 1.0}, {"m": [1], "value": -0.5}]}
    r = rigidity.predict(cov, 0, [2, 4, 8, 16, 32, 64, 128, 256])
    for p in r["curve"]:
        assert p["residual"] == pytest.approx(1.0 / (p["N"] + 1), rel=1e-9)
    assert r["fit"]["flag"] == "Rigid"


def test_discrete_example():
    doc = rigidity.builtin("discrete_example")
    doc["zeros"] = [{"location": [1.0], "order": 1}, {"location": [-1.0], "order": 1}]
    assert rigidity.discrete_test(doc, 1, [1])["rigid"]
    assert not rigidity.discrete_test(doc, 1, [0])["rigid"]


def test_ar1_interpolation_limit():
    phi = 0.5
    assert rigidity.interpolation_limit(rigidity.builtin("ar1", phi=phi)) == pytest.approx(
        (1 - phi**2) / (1 + phi**2), rel=1e-10
    )


def test_dpp_sine():
    r = rigidity.dpp("sine", k_cap=0)
    assert r["max_rigid_order"] == 0
    assert r["structure_factor"]["hyperuniform"]


def test_simulate_reproducible():
    doc = rigidity.builtin("ar1", phi=0.3)
    a = rigidity.simulate(doc, 256, replicates=4, seed=11)
    b = rigidity.simulate(doc, 256, replicates=4, seed=11)
    assert a.shape == (4, 256)
    assert np.array_equal(a, b)
    assert math.isclose(a.var(), 1.0, abs_tol=0.3)


def test_errors_are_typed():
    with pytest.raises(rigidity.RigidityError, match="ParseError"):
        rigidity.classify({"density": {"kind": "expression", "expr": "1"}, "colour": 1})


def test_run_cli(tmp_path):
    assert rigidity.run_cli("classify", CONFIGS / "gaf_scaling.json", tmp_path) == 0
    verdicts = json.loads((tmp_path / "verdicts.json").read_text())
    assert verdicts["max_rigid_order"] == 1
