import math

import numpy as np
import pytest

import conorbit


def test_catalog_lists_every_model():
    ids = {m["id"] for m in conorbit.list_models()}
    assert {"torus_magnetic", "torus_mechanical", "half_plane_horocycle", "plane_patch_custom"} <= ids


def test_unknown_model_raises():
    with pytest.raises(ValueError):
        conorbit.make_model("no_such_model")


def test_torus_loop_action_is_k_minus_half():
    model = conorbit.make_model("torus_magnetic")
    nodes = conorbit.torus_backward_loop(16)
    for k in (0.1, 0.3):
        assert abs(conorbit.discrete_action(model, nodes, 1.0, k)["A"] - (k - 0.5)) <= 1e-12


def test_flat_optimal_time():
    model = conorbit.make_model("torus_magnetic", {"theta_scale": 0.0})
    nodes = np.linspace([0.0, 0.0], [0.3, 0.4], 9)
    T = conorbit.optimal_time(model, nodes, 0.5)
    assert T == pytest.approx(0.5)
    assert conorbit.discrete_action(model, nodes, T, 0.5)["A"] == pytest.approx(0.5)


def test_fenchel_identity_from_python():
    model = conorbit.make_model("torus_magnetic")
    q, v = np.array([0.3, 0.5]), np.array([0.2, -0.4])
    p = v + model.theta(q)
    assert model.hamiltonian(q, p) + model.lagrangian(q, v) == pytest.approx(p @ v, abs=1e-12)


def test_run_config_minimize():
    code, verdict, files = conorbit.run_config(
        "task = minimize\nscenario = flat_points\nexpect.action = 0.5\nexpect.tol = 1e-4\n"
    )
    assert code == 0
    assert verdict["passed"]
    assert files["summary.csv"].startswith("label,status,k,action,T,N")


def test_run_config_reports_schema_errors():
    code, verdict, _ = conorbit.run_config("task = minimize\nunknown.key = 1\n")
    assert code == 2
    assert "unknown.key" in verdict["error"]


def test_reproduce_hyperbolic_length():
    code, verdict, files = conorbit.reproduce("hyperbolic_length")
    assert code == 0
    row = verdict["fixtures"][0]
    assert row["provenance"] == "reference"
    for check in row["checks"]:
        assert math.isclose(check["value"], check["expected"], abs_tol=1e-6)
    assert "reproduce.csv" in files
