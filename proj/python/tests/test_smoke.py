import math
import os
import pathlib

import numpy as np
import pytest

import hjmra

SOURCE = pathlib.Path(os.environ.get("HJMRA_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def test_regions():
    r1 = hjmra.ball(2, [-6.0, 0.0], 2.0)
    assert r1([-6.0, 0.0]) == pytest.approx(2.0)
    assert r1([-4.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    b = hjmra.box(2, [-1.0, -2.5], [1.0, 2.5])
    assert b([0.0, 0.0]) == pytest.approx(1.0)
    d = hjmra.difference(b, r1)
    assert d.contains([0.0, 0.0])
    with pytest.raises(hjmra.GeometryError):
        hjmra.ball(2, [0.0, 0.0], -1.0)


def test_reach_1d():
    sc = hjmra.scenario("reach1d")
    cascade = hjmra.solve(sc)
    assert cascade.num_stages == 1
    v = cascade.value(1)
    x = np.linspace(-4.0, 4.0, v.grid.num_points)
    exact = 1.0 - np.maximum(0.0, np.abs(x) - 2.0)
    assert np.max(np.abs(v.slice(0) - exact)) <= 3 * 0.05
    assert cascade.query([2.5])["feasible"]
    assert not cascade.query([3.5])["feasible"]
    assert cascade.query([9.0])["out_of_domain"]


def test_cascade_run_and_round_trip(tmp_path):
    sc = hjmra.load_config(SOURCE / "configs" / "cascade1d.json")
    cascade = hjmra.solve(sc)
    rep = hjmra.run(sc, cascade)
    assert rep["satisfied"]
    assert [s["completed_target"] for s in rep["switches"]] == [1, 2]
    assert rep["states"].shape == (len(rep["times"]), 1)
    cascade.save(tmp_path / "c")
    again = hjmra.load_cascade(tmp_path / "c")
    assert again.query([0.0])["margin"] == cascade.query([0.0])["margin"]


def test_config_errors():
    with pytest.raises(hjmra.ConfigError, match=r"x0"):
        hjmra.scenario_from_json(
            '{"schema_version": 1, "name": "t",'
            ' "system": {"name": "single_integrator", "params": {"dim": 1}},'
            ' "grid": {"axes": [{"lo": -1, "hi": 1, "count": 11}]},'
            ' "task": {"t1": 1, "targets": [{"box": {"lo": [0], "hi": [1]}}]},'
            ' "x0": [0, 0]}'
        )


def test_fsa():
    ap = ["a", "b", "c", "d", "e"]
    f = hjmra.fsa("(e U a & e U b) | (e U c & e U d)", ap)
    assert f.accepts([["e"], ["a", "e"], ["e"], ["b", "e"]])
    assert not f.accepts([["e"], ["c", "e"]])
    assert not f.accepts([[]])
    assert len(f.plans()) >= 2
    with pytest.raises(hjmra.FormulaError):
        hjmra.fsa("a U", ["a"])


def test_qp():
    u, obj, slack = hjmra.solve_qp([-1.0], [1.0], np.eye(1), [0.0], [1.0], 0.5)
    assert u[0] == pytest.approx(0.5)
    assert obj == pytest.approx(0.25)
    assert slack >= -1e-9
    u, _, _ = hjmra.solve_qp([-1.0, -1.0], [1.0, 1.0], np.eye(2), [0.3, -0.2], [1.0, 0.0], -0.5)
    assert u == pytest.approx([0.3, -0.2])
    assert math.isfinite(obj)
