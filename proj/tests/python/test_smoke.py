import math

import pytest

import lorentz_eikonal as le


def minkowski():
    return le.Spacetime.minkowski(2, -1.0, 1.0, [(-3.0, 3.0)])


def test_linear_datum_closed_form():
    st = minkowski()
    s = le.make_cauchy_surface(st, 1.0, le.InitialDatum.linear([0.75], 0.0))
    r = le.solve_at(st, s, [0.0, 0.0])
    assert abs(r.value + 1.25) < 1e-9
    assert abs(r.minimizers[0][1] + 0.6) < 1e-5
    assert r.status == "InteriorMin"


def test_grid_shape_and_values():
    st = minkowski()
    s = le.make_cauchy_surface(st, 1.0, le.InitialDatum.constant(0.0))
    u = le.solve_grid(st, s, -1.0, 1.0, 5, [(-1.0, 1.0)], [3])
    assert u.shape == (5, 3)
    for k in range(5):
        t = -1.0 + 2.0 * k / 5
        assert all(abs(v - (t - 1.0)) < 1e-9 for v in u[k])


def test_distance_relation_and_bounds():
    st = minkowski()
    assert abs(le.lorentz_distance(st, [0, 0], [0.9, 0.3]) - math.sqrt(0.72)) < 1e-12
    assert le.relation(st, [0, 0], [0.5, 0.5]) == "CausalOnly"
    assert le.comparison_bound_f_c(0.0, 2.0) == 0.5
    assert le.counterexample_value(-1.0, [-1.5, 0.0]) == pytest.approx(-0.5)


def test_errors_carry_codes():
    st = minkowski()
    s = le.make_cauchy_surface(st, 0.0, le.InitialDatum.constant(0.0))
    with pytest.raises(le.LorentzEikonalError) as info:
        le.solve_at(st, s, [0.5, 0.0])
    assert info.value.code == "NotInPast"


def test_run_counterexample(tmp_path):
    cfg = {
        "task": "counterexample",
        "spacetime": {"kind": "paper_minkowski_2d", "dim": 2, "slab": {"t": [-2, 0], "space": [[-3, 3]]}},
        "surface": {"level": 0.0, "datum": {"type": "constant", "value": 0.0}},
        "task_params": {"c": -1.0},
    }
    code, summary, report = le.run(cfg, out_dir=str(tmp_path))
    assert code == 0, summary
    assert set(report) == {"task", "config_digest", "seed", "results", "violations", "timings"}
    assert report["results"]["orientation"]["verdict"] == "Mixed"
    assert (tmp_path / "counterexample.csv").exists()


def test_run_rejects_bad_tolerance():
    cfg = {
        "task": "solve",
        "spacetime": {"kind": "minkowski", "dim": 2, "slab": {"t": [-1, 1], "space": [[-3, 3]]}},
        "surface": {"level": 1.0, "datum": {"type": "constant", "value": 0.0}},
        "tolerances": {"solve": 1.0},
    }
    with pytest.raises(le.LorentzEikonalError) as info:
        le.run(cfg)
    assert info.value.code == "InvalidConfig"
