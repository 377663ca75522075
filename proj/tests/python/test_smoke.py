import json
import math

import numpy as np
import pytest

import oamturb


def test_crosstalk_pinned_values():
    assert oamturb.crosstalk(0, 5.12) == pytest.approx(0.10559020, abs=1e-7)
    assert oamturb.crosstalk(1, 1.0) == pytest.approx(0.16864846, abs=1e-7)
    assert oamturb.crosstalk(0, 0.0) == 1.0


def test_matrix_is_symmetric_toeplitz():
    w = oamturb.analytic_matrix(5, 2.0)
    assert w.shape == (5, 5)
    np.testing.assert_allclose(w, w.T, atol=1e-15)
    assert np.allclose(np.diag(w, 1), w[1, 0])
    assert (w.sum(axis=0) <= 1.0).all()


def test_screen_shape_and_determinism():
    a = oamturb.generate_screen(4.0, seed=7, resolution=64)
    b = oamturb.generate_screen(4.0, seed=7, resolution=64)
    c = oamturb.generate_screen(4.0, seed=8, resolution=64)
    assert a.shape == (64, 64)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        oamturb.generate_screen(-1.0)


def test_structure_function_of_a_ramp():
    n, width = 64, 2.0
    px = width / n
    ramp = np.tile(3.0 * (np.arange(n) + 0.5 - n / 2) * px, (n, 1))
    (value,) = oamturb.structure_function([ramp], [10 * px], width=width, binning="x_axis")
    assert value == pytest.approx((3.0 * 10 * px) ** 2, rel=1e-10)


def test_modes_are_unit_power():
    f = oamturb.oam_mode(2, resolution=128)
    assert f.dtype == np.complex128
    assert np.sum(np.abs(f) ** 2) * (2.0 / 128) ** 2 == pytest.approx(1.0, rel=1e-12)
    g = oamturb.ang_mode(1, 5, resolution=128)
    assert g.shape == (128, 128)


def test_blahut_arimoto_binary_symmetric():
    eps = 0.1
    w = np.array([[1 - eps, eps], [eps, 1 - eps]])
    r = oamturb.blahut_arimoto(w)
    h = -eps * math.log2(eps) - (1 - eps) * math.log2(1 - eps)
    assert r["capacity"] == pytest.approx(1 - h, abs=1e-9)
    assert r["converged"]
    assert oamturb.mutual_information(w, [0.5, 0.5]) == pytest.approx(1 - h, abs=1e-12)


def test_sorter_and_normalization():
    s = oamturb.sorter_response("sinc", 5)
    assert s[2, 2] == pytest.approx(0.7736950099, abs=1e-9)
    w = oamturb.normalize(s @ oamturb.analytic_matrix(5, 1.0))
    np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-12)
    erased = oamturb.normalize(oamturb.analytic_matrix(5, 1.0), "erasure")
    assert erased.shape == (6, 5)


def test_capacity_curve_identity_limit():
    curve = oamturb.capacity_curve([0.0, 1.0, 10.0], dimension=7, sorter="ideal")
    assert curve["capacity"][0] == pytest.approx(math.log2(7), abs=1e-6)
    assert curve["capacity"][0] > curve["capacity"][1] > curve["capacity"][2]
    assert all(curve["converged"])


def test_montecarlo_matrix_returns_errors():
    mean, se = oamturb.montecarlo_matrix(3, 2.0, screens=4, resolution=64)
    assert mean.shape == se.shape == (3, 3)
    assert (se > 0).all()


def test_strength_grid_and_config_errors(tmp_path):
    assert len(oamturb.strength_grid("0.1:10:5:log")) == 5
    with pytest.raises(oamturb.ConfigError):
        oamturb.strength_grid("1:0:5:log")
    with pytest.raises(oamturb.ConfigError):
        oamturb.run_experiment(json.dumps({"experiment": "fig4_sweep", "bogus": 1}), tmp_path)


def test_run_experiment_writes_outputs(tmp_path):
    cfg = {"experiment": "crosstalk_table", "parameters": {"dimension": 3, "d_over_r0": 2.0}}
    assert oamturb.run_experiment(json.dumps(cfg), tmp_path) == 0
    assert (tmp_path / "config.json").exists()
