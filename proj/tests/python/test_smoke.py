import json
import math
import os

import numpy as np
import pytest

import tamed_geometry as tg

CONFIGS = os.environ.get("TAMED_CONFIGS", os.path.join(os.path.dirname(__file__), "..", "..", "configs"))


def test_comparison_functions():
    assert tg.s_kappa(0.0, 2.0) == pytest.approx(2.0)
    assert tg.s_kappa(-1.0, 1.0) == pytest.approx(math.sinh(1.0), rel=1e-14)
    assert tg.c_kappa(-1.0, 1.0) == pytest.approx(math.cosh(1.0), rel=1e-14)
    with pytest.raises(tg.DomainError):
        tg.s_kappa(-1.0, -1.0)


def test_catalog():
    names = {name for name, _ in tg.catalog()}
    assert {"plane", "catenoid", "cylinder", "helicoid"} <= names


def test_radial_eigenvalue_closed_form():
    lam, t, v, dv = tg.radial_eigenvalue(3, 0.0, 1.0)
    assert lam == pytest.approx(math.pi**2, abs=1e-6)
    t = np.asarray(t)
    mid = len(t) // 2
    assert v[mid] == pytest.approx(math.sin(math.pi * t[mid]) / (math.pi * t[mid]), abs=1e-8)


def test_tamedness_plane_and_cylinder():
    plane = tg.tamedness({"immersion": {"builtin": "plane"}, "resolution": [64, 64], "radii": [0.5, 1, 2, 3]})
    assert all(a == 0.0 for a in plane["a_i"])
    cyl = tg.tamedness({"immersion": {"builtin": "cylinder"}, "resolution": [64, 128], "radii": [1, 2, 4, 6, 8]})
    assert cyl["divergent"]


def test_vertex_table():
    table = tg.vertices({"immersion": {"builtin": "plane"}, "resolution": [16, 16]})
    assert table.shape == (256, 2 + 3 + 4)
    rho_m, rho_n = table[:, 5], table[:, 6]
    assert np.all(rho_n <= rho_m + 1e-9)


def test_cli_round_trip():
    code, out, _ = tg.run(["spectral", "--l", "3", "--mu", "0", "--R", "1"])
    assert code == 0
    assert json.loads(out)["lambda1"] == pytest.approx(math.pi**2, abs=1e-6)
    code, _, err = tg.run(["frobnicate"])
    assert code == 1


def test_not_tamed_exit_code():
    code, out, err = tg.run(["properness", "--config", os.path.join(CONFIGS, "cylinder.json")])
    assert code == 2
    assert "not tamed" in (out + err)


def test_errors_are_typed():
    with pytest.raises(tg.ConfigError):
        tg.tamedness({"c": 0.5})
    with pytest.raises(tg.LevelError):
        tg.choose_l(2, 1.5)


def test_tone_bound():
    report = tg.tone_bound(2, 0.5, -1.0, 1.0)
    assert report["l"] == 6
    assert report["C"] > 1.0
