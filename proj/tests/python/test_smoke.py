import math

import numpy as np
import pytest

import homog


def test_identity_cell_is_exact():
    r = homog.solve_cell("identity", 8)
    assert np.allclose(r["a0"], np.eye(2), atol=1e-10)
    assert abs(r["m_integral"] - 1.0) < 1e-10
    assert r["warnings"] == []


def test_paper41_constants():
    a0 = homog.oracle_a0("paper41")
    assert a0[0, 0] == pytest.approx(1.4684, abs=5e-4)
    assert a0[1, 1] == pytest.approx(2.6037, abs=5e-4)
    fem = homog.solve_cell("paper41", 32)["a0"]
    assert np.max(np.abs(fem - a0)) < 1e-3


def test_sep_diag_closed_form():
    assert homog.oracle_a0("sep_diag(2)")[0, 0] == pytest.approx(math.sqrt(6.0), abs=1e-12)


def test_paper43_origin():
    assert homog.oracle_a0_at("paper43", 0.0, 0.0)[1, 1] == pytest.approx(2.0, abs=1e-12)


def test_known_u0_center():
    assert homog.known_u0(0.5, 0.5) == pytest.approx(1.0 / 32.0)


def test_eoc_marks_undefined():
    e = homog.eoc([1.0, 0.5, 0.25])
    assert math.isnan(e[0])
    assert e[1:] == pytest.approx([1.0, 1.0])
    assert math.isnan(homog.eoc([1.0, 0.0])[1])


def test_cordes_identity():
    assert homog.cordes_delta("identity") == 1.0


def test_study_table(tmp_path):
    r = homog.run_study('study = "homogenized_matrix"\ncell_ladder = [4, 8, 16]\n', str(tmp_path))
    assert r["parameter"] == "n"
    assert r["params"] == [4.0, 8.0, 16.0]
    assert (tmp_path / "homogenized_matrix.csv").read_text() == r["csv"]


def test_config_errors():
    with pytest.raises(homog.ConfigError):
        homog.run_study("colour = 1\n")
    with pytest.raises(homog.LookupError):
        homog.oracle_a0("nonsense")
