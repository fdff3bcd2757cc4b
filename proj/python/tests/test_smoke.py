import math
import pathlib

import numpy as np
import pytest

import twophoton as tp

SCN = pathlib.Path(__file__).resolve().parents[2] / "scenarios"


def test_cavity_numbers():
    assert 15250 <= tp.finesse(2e-4, 4e-6) <= 15550
    assert tp.free_spectral_range(1.464e-2) == pytest.approx(10.24e9, rel=1e-3)
    short, long_ = tp.subconfocal_lengths(0.05, 4)
    assert short + long_ == pytest.approx(0.1, rel=1e-15)
    s = tp.cavity_summary()
    assert s["cluster_spacing_hz"] == pytest.approx(2.56e9, rel=1e-3)


def test_concurrence():
    assert tp.concurrence(1, 1) == pytest.approx(1.0)
    assert tp.concurrence(1, 0) == 0.0
    assert tp.concurrence(0.8, 0.6) == pytest.approx(0.96)
    with pytest.raises(ValueError):
        tp.concurrence(0, 0)


def test_calibration_roots():
    c = tp.calibrate()
    assert c["gain_per_us"] > 0
    assert "[model]" in c["model"]
    with pytest.raises(RuntimeError):
        tp.calibrate(n_on=1e5, n_unstable=2e5)


def test_trigger_run():
    on = tp.simulate(str(SCN / "paper_fig3.scn"))
    assert on["metrics"]["final_n_tot"] == pytest.approx(2.2e6, rel=0.05)
    series = on["series"]
    assert series["a_z"].dtype == np.complex128
    assert np.all(series["a_x"] == 0)
    off = tp.simulate(str(SCN / "paper_fig3.scn"), {"event.1.n_inj": "1.1e5"})
    assert off["metrics"]["final_n_tot"] < 1


def test_bad_override():
    with pytest.raises(ValueError):
        tp.simulate(str(SCN / "paper_fig3.scn"), {"model.no_such_key": "1"})
