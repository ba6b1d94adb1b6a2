import math

import numpy as np
import pytest

from conftest import POS
from excursion import compare as cmp
from excursion.exact_oracle import joint_mass


def test_comparison_summary_uses_regime_rows():
    c = cmp.Comparison(
        "max",
        np.arange(4),
        None,
        np.full(4, 10),
        np.array([1.0, 2.0, 3.0, 5.0]),
        np.array([1.0, 1.0, 0.0, 4.0]),
        np.array([True, True, True, False]),
    )
    assert np.isinf(c.rel_err[2])
    s = c.summary()
    assert s["regime_rows"] == 2 and s["max_rel_err"] == 1.0 and s["median_rel_err"] == 0.5
    rows = list(c.rows())
    assert rows[0] == (0, None, 10, 1.0, 1.0, 0.0, True)


def test_mode_box_centred(dstar_model):
    ks, js = cmp.mode_box(dstar_model, 30, 3)
    assert ks[0] < 100 < ks[-1] and js[0] < 100 < js[-1]
    assert ks[0] >= 1


def test_joint_rows_use_tau(dstar_model):
    c = cmp.compare_joint(dstar_model, 10, 2)
    i = len(c.exact) // 3
    x, k, n = int(c.x[i]), int(c.k[i]), int(c.n[i])
    assert c.exact[i] == pytest.approx(joint_mass(dstar_model, x, k, n), rel=1e-14)


def test_total_variation_bounds(dstar_model):
    for which in ("theta", "tau-theta", "tau"):
        tv = cmp.total_variation(dstar_model, 25, which)
        assert 0 < tv < 1


def test_scaled_sup_error():
    c = cmp.compare_max(POS, 100)
    assert cmp.scaled_sup_error(c) == pytest.approx(np.abs(c.exact - c.approx).max() * 10)
    assert math.isfinite(cmp.compare_llt(POS, 64, 1).summary()["max_rel_err"])
