"""Experiment drivers at reduced sizes: shapes, invariants, and the
error integrals they report."""
import numpy as np
import pytest

from ratioloss import figure1, figure2, figure3, target_function
from ratioloss.figures import FIGURE1_FAMILIES, _l2_sq_piecewise
from ratioloss.synth import default_pair, gaussian_pair


def test_figure1_reduced():
    res = figure1(quad_nodes=201, max_iter=150)
    assert set(res["fits"]) == set(FIGURE1_FAMILIES)
    for name in FIGURE1_FAMILIES:
        pf = res["fits"][name]
        assert pf.theta[1] > 0.0  # intercept kept positive by construction
        assert res["sup_errors"][name] > 0.0


def test_figure2_reduced():
    res = figure2(seed=0, sizes=(10,), alphas=(1e-2,), n_seeds=2,
                  grid_n=41, max_iter=60)
    assert len(res["cells"]) == 2
    for cell in res["cells"]:
        assert cell.curve.shape == (41,)
        assert len(cell.max_abs) == 2
        assert cell.median_max_abs == pytest.approx(
            float(np.median(cell.max_abs)))
    _, exact = gaussian_pair()
    assert np.allclose(res["exact_beta"], exact(res["grid"]))


def test_figure2_replicates_differ():
    res = figure2(seed=0, sizes=(10,), alphas=(1e-2,), n_seeds=2,
                  families=("kulsif",), grid_n=21, max_iter=40)
    maxima = res["cells"][0].max_abs
    assert maxima[0] != maxima[1]


def test_figure3_reduced():
    res = figure3(seed=0, n_src=60, n_tgt=60, quad_nodes=201,
                  max_iter=150, l2_nodes=501)
    for key in ("uniform", "exact", "ew", "lr"):
        assert key in res["weightings"]
        assert np.all(res["weightings"][key] >= 0.0)
        assert res["l2p_sq"][key] > 0.0
        assert res["l2q_sq"][key] > 0.0
    assert res["l2p_sq"]["uniform"] != res["l2p_sq"]["exact"]
    grid = np.linspace(-1.0, 1.0, 11)
    for key in ("uniform", "exact", "ew", "lr"):
        assert np.all(np.isfinite(res["predictors"][key](grid)))


def test_l2_integral_of_constant_offset():
    # density integrates to one, so a unit offset has squared error one
    spec = default_pair()
    off = lambda xs: target_function(xs) + 1.0
    assert _l2_sq_piecewise(off, spec, "p", n_nodes=501) == pytest.approx(
        1.0, abs=1e-12)
    assert _l2_sq_piecewise(target_function, spec, "q",
                            n_nodes=501) == pytest.approx(0.0, abs=1e-15)
