import math

import numpy as np
import pytest

from chfluct._mc import FAIL, INCONCLUSIVE, PASS
from chfluct.green import EigenTable
from chfluct.lab import (
    StudyReport,
    clt_study,
    default_lags,
    holder_study,
    j_bound_exponent,
    kernel_estimate_fits,
    linear_mode_variance,
    linear_variance_study,
    mdp_scaling_sweep,
    moment_band,
)
from chfluct.model import InitialSpec, ModelSpec, ScalingSpec
from chfluct.spectral import GridSpec, NormSpec

EPS4 = [1e-2, 1e-3, 3e-4, 1e-4]


def test_report_status_and_rows():
    rep = StudyReport("x")
    rep.add("c", "q", 1.0, 0.1)
    rep.check("a", PASS)
    assert rep.status == PASS
    rep.check("b", INCONCLUSIVE)
    assert rep.status == INCONCLUSIVE
    other = StudyReport("y")
    other.check("c", FAIL)
    rep.merge(other, "y.")
    assert rep.status == FAIL and "y.c" in rep.assertions
    assert rep.rows[0] == {"study": "x", "cell": "c", "quantity": "q", "estimate": 1.0, "stderr": 0.1}


def test_moment_bands():
    assert moment_band(1) == pytest.approx((0.35, 0.65))
    assert moment_band(2) == pytest.approx((0.8, 1.2))


def test_clt_linear_additive_model_is_machine_zero():
    grid = GridSpec(1, 16, 0.05, 200)
    m = ModelSpec(grid, (0, 0, -1, 0), u0=InitialSpec("single_mode"), allow_degenerate=True)
    rep = clt_study(EPS4, 100, NormSpec(), m, seed=1)
    means = [r["estimate"] for r in rep.rows if r["quantity"].startswith("E|V(T)|")]
    assert max(means) < 1e-10
    assert rep.summary["roundoff_only"]
    assert rep.assertions["slope_q1"]["status"] == INCONCLUSIVE


def test_clt_small_design_is_inconclusive_not_passed():
    m = ModelSpec(GridSpec(1, 16, 0.05, 200))
    rep = clt_study([1e-2, 1e-3, 1e-4], 120, NormSpec(), m, seed=2)
    assert rep.status == INCONCLUSIVE
    assert rep.assertions["design"]["status"] == INCONCLUSIVE
    slope = rep.summary["slopes"]["q=1"]["slope"]
    assert slope == pytest.approx(0.5, abs=0.1)


def test_clt_coarse_grid_passes():
    m = ModelSpec(GridSpec(1, 16, 0.05, 200))
    rep = clt_study([1e-2, 3e-3, 1e-3, 3e-4, 1e-4], 100, NormSpec(), m, seed=3)
    assert rep.status == PASS, rep.assertions


def test_holder_study_u0_and_bad_process():
    m = ModelSpec(GridSpec(1, 32, 0.1, 1000))
    rep = holder_study("u0", NormSpec(), 1, m)
    assert rep.summary["slope"] > 0.9
    assert rep.summary["admissible_alpha_sup"] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        holder_study("V", NormSpec(), 1, m)
    with pytest.raises(ValueError):
        holder_study("Y", NormSpec(), 10, m, lags=[0, 3])


def test_default_lags_cover_two_decades():
    lags = default_lags(2000)
    assert lags[0] == 1 and lags[-1] == 100 and np.all(np.diff(lags) > 0)


def test_mdp_sweep_requires_power_family():
    m = ModelSpec(GridSpec(1, 16, 0.05, 100))
    with pytest.raises(ValueError):
        mdp_scaling_sweep(ScalingSpec(family="one"), EPS4, 10, m)


def test_mdp_sweep_small():
    m = ModelSpec(GridSpec(1, 16, 0.05, 200))
    rep = mdp_scaling_sweep(ScalingSpec(theta=0.25), EPS4, 30, m, seed=4, thetas=[0.1])
    assert rep.status == PASS, rep.assertions
    means = np.array(rep.summary["mean_sup_Z"])
    assert means[:, 0] == pytest.approx(means[:, 0].mean(), rel=0.2)  # theta = 0 row barely moves


@pytest.mark.parametrize(
    "d,p,rho,ok",
    [(1, 2, 1, True), (3, 4, 1, False), (3, 2, 2, True), (2, 4, 4, True), (1, 2, 3, False)],
)
def test_exponent_side_conditions(d, p, rho, ok):
    if ok:
        kappa, e = j_bound_exponent(d, p, rho)
        assert e == pytest.approx(0.5 + d / 4 * (kappa - 1))
    else:
        with pytest.raises(ValueError):
            j_bound_exponent(d, p, rho)


def test_kernel_fits_reject_d3_pairs_and_pass_slopes():
    rep = kernel_estimate_fits(grids=((3, 16),), lattice=((4, 1), (2, 2)), nt=200, t_window=(1e-3, 1e-2))
    rejected = rep.summary["d=3;n=16"]["rejected"]
    assert [(r["p"], r["rho"]) for r in rejected] == [(4, 1)]
    assert rep.assertions["profile_slope_d=3;n=16"]["slope"] == pytest.approx(-0.75, abs=0.05)


def test_linear_mode_variance_limits():
    eig = EigenTable(GridSpec(1, 8))
    v = linear_mode_variance(eig, [0.1, 1e3], 0.5)
    assert v[0, 0] == pytest.approx(0.05)
    assert v[1, 2] == pytest.approx(0.5 / (2 * 16))


def test_linear_variance_study_small():
    rep = linear_variance_study(replicas=400, grid=GridSpec(1, 8, 0.1, 200), seed=5, rtol=0.1)
    assert rep.status == PASS


def test_holder_ceiling_in_three_dimensions():
    m = ModelSpec(GridSpec(3, 16, 0.1, 400))
    rep = holder_study("Y", NormSpec(alpha=0.1), 10, m, seed=1)
    assert rep.summary["band"] == [0.0, 0.25]
    assert rep.summary["slope"] <= 0.25
