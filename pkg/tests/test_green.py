import math

import numpy as np
import pytest
from scipy import integrate

from chfluct.green import (
    EigenTable,
    eigenfunction_squares,
    j_operator,
    j_operator_path,
    kernel_l2_profile,
    semigroup_apply,
    spacetime_l2,
)
from chfluct.spectral import GridSpec, SpectralField, Trajectory, spectral_coeffs


def _kernel(t, x, y, n):
    """G_t(x, y) in 1-D, synthesised from the cosine series with n modes."""
    k = np.arange(n)
    c2 = np.where(k == 0, 1 / math.pi, 2 / math.pi)
    return np.sum(c2[:, None] * np.exp(-(k[:, None] ** 4) * t) * np.cos(k[:, None] * x) * np.cos(k[:, None] * y), axis=0)


def test_eigenvalues_are_squared_laplacian():
    eig = EigenTable(GridSpec(2, 4))
    assert eig.lam[1, 2] == (1 + 4) ** 2
    assert eig.ksq[3, 0] == 9
    assert eig.lambda_max == (9 + 9) ** 2


def test_propagator_limits_at_mode_zero():
    p = EigenTable(GridSpec(1, 8)).propagators(1e-3)
    assert p.decay[0] == 1.0 and p.psi[0] == 1e-3 and p.noise[0] == 1.0 and p.drift[0] == 0.0
    lam = 16.0
    assert p.psi[2] == pytest.approx(-math.expm1(-lam * 1e-3) / lam)
    assert p.noise[2] ** 2 * 1e-3 == pytest.approx(-math.expm1(-2 * lam * 1e-3) / (2 * lam))
    with pytest.raises(ValueError):
        EigenTable(GridSpec(1, 8)).propagators(0.0)


def test_semigroup_eigen_action_and_composition(rng):
    grid = GridSpec(1, 16)
    eig = EigenTable(grid)
    c = SpectralField(grid, rng.standard_normal(16))
    a = semigroup_apply(semigroup_apply(c, 0.01, eig), 0.02, eig)
    b = semigroup_apply(c, 0.03, eig)
    assert np.allclose(a.coeffs, b.coeffs, rtol=1e-12, atol=1e-15)
    e3 = np.zeros(16)
    e3[3] = 1.0
    out = semigroup_apply(SpectralField(grid, e3), 0.1, eig).coeffs
    assert out[3] == pytest.approx(math.exp(-81 * 0.1), rel=1e-14)
    with pytest.raises(ValueError):
        semigroup_apply(c, -1.0, eig)


def test_profile_matches_kernel_quadrature():
    n, t, x = 32, 1e-3, 1.1
    ys = np.linspace(0, math.pi, 4001)
    quad = integrate.trapezoid(_kernel(t, x, ys, n) ** 2, ys)
    eig = EigenTable(GridSpec(1, n))
    assert kernel_l2_profile(t, [x], eig) == pytest.approx(quad, rel=1e-6)


def test_spacetime_integral_matches_time_quadrature():
    eig = EigenTable(GridSpec(1, 32))
    x = [0.7]
    ref, _ = integrate.quad(lambda s: kernel_l2_profile(s, x, eig), 0, 0.01, limit=200, points=[1e-6, 1e-4])
    assert spacetime_l2(0.0, 0.01, x, eig) == pytest.approx(ref, rel=1e-6)
    assert spacetime_l2(0.02, 0.03, x, eig) == pytest.approx(spacetime_l2(0.0, 0.01, x, eig))


def test_profile_saturates_at_long_times():
    eig = EigenTable(GridSpec(1, 32))
    assert kernel_l2_profile(50.0, [1.0], eig) == pytest.approx(1 / math.pi)


def test_eigenfunction_squares_sum_rule():
    grid = GridSpec(2, 8)
    phi2 = eigenfunction_squares([0.3, 1.2], grid)
    assert phi2[0, 0] == pytest.approx(1 / math.pi**2)
    with pytest.raises(ValueError):
        eigenfunction_squares([0.3], grid)


def test_truncation_criterion():
    eig = EigenTable(GridSpec(1, 64))
    assert eig.truncation_ok(1e-4)
    assert not EigenTable(GridSpec(1, 8)).truncation_ok(1e-4)


def test_j_operator_on_single_mode_matches_closed_form():
    grid = GridSpec(1, 16, 0.1, 100)
    x = grid.axis
    frames = np.broadcast_to(np.cos(2 * x), (101, 16))
    v = Trajectory(grid, grid.times, frames)
    J = j_operator(v, 0.0, 0.1)
    lam = 16.0
    exact = -4 * (-math.expm1(-lam * 0.1)) / lam * np.cos(2 * x)
    assert np.allclose(J.values, exact, atol=1e-12)
    # restarting at t0 gives the same value for a time-independent source
    J2 = j_operator(v, 0.05, 0.1)
    exact2 = -4 * (-math.expm1(-lam * 0.05)) / lam * np.cos(2 * x)
    assert np.allclose(J2.values, exact2, atol=1e-12)
    with pytest.raises(ValueError):
        j_operator(v, 0.1, 0.05)
    with pytest.raises(ValueError):
        j_operator(v, 0.0, 0.0123456)


def test_j_operator_kills_constants():
    grid = GridSpec(1, 8, 0.1, 10)
    path = j_operator_path(spectral_coeffs(np.ones((11, 8)), grid), grid.dt, EigenTable(grid))
    assert np.allclose(path, 0.0)
