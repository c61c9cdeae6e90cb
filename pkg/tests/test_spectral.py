import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chfluct.spectral import (
    Field,
    GridSpec,
    NormSpec,
    SpectralField,
    Trajectory,
    basis_matrix,
    continuity_modulus,
    holder_norm,
    holder_seminorm,
    lp_norm,
    lp_norms,
    physical_values,
    spectral_coeffs,
    to_physical,
    to_spectral,
)


def test_grid_defaults_and_axes():
    g = GridSpec()
    assert (g.d, g.n, g.T, g.nt) == (1, 64, 0.1, 2000)
    assert g.shape == (64,)
    assert g.dt == pytest.approx(5e-5)
    assert np.allclose(g.axis, np.pi * (np.arange(64) + 0.5) / 64)
    assert g.times[-1] == pytest.approx(0.1)


@pytest.mark.parametrize("kw", [{"d": 4}, {"n": 2}, {"nt": 0}, {"T": -1.0}, {"n": 3.5}])
def test_grid_rejects_bad_input(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_basis_is_orthonormal_under_node_quadrature():
    n = 12
    B = basis_matrix(n)
    assert np.allclose(B @ B.T * (np.pi / n), np.eye(n), atol=1e-13)


@pytest.mark.parametrize("d,n", [(1, 12), (2, 8), (3, 6)])
def test_fast_transform_matches_dense_basis(d, n, rng):
    grid = GridSpec(d, n)
    u = rng.standard_normal(grid.shape)
    B = basis_matrix(n) * (np.pi / n)
    ref = u
    for ax in range(d):
        ref = np.moveaxis(np.tensordot(B, ref, axes=([1], [ax])), 0, ax)
    assert np.allclose(spectral_coeffs(u, grid), ref, atol=1e-12)


def test_single_mode_has_single_coefficient():
    grid = GridSpec(2, 16)
    x, y = grid.mesh()
    u = np.cos(3 * x) * np.cos(5 * y)
    c = spectral_coeffs(u, grid)
    expected = np.zeros(grid.shape)
    expected[3, 5] = math.pi / 2  # 1 / (sqrt(2/pi))^2
    assert np.allclose(c, expected, atol=1e-12)


def test_constant_field_maps_to_mode_zero():
    grid = GridSpec(1, 32)
    c = spectral_coeffs(np.full(grid.shape, 2.0), grid)
    assert c[0] == pytest.approx(2.0 * math.sqrt(math.pi))
    assert np.allclose(c[1:], 0, atol=1e-13)


@given(
    st.sampled_from([(1, 8), (1, 33), (2, 6), (3, 4)]),
    st.integers(0, 2**32 - 1),
)
def test_round_trip_and_parseval_property(shape, seed):
    grid = GridSpec(*shape)
    u = np.random.default_rng(seed).standard_normal((3,) + grid.shape)
    c = spectral_coeffs(u, grid)
    assert np.allclose(physical_values(c, grid), u, atol=1e-12)
    energy = np.sum(c**2, axis=tuple(range(1, grid.d + 1)))
    assert np.allclose(energy, lp_norms(u, grid, 2) ** 2, rtol=1e-12)


def test_field_wrappers_and_arithmetic():
    grid = GridSpec(1, 16)
    f = Field.from_function(grid, lambda x: np.cos(x))
    g = to_physical(to_spectral(f))
    assert np.allclose(f.values, g.values)
    h = (f + 1.0) * 2.0 - f
    assert np.allclose(h.values, f.values + 2.0)
    assert np.allclose((-f).values, -f.values)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        Field(grid, np.zeros(8))
    with pytest.raises(ValueError):
        SpectralField(grid, np.full(16, np.nan))


def test_lp_norm_of_constant_and_cosine():
    grid = GridSpec(1, 64)
    one = Field(grid, np.ones(grid.shape))
    assert lp_norm(one, 2) == pytest.approx(math.sqrt(math.pi))
    assert lp_norm(one, 3) == pytest.approx(math.pi ** (1 / 3))
    c = Field.from_function(grid, np.cos)
    assert lp_norm(c, 2) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
    assert lp_norm(c, 1) == pytest.approx(2.0, rel=1e-3)
    with pytest.raises(ValueError):
        lp_norm(c, 0.5)


@given(arrays(float, (2, 10), elements=st.floats(-10, 10)), st.sampled_from([1.0, 1.5, 2.0, 4.0]))
def test_lp_norm_triangle_inequality(a, p):
    grid = GridSpec(1, 10)
    lhs = lp_norms(a[0] + a[1], grid, p)
    assert lhs <= lp_norms(a[0], grid, p) + lp_norms(a[1], grid, p) + 1e-9


def test_norm_spec_checks():
    with pytest.raises(ValueError):
        NormSpec(p=0.5)
    with pytest.raises(ValueError):
        NormSpec(p=3, q=2)
    with pytest.raises(ValueError):
        NormSpec(alpha=1.0)
    assert NormSpec(alpha=0.2).holder_violations(1, 1.0) == []
    issues = NormSpec(alpha=0.4).holder_violations(1, 1.0)
    assert any("0.375" in s for s in issues)
    assert any("H.4" in s for s in issues)
    assert NormSpec(alpha=0.1).holder_violations(3, 1.0) == []
    assert NormSpec(alpha=0.13).holder_violations(3, 1.0)


def _linear_path(slope=2.0, nt=10):
    grid = GridSpec(1, 8, 1.0, nt)
    frames = slope * grid.times[:, None] * np.ones(grid.shape)
    return Trajectory(grid, grid.times, frames)


def test_holder_norm_of_linear_path_against_brute_force():
    tr = _linear_path()
    ns = NormSpec(alpha=0.5)
    # ||f(t) - f(s)||_2 = 2 |t - s| sqrt(pi); the quotient peaks at the widest gap
    expected_semi = 2 * math.sqrt(math.pi) * 1.0**0.5
    sup = 2 * math.sqrt(math.pi)
    assert holder_norm(tr, ns) == pytest.approx(sup + expected_semi)
    brute = max(
        lp_norms(tr.frames[j] - tr.frames[i], tr.grid, 2) / (tr.times[j] - tr.times[i]) ** 0.5
        for i in range(len(tr))
        for j in range(i + 1, len(tr))
    )
    assert holder_seminorm(tr.frames, tr.grid, tr.dt, 2, 0.5) == pytest.approx(brute)


def test_continuity_modulus_vanishes_with_delta():
    tr = _linear_path(nt=100)
    ns = NormSpec(alpha=0.5)
    w_small = continuity_modulus(tr, ns, 0.01)
    w_big = continuity_modulus(tr, ns, 0.5)
    assert w_small < w_big
    assert w_small == pytest.approx(2 * math.sqrt(math.pi) * 0.01**0.5)
    with pytest.raises(ValueError):
        continuity_modulus(tr, ns, 0.001)


def test_trajectory_validation_and_caches():
    grid = GridSpec(1, 8, 1.0, 4)
    frames = np.zeros((5, 8))
    tr = Trajectory(grid, grid.times, frames)
    assert len(tr) == 5 and tr.dt == pytest.approx(0.25)
    assert tr.coeffs() is tr.coeffs()
    assert tr.subsample(2).dt == pytest.approx(0.5)
    with pytest.raises(ValueError):
        Trajectory(grid, grid.times[::-1], frames)
    with pytest.raises(ValueError):
        Trajectory(grid, grid.times, np.zeros((4, 8)))
    with pytest.raises(ValueError):
        Trajectory(grid, grid.times, np.full((5, 8), np.inf))
