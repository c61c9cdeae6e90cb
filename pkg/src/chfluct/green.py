"""Green function of d/dt + Delta^2 with Neumann conditions, kept modal.

In the cosine eigenbasis the operator Delta^2 is diagonal with eigenvalues
``lambda_k = (k_1^2 + ... + k_d^2)^2``, so ``G_t`` acts on coefficients as
multiplication by ``exp(-lambda_k t)``. Nothing here ever forms ``G_t(x, y)``
as a dense matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from chfluct.spectral import Field, GridSpec, SpectralField, Trajectory, spectral_coeffs, physical_values

__all__ = [
    "EigenTable",
    "Propagators",
    "semigroup_apply",
    "kernel_l2_profile",
    "spacetime_l2",
    "j_operator",
    "j_operator_path",
    "eigenfunction_squares",
]


@dataclass(frozen=True)
class Propagators:
    """Per-mode step factors for one time step ``dt``.

    ``decay``  exp(-lambda dt), the exact linear flow.
    ``psi``    (1 - exp(-lambda dt)) / lambda, with the limit dt at lambda = 0.
    ``drift``  -|k|^2 * psi, the weight of a frozen Delta(source) term.
    ``noise``  sqrt((1 - exp(-2 lambda dt)) / (2 lambda dt)), limit 1 at lambda = 0;
               scaling a N(0, dt) increment by it reproduces the exact
               stochastic-convolution variance of one step.
    """

    dt: float
    decay: np.ndarray
    psi: np.ndarray
    drift: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True, eq=False)
class EigenTable:
    grid: GridSpec

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(k.astype(float) ** 2 for k in self.grid.wavenumbers())

    @cached_property
    def lam(self) -> np.ndarray:
        return self.ksq**2

    @property
    def lambda_max(self) -> float:
        return float(self.lam.max())

    def propagators(self, dt: float) -> Propagators:
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        lam = self.lam
        decay = np.exp(-lam * dt)
        with np.errstate(divide="ignore", invalid="ignore"):
            psi = np.where(lam > 0, -np.expm1(-lam * dt) / lam, dt)
            noise = np.where(lam > 0, np.sqrt(-np.expm1(-2 * lam * dt) / (2 * lam * dt)), 1.0)
        return Propagators(dt, decay, psi, -self.ksq * psi, noise)

    def truncation_ok(self, t_min: float, tol: float = 1e-12) -> bool:
        """Whether the highest retained mode is negligible at ``t_min``."""
        return math.exp(-2 * self.lambda_max * t_min) < tol


def semigroup_apply(c: SpectralField, t: float, eig: EigenTable) -> SpectralField:
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return SpectralField(c.grid, np.exp(-eig.lam * t) * c.coeffs)


def eigenfunction_squares(x: Sequence[float], grid: GridSpec) -> np.ndarray:
    """phi_k(x)^2 for every multi-index k, as an array of shape grid.shape."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (grid.d,):
        raise ValueError(f"x must have {grid.d} coordinates, got {x.shape}")
    k = np.arange(grid.n)
    c2 = np.where(k == 0, 1 / math.pi, 2 / math.pi)
    out = np.ones(grid.shape)
    for axis, xi in enumerate(x):
        factor = c2 * np.cos(k * xi) ** 2
        shape = [1] * grid.d
        shape[axis] = grid.n
        out = out * factor.reshape(shape)
    return out


def kernel_l2_profile(t: float, x: Sequence[float], eig: EigenTable) -> float:
    """int_D G_t(x, y)^2 dy through its modal series, truncated at n modes per axis."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    phi2 = eigenfunction_squares(x, eig.grid)
    return float(np.sum(np.exp(-2 * eig.lam * t) * phi2))


def spacetime_l2(t0: float, t: float, x: Sequence[float], eig: EigenTable) -> float:
    """int_{t0}^t int_D G_{t-s}(x, y)^2 dy ds, integrated in time exactly per mode."""
    if not t > t0:
        raise ValueError(f"need t > t0, got t0={t0}, t={t}")
    if t0 < 0:
        raise ValueError(f"t0 must be non-negative, got {t0}")
    s = t - t0
    phi2 = eigenfunction_squares(x, eig.grid)
    lam = eig.lam
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(lam > 0, -np.expm1(-2 * lam * s) / (2 * lam), s)
    return float(np.sum(w * phi2))


def _time_index(times: np.ndarray, t: float) -> int:
    i = int(np.argmin(np.abs(times - t)))
    if not math.isclose(times[i], t, rel_tol=1e-9, abs_tol=1e-12 * max(1.0, abs(t))):
        raise ValueError(f"time {t} is not on the trajectory grid")
    return i


def j_operator_path(v_coeffs: np.ndarray, dt: float, eig: EigenTable) -> np.ndarray:
    """Coefficients of J(v)(0, t_j) for every frame j, v held piecewise constant.

    ``v_coeffs`` has the time axis first. Each step integrates the source
    exactly under the linear flow: a <- exp(-lambda dt) a - |k|^2 psi v_j.
    """
    prop = eig.propagators(dt)
    out = np.zeros_like(v_coeffs)
    acc = np.zeros_like(v_coeffs[0])
    for j in range(1, v_coeffs.shape[0]):
        acc = prop.decay * acc + prop.drift * v_coeffs[j - 1]
        out[j] = acc
    return out


def j_operator(v: Trajectory, t0: float, t: float) -> Field:
    """J(v)(t0, t, .) = int_{t0}^t int_D Delta G_{t-s}(., y) v(s, y) dy ds."""
    i0 = _time_index(v.times, t0)
    i1 = _time_index(v.times, t)
    if i1 <= i0:
        raise ValueError(f"empty time range [{t0}, {t}]")
    eig = EigenTable(v.grid)
    path = j_operator_path(spectral_coeffs(v.frames[i0 : i1 + 1], v.grid), v.dt, eig)
    return Field(v.grid, physical_values(path[-1], v.grid))
