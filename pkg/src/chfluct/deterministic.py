"""Exponential-Euler integration of the deterministic limit and the skeleton equation.

Both equations are stepped in the cosine eigenbasis: the stiff linear part
-Delta^2 is integrated exactly, nonlinear and source terms are frozen at the
start of each step and evaluated pseudospectrally.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from chfluct._validation import BLOWUP_THRESHOLD, BlowUpError, check_same_axes
from chfluct.green import EigenTable, Propagators
from chfluct.model import ModelSpec
from chfluct.spectral import (
    Field,
    GridSpec,
    SpectralField,
    Trajectory,
    lp_norms,
    physical_values,
    spectral_coeffs,
)

__all__ = [
    "Control",
    "step_deterministic",
    "solve_u0",
    "solve_skeleton",
    "space_time_l2_squared",
    "check_blowup",
]


def check_blowup(u: np.ndarray, step: int) -> None:
    if not np.all(np.abs(u) <= BLOWUP_THRESHOLD):
        raise BlowUpError(step)


def space_time_l2_squared(frames: np.ndarray, grid: GridSpec, dt: float) -> float:
    """int_0^T int_D v^2 dx dt, trapezoid in time, node quadrature in space."""
    sq = lp_norms(frames, grid, 2) ** 2
    if len(sq) == 1:
        return 0.0
    return float(dt * (sq.sum() - 0.5 * (sq[0] + sq[-1])))


@dataclass(frozen=True, eq=False)
class Control:
    """A control path v(t, x) with its cached cost 1/2 int int v^2.

    With ``bound`` set, the control must lie in H_N, i.e. int int v^2 <= N.
    """

    trajectory: Trajectory
    bound: Optional[float] = None

    def __post_init__(self):
        cost = 0.5 * space_time_l2_squared(self.trajectory.frames, self.trajectory.grid, self.trajectory.dt)
        object.__setattr__(self, "l2_cost", cost)
        if self.bound is not None and 2 * cost > self.bound * (1 + 1e-12):
            raise ValueError(f"control energy {2 * cost:.6g} exceeds the admissibility radius N={self.bound}")

    @classmethod
    def from_function(cls, grid: GridSpec, func, bound: Optional[float] = None) -> "Control":
        """Sample ``func(t, *x)`` on the full time grid of ``grid``."""
        times = grid.times
        xs = grid.mesh()
        frames = np.stack([np.broadcast_to(func(t, *xs), grid.shape) for t in times])
        return cls(Trajectory(grid, times, frames), bound)

    @classmethod
    def zero(cls, grid: GridSpec) -> "Control":
        return cls(Trajectory(grid, grid.times, np.zeros((grid.nt + 1,) + grid.shape)))

    @property
    def frames(self) -> np.ndarray:
        return self.trajectory.frames


def _det_increment(c: np.ndarray, prop: Propagators, m: ModelSpec, step: int) -> np.ndarray:
    u = physical_values(c, m.grid)
    check_blowup(u, step)
    return prop.decay * c + prop.drift * spectral_coeffs(m.f(u), m.grid)


def step_deterministic(u: SpectralField, dt: float, m: ModelSpec) -> SpectralField:
    """One exponential-Euler step of du/dt = -Delta^2 u + Delta f(u)."""
    prop = EigenTable(u.grid).propagators(dt)
    return SpectralField(u.grid, _det_increment(u.coeffs, prop, m, 0))


def solve_u0(m: ModelSpec) -> Trajectory:
    """Deterministic limit u0 on the full time grid of ``m.grid``."""
    grid = m.grid
    prop = EigenTable(grid).propagators(grid.dt)
    c = spectral_coeffs(m.u0.evaluate(grid), grid)
    frames = np.empty((grid.nt + 1,) + grid.shape)
    frames[0] = physical_values(c, grid)
    for j in range(grid.nt):
        c = _det_increment(c, prop, m, j)
        frames[j + 1] = physical_values(c, grid)
    check_blowup(frames[-1], grid.nt)
    return Trajectory(grid, grid.times, frames)


def solve_skeleton(v: Control, u0_traj: Trajectory, m: ModelSpec) -> Trajectory:
    """Z^v: dZ/dt = -Delta^2 Z + Delta(f'(u0) Z) + sigma(u0) v, Z(0) = 0."""
    check_same_axes(v.trajectory, u0_traj, "control and u0 path")
    grid = u0_traj.grid
    prop = EigenTable(grid).propagators(u0_traj.dt)
    fp = m.f_prime(u0_traj.frames)
    source = spectral_coeffs(m.sigma(u0_traj.frames) * v.frames, grid)
    c = np.zeros(grid.shape)
    frames = np.zeros((len(u0_traj),) + grid.shape)
    for j in range(len(u0_traj) - 1):
        z = frames[j]
        c = prop.decay * c + prop.drift * spectral_coeffs(fp[j] * z, grid) + prop.psi * source[j]
        frames[j + 1] = physical_values(c, grid)
        check_blowup(frames[j + 1], j + 1)
    return Trajectory(grid, u0_traj.times, frames)
