"""Stochastic Cahn-Hilliard dynamics driven by a replayable noise path.

Space-time white noise is represented in the orthonormal cosine basis as
independent Brownian motions, one per retained mode. A step of any of the
stochastic equations below is

    c <- exp(-lambda dt) c  -  |k|^2 psi * F(state)^  +  s * (g(state) dW)^

where ``F`` is the frozen drift, ``g`` the noise coefficient evaluated at the
start of the step (Ito) and ``s`` the per-mode factor that gives each
increment the exact one-step stochastic-convolution variance. Every process
uses the same formula for the same increments, which is what makes the
coupled differences (u_eps - u0)/sqrt(eps) - Y meaningful path by path.

The ``*_batch`` functions run many replicas at once with a leading replica
axis; the single-path functions are thin wrappers around them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from chfluct._validation import BLOWUP_THRESHOLD, BlowUpError, check_probability_eps, check_same_axes
from chfluct.deterministic import Control, solve_u0
from chfluct.green import EigenTable, Propagators
from chfluct.model import ModelSpec, ScalingSpec
from chfluct.spectral import GridSpec, SpectralField, Trajectory, physical_values, spectral_coeffs

__all__ = [
    "NoisePath",
    "BatchResult",
    "generate_noise",
    "replica_seeds",
    "noise_batch",
    "step_spde",
    "solve_u_eps",
    "solve_Y",
    "solve_controlled",
    "coupled_fluctuation",
    "u_eps_batch",
    "y_batch",
    "controlled_batch",
]


@dataclass(frozen=True, eq=False)
class NoisePath:
    """Standard normal increments times sqrt(dt), shape (nt,) + grid.shape."""

    seed: int
    grid: GridSpec
    increments: np.ndarray

    @property
    def nt(self) -> int:
        return self.increments.shape[0]


def generate_noise(seed: int, grid: GridSpec, nt: Optional[int] = None) -> NoisePath:
    nt = grid.nt if nt is None else nt
    seed = int(seed) % 2**64
    rng = np.random.Generator(np.random.PCG64(seed))
    inc = rng.standard_normal((nt,) + grid.shape) * np.sqrt(grid.T / nt)
    inc.flags.writeable = False
    return NoisePath(seed, grid, inc)


def replica_seeds(base_seed: int, count: int, start: int = 0) -> list:
    """Independent 64-bit seeds for replicas ``start .. start+count-1``.

    Seed r depends only on (base_seed, r), never on how replicas are grouped.
    """
    out = []
    for r in range(start, start + count):
        ss = np.random.SeedSequence(int(base_seed), spawn_key=(r,))
        out.append(int(ss.generate_state(1, np.uint64)[0]))
    return out


def noise_batch(seeds, grid: GridSpec) -> np.ndarray:
    return np.stack([generate_noise(s, grid).increments for s in seeds])


@dataclass
class BatchResult:
    """Saved frames ``(replicas, n_saved) + grid.shape`` and abort bookkeeping."""

    times: np.ndarray
    frames: np.ndarray
    aborted: np.ndarray
    abort_step: np.ndarray

    @property
    def n_aborted(self) -> int:
        return int(self.aborted.sum())


def _saved_indices(nt: int, stride: int) -> np.ndarray:
    idx = np.arange(0, nt + 1, stride)
    if idx[-1] != nt:
        idx = np.append(idx, nt)
    return idx


class _Recorder:
    def __init__(self, grid: GridSpec, replicas: int, stride: int):
        self.grid = grid
        self.idx = _saved_indices(grid.nt, stride)
        self.frames = np.zeros((replicas, len(self.idx)) + grid.shape)
        self.aborted = np.zeros(replicas, dtype=bool)
        self.abort_step = np.full(replicas, -1)
        self._slot = {int(j): s for s, j in enumerate(self.idx)}

    def check(self, u: np.ndarray, step: int) -> np.ndarray:
        """Flag replicas leaving the finite range; returns the live mask."""
        axes = tuple(range(1, u.ndim))
        with np.errstate(invalid="ignore"):
            bad = ~(np.abs(u) <= BLOWUP_THRESHOLD).all(axis=axes)
        new = bad & ~self.aborted
        self.abort_step[new] = step
        self.aborted |= bad
        return ~self.aborted

    def record(self, step: int, u: np.ndarray) -> None:
        s = self._slot.get(step)
        if s is not None:
            self.frames[:, s] = np.where(self._mask(), u, np.nan)

    def _mask(self):
        return (~self.aborted).reshape((-1,) + (1,) * self.grid.d)

    def result(self) -> BatchResult:
        return BatchResult(self.grid.times[self.idx], self.frames, self.aborted, self.abort_step)


def _noise_term(prop: Propagators, m: ModelSpec, state: Optional[np.ndarray], dW: np.ndarray) -> np.ndarray:
    """s * (sigma(state) dW)^; ``state`` None means sigma is already given as array via dW."""
    grid = m.grid
    if m.sigma.kind == "constant":
        return prop.noise * (m.sigma.c * dW)
    g = m.sigma(state)
    return prop.noise * spectral_coeffs(g * physical_values(dW, grid), grid)


def _freeze(c: np.ndarray, live: np.ndarray, d: int) -> np.ndarray:
    return np.where(live.reshape((-1,) + (1,) * d), c, 0.0)


def u_eps_batch(eps: float, dW: np.ndarray, m: ModelSpec, stride: int = 1) -> BatchResult:
    """u_eps for a batch of increment paths ``dW`` of shape (R, nt) + grid.shape."""
    eps = check_probability_eps(eps, allow_zero=True)
    grid = m.grid
    prop = EigenTable(grid).propagators(grid.dt)
    R = dW.shape[0]
    rec = _Recorder(grid, R, stride)
    c = np.broadcast_to(spectral_coeffs(m.u0.evaluate(grid), grid), (R,) + grid.shape).copy()
    amp = np.sqrt(eps)
    for j in range(grid.nt):
        u = physical_values(c, grid)
        live = rec.check(u, j)
        if not live.all():
            u = _freeze(u, live, grid.d)
            c = _freeze(c, live, grid.d)
        rec.record(j, u)
        nxt = prop.decay * c + prop.drift * spectral_coeffs(m.f(u), grid)
        if eps > 0:
            nxt = nxt + amp * _noise_term(prop, m, u, dW[:, j])
        c = nxt
    u = physical_values(c, grid)
    rec.check(u, grid.nt)
    rec.record(grid.nt, u)
    return rec.result()


def y_batch(dW: np.ndarray, u0_traj: Trajectory, m: ModelSpec, stride: int = 1) -> BatchResult:
    """CLT limit Y: dY = (-Delta^2 Y + Delta(f'(u0) Y)) dt + sigma(u0) dW, Y(0) = 0."""
    grid = m.grid
    prop = EigenTable(grid).propagators(grid.dt)
    R = dW.shape[0]
    rec = _Recorder(grid, R, stride)
    fp = m.f_prime(u0_traj.frames)
    c = np.zeros((R,) + grid.shape)
    for j in range(grid.nt):
        y = physical_values(c, grid)
        live = rec.check(y, j)
        if not live.all():
            y = _freeze(y, live, grid.d)
            c = _freeze(c, live, grid.d)
        rec.record(j, y)
        c = (
            prop.decay * c
            + prop.drift * spectral_coeffs(fp[j] * y, grid)
            + _noise_term(prop, m, u0_traj.frames[j], dW[:, j])
        )
    y = physical_values(c, grid)
    rec.check(y, grid.nt)
    rec.record(grid.nt, y)
    return rec.result()


def controlled_batch(
    eps: float,
    h: float,
    dW: Optional[np.ndarray],
    u0_traj: Trajectory,
    m: ModelSpec,
    v: Optional[Control] = None,
    stride: int = 1,
    replicas: Optional[int] = None,
) -> BatchResult:
    """Controlled process Z^{eps,v}.

    dZ = (-Delta^2 Z + Delta[(f(u0 + w Z) - f(u0)) / w]) dt
         + sigma(u0 + w Z) v dt + (1/h) sigma(u0 + w Z) dW,     w = sqrt(eps) h.

    ``dW=None`` switches the noise off (then ``replicas`` sets the batch size).
    """
    eps = check_probability_eps(eps, allow_zero=True)
    grid = m.grid
    prop = EigenTable(grid).propagators(grid.dt)
    R = dW.shape[0] if dW is not None else (replicas or 1)
    rec = _Recorder(grid, R, stride)
    w = np.sqrt(eps) * h
    u0 = u0_traj.frames
    vf = None if v is None else v.frames
    c = np.zeros((R,) + grid.shape)
    for j in range(grid.nt):
        z = physical_values(c, grid)
        live = rec.check(z, j)
        if not live.all():
            z = _freeze(z, live, grid.d)
            c = _freeze(c, live, grid.d)
        rec.record(j, z)
        shifted = u0[j] + w * z
        nxt = prop.decay * c + prop.drift * spectral_coeffs(m.f_quotient(u0[j], z, w), grid)
        if vf is not None:
            nxt = nxt + prop.psi * spectral_coeffs(m.sigma(shifted) * vf[j], grid)
        if dW is not None:
            nxt = nxt + _noise_term(prop, m, shifted, dW[:, j]) / h
        c = nxt
    z = physical_values(c, grid)
    rec.check(z, grid.nt)
    rec.record(grid.nt, z)
    return rec.result()


# ----------------------------------------------------------------------------
# single-path API


def _single(result: BatchResult, grid: GridSpec) -> Trajectory:
    if result.aborted[0]:
        raise BlowUpError(int(result.abort_step[0]))
    return Trajectory(grid, result.times, result.frames[0])


def _check_noise(noise: NoisePath, m: ModelSpec) -> None:
    if noise.grid.shape != m.grid.shape or noise.nt != m.grid.nt:
        raise ValueError("noise path does not match the model grid")


def step_spde(u: SpectralField, dW: np.ndarray, eps: float, m: ModelSpec, dt: Optional[float] = None) -> SpectralField:
    """One stochastic exponential-Euler step; ``dW`` holds one step of increments."""
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    dt = m.grid.dt if dt is None else dt
    grid = u.grid
    prop = EigenTable(grid).propagators(dt)
    x = physical_values(u.coeffs, grid)
    if not np.all(np.abs(x) <= BLOWUP_THRESHOLD):
        raise BlowUpError(0)
    c = prop.decay * u.coeffs + prop.drift * spectral_coeffs(m.f(x), grid)
    if eps > 0:
        c = c + np.sqrt(eps) * _noise_term(prop, m, x, np.asarray(dW, dtype=float))
    return SpectralField(grid, c)


def solve_u_eps(eps: float, noise: NoisePath, m: ModelSpec, stride: int = 1) -> Trajectory:
    _check_noise(noise, m)
    return _single(u_eps_batch(eps, noise.increments[None], m, stride), m.grid)


def solve_Y(noise: NoisePath, u0_traj: Trajectory, m: ModelSpec, stride: int = 1) -> Trajectory:
    _check_noise(noise, m)
    if len(u0_traj) != m.grid.nt + 1:
        raise ValueError("u0 path must be sampled at every time step")
    return _single(y_batch(noise.increments[None], u0_traj, m, stride), m.grid)


def solve_controlled(
    eps: float,
    v: Optional[Control],
    noise: Optional[NoisePath],
    u0_traj: Trajectory,
    sc: ScalingSpec,
    m: ModelSpec,
    stride: int = 1,
) -> Trajectory:
    """Z^{eps,v}; ``noise=None`` runs the noise-free variant."""
    check_probability_eps(eps)
    if v is not None:
        check_same_axes(v.trajectory, u0_traj, "control and u0 path")
    dW = None
    if noise is not None:
        _check_noise(noise, m)
        dW = noise.increments[None]
    return _single(controlled_batch(eps, sc.h(eps), dW, u0_traj, m, v, stride), m.grid)


def coupled_fluctuation(eps: float, noise: NoisePath, m: ModelSpec, u0_traj: Optional[Trajectory] = None):
    """Run u_eps and Y on one noise path; also return V = (u_eps - u0)/sqrt(eps) - Y."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    u0_traj = solve_u0(m) if u0_traj is None else u0_traj
    u = solve_u_eps(eps, noise, m)
    y = solve_Y(noise, u0_traj, m)
    v = Trajectory(m.grid, u.times, (u.frames - u0_traj.frames) / np.sqrt(eps) - y.frames)
    return u, y, v
