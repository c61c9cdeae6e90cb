"""Moderate-deviation rate function through skeleton inversion.

When sigma(u0) stays away from zero the skeleton equation

    dZ/dt = -Delta^2 Z + Delta(f'(u0) Z) + sigma(u0) v

has exactly one control for each reachable target g, namely
``v = (dg/dt + Delta^2 g - Delta(f'(u0) g)) / sigma(u0)``, and the rate
function is its energy ``1/2 int int v^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from chfluct._mc import run_chunks, seed_chunks
from chfluct._validation import DegenerateNoiseError, InadmissibleTargetError, check_same_axes
from chfluct.deterministic import Control, solve_skeleton, space_time_l2_squared
from chfluct.green import EigenTable
from chfluct.model import ModelSpec, ScalingSpec
from chfluct.spectral import Trajectory, lp_norms, physical_values, spectral_coeffs
from chfluct.stochastic import noise_batch, u_eps_batch

__all__ = [
    "RateResult",
    "residual_control",
    "rate_eval",
    "ProbeRow",
    "sample_distances",
    "ball_table",
    "ldp_bound_probe",
    "rate_lower_bound_on_ball",
]


def residual_control(
    g: Trajectory,
    u0_traj: Trajectory,
    m: ModelSpec,
    sigma_floor: float = 1e-6,
    start_tol: float = 1e-10,
) -> Control:
    """The unique control whose skeleton path is ``g``.

    Time derivatives use centered differences (one-sided at the ends);
    Delta and Delta^2 act spectrally.
    """
    check_same_axes(g, u0_traj, "target and u0 path")
    scale = max(1.0, float(np.abs(g.frames).max()))
    if np.abs(g.frames[0]).max() > start_tol * scale:
        raise InadmissibleTargetError("target does not start at 0; the rate function is +inf")
    sig = m.sigma(u0_traj.frames)
    if np.abs(sig).min() < sigma_floor:
        raise DegenerateNoiseError(
            f"min |sigma(u0)| = {np.abs(sig).min():.3g} is below the floor {sigma_floor:g}"
        )
    grid = g.grid
    eig = EigenTable(grid)
    gh = g.coeffs()
    dg = np.gradient(gh, g.dt, axis=0)
    fg = spectral_coeffs(m.f_prime(u0_traj.frames) * g.frames, grid)
    resid = dg + eig.lam * gh + eig.ksq * fg
    v = physical_values(resid, grid) / sig
    return Control(Trajectory(grid, g.times, v))


@dataclass
class RateResult:
    """I(g) with the control attaining it and the re-solve mismatch per time."""

    value: float
    control: Optional[Control]
    residual_report: np.ndarray
    relative_residual: float = 0.0
    admissible: bool = True

    def to_dict(self) -> dict:
        return {
            "value": self.value if math.isfinite(self.value) else "inf",
            "admissible": self.admissible,
            "relative_residual": self.relative_residual,
            "max_residual": float(self.residual_report.max()) if self.residual_report.size else 0.0,
        }


def rate_eval(g: Trajectory, u0_traj: Trajectory, m: ModelSpec, sigma_floor: float = 1e-6) -> RateResult:
    """I(g); an inadmissible target gives value +inf rather than raising."""
    try:
        v = residual_control(g, u0_traj, m, sigma_floor)
    except InadmissibleTargetError:
        return RateResult(math.inf, None, np.zeros(0), math.inf, admissible=False)
    z = solve_skeleton(v, u0_traj, m)
    mismatch = lp_norms(z.frames - g.frames, g.grid, 2)
    gnorm = math.sqrt(space_time_l2_squared(g.frames, g.grid, g.dt))
    err = math.sqrt(space_time_l2_squared(z.frames - g.frames, g.grid, g.dt))
    rel = err / gnorm if gnorm > 0 else err
    return RateResult(v.l2_cost, v, mismatch, rel)


def rate_lower_bound_on_ball(rate_center: float, center_norm: float, radius: float) -> float:
    """First-order guess of inf I over a ball: shrink the centre along its ray.

    Heuristic; along the ray I(c g) = c^2 I(g), so the closest point of the
    ball gives (sqrt(2 I) - r sqrt(2 I)/|g|)^2 / 2.
    """
    if center_norm <= 0 or not math.isfinite(rate_center):
        return 0.0 if center_norm <= 0 else math.inf
    c_norm = math.sqrt(2 * rate_center) / center_norm
    return max(0.0, math.sqrt(2 * rate_center) - radius * c_norm) ** 2 / 2 if radius < center_norm else 0.0


# ----------------------------------------------------------------------------
# Monte Carlo probe


def _sup_l2(frames: np.ndarray, grid) -> np.ndarray:
    return lp_norms(frames, grid, 2).max(axis=-1)


def _distance_chunk(task):
    seeds, eps_list, hs, centers, u0_traj, m, stride = task
    dW = noise_batch(seeds, m.grid)
    out = np.empty((len(eps_list), len(centers), len(seeds)))
    aborted = np.zeros((len(eps_list), len(seeds)), dtype=bool)
    for i, (eps, h) in enumerate(zip(eps_list, hs)):
        res = u_eps_batch(eps, dW, m, stride)
        idx = np.searchsorted(u0_traj.times, res.times - 1e-12 * m.grid.T)
        z = (res.frames - u0_traj.frames[idx]) / (math.sqrt(eps) * h)
        for c, center in enumerate(centers):
            out[i, c] = _sup_l2(z - center.frames[idx], m.grid)
        aborted[i] = res.aborted
    return out, aborted


def sample_distances(
    eps_list: Sequence[float],
    sc: ScalingSpec,
    centers: Sequence[Trajectory],
    replicas: int,
    m: ModelSpec,
    u0_traj: Trajectory,
    seed: int = 0,
    jobs: int = 1,
    stride: Optional[int] = None,
):
    """sup_t ||Z_eps(t) - g(t)||_2 per (eps, centre, replica), replicas shared over eps.

    Returns ``(distances, aborted)``; aborted replicas carry NaN distances.
    """
    stride = stride or max(1, m.grid.nt // 100)
    hs = [sc.h(e) for e in eps_list]
    tasks = [(s, list(eps_list), hs, list(centers), u0_traj, m, stride) for s in seed_chunks(seed, replicas, m.grid)]
    parts = run_chunks(_distance_chunk, tasks, jobs)
    dist = np.concatenate([p[0] for p in parts], axis=-1)
    aborted = np.concatenate([p[1] for p in parts], axis=-1)
    return dist, aborted


@dataclass
class ProbeRow:
    eps: float
    h: float
    hits: int
    replicas: int
    log_prob_rate: float
    one_sided: bool
    rate_reference: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def ball_table(eps_list, sc: ScalingSpec, distances: np.ndarray, radius: float, rate_reference: float) -> list:
    """Rows of (eps, h, hits, log P / h^2). Zero hits give a one-sided bound.

    With no hits the rule-of-three bound P <= 3/R is reported and flagged.
    """
    rows = []
    for eps, d in zip(eps_list, distances):
        d = d[np.isfinite(d)]
        R = len(d)
        hits = int((d < radius).sum())
        h = sc.h(eps)
        if hits == 0:
            val, one = math.log(3.0 / max(R, 1)) / h**2, True
        else:
            val, one = math.log(hits / R) / h**2, False
        rows.append(ProbeRow(eps, h, hits, R, val, one, -rate_reference))
    return rows


def ldp_bound_probe(
    eps_list: Sequence[float],
    sc: ScalingSpec,
    target_ball: tuple,
    replicas: int,
    m: ModelSpec,
    u0_traj: Optional[Trajectory] = None,
    seed: int = 0,
    jobs: int = 1,
) -> list:
    """Empirical log P(Z_eps in B(g, r)) / h^2 next to -inf_B I (heuristic)."""
    if replicas < 100:
        raise ValueError("ldp_bound_probe needs at least 100 replicas")
    from chfluct.deterministic import solve_u0

    center, radius = target_ball
    u0_traj = solve_u0(m) if u0_traj is None else u0_traj
    cnorm = float(_sup_l2(center.frames, m.grid))
    if cnorm > 0:
        ref = rate_lower_bound_on_ball(rate_eval(center, u0_traj, m).value, cnorm, radius)
    else:
        ref = 0.0
    dist, _ = sample_distances(eps_list, sc, [center], replicas, m, u0_traj, seed, jobs)
    return ball_table(eps_list, sc, dist[:, 0], radius, ref)
