"""Replica chunking, worker pool and the small statistics kit shared by the studies."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from chfluct.spectral import GridSpec
from chfluct.stochastic import replica_seeds

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
_CHUNK_DOUBLES = 4_000_000


def chunk_size(grid: GridSpec) -> int:
    """Replicas per work unit; a function of the grid only, never of the job count."""
    per_replica = grid.nt * grid.size
    return int(max(1, min(25, _CHUNK_DOUBLES // per_replica)))


def seed_chunks(seed: int, replicas: int, grid: GridSpec) -> list:
    size = chunk_size(grid)
    return [replica_seeds(seed, min(size, replicas - s), s) for s in range(0, replicas, size)]


def run_chunks(fn: Callable, tasks: Sequence, jobs: int = 1) -> list:
    """Apply ``fn`` to every task, in order; results never depend on ``jobs``."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def mean_stderr(x: np.ndarray, axis: int = -1):
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    mean = x.mean(axis=axis)
    if n < 2:
        return mean, np.full_like(mean, np.nan)
    return mean, x.std(axis=axis, ddof=1) / math.sqrt(n)


def weighted_slope(x: np.ndarray, y: np.ndarray, w: np.ndarray | None = None) -> tuple:
    """Least squares line y = a + b x with weights ``w`` (inverse variances)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = np.ones_like(x) if w is None else np.asarray(w, float)
    W = w.sum()
    xm = (w * x).sum() / W
    ym = (w * y).sum() / W
    b = (w * (x - xm) * (y - ym)).sum() / (w * (x - xm) ** 2).sum()
    return ym - b * xm, b


def residual_slope_se(x: np.ndarray, y: np.ndarray) -> float:
    """Ordinary least-squares standard error of the slope."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    a, b = weighted_slope(x, y)
    dof = len(x) - 2
    if dof <= 0:
        return float("nan")
    s2 = ((y - a - b * x) ** 2).sum() / dof
    return math.sqrt(s2 / ((x - x.mean()) ** 2).sum())


@dataclass
class SlopeFit:
    slope: float
    stderr: float
    intercept: float

    @property
    def ci95(self) -> tuple:
        return (self.slope - 1.96 * self.stderr, self.slope + 1.96 * self.stderr)


def loglog_slope_jackknife(x: np.ndarray, samples: np.ndarray) -> SlopeFit:
    """Slope of log(mean sample) against log(x), weighted by inverse squared log-errors.

    ``samples`` has shape (len(x), replicas), replicas paired across x (common
    random numbers). The slope error is the delete-one-replica jackknife, which
    accounts for the correlation between cells that the pairing introduces.
    """
    samples = np.asarray(samples, float)
    lx = np.log(np.asarray(x, float))
    R = samples.shape[1]
    mean, se = mean_stderr(samples, axis=1)
    if np.any(mean <= 0):
        return SlopeFit(float("nan"), float("inf"), float("nan"))
    rel = se / mean
    w = 1.0 / np.maximum(rel, 1e-300) ** 2 if np.all(np.isfinite(rel)) and np.all(rel > 0) else None
    a, b = weighted_slope(lx, np.log(mean), w)
    if R < 3:
        return SlopeFit(b, float("nan"), a)
    loo = (samples.sum(axis=1, keepdims=True) - samples) / (R - 1)
    if np.any(loo <= 0):
        return SlopeFit(b, float("inf"), a)
    slopes = np.array([weighted_slope(lx, np.log(loo[:, i]), w)[1] for i in range(R)])
    var = (R - 1) / R * ((slopes - slopes.mean()) ** 2).sum()
    return SlopeFit(b, math.sqrt(var), a)


def band_status(fit: SlopeFit, lo: float, hi: float, se_limit: float | None = None) -> str:
    """Interval comparison of a fitted slope against [lo, hi].

    Inconclusive when the slope error exceeds ``se_limit`` (default a third of
    the band half-width); fail only when the whole 95% interval misses the band.
    """
    if not math.isfinite(fit.slope):
        return INCONCLUSIVE
    if se_limit is None:
        se_limit = (hi - lo) / 2 / 3 if math.isfinite(hi - lo) else float("inf")
    if math.isfinite(fit.stderr) and fit.stderr > se_limit:
        return INCONCLUSIVE
    if lo <= fit.slope <= hi:
        return PASS
    c_lo, c_hi = fit.ci95 if math.isfinite(fit.stderr) else (fit.slope, fit.slope)
    if c_hi < lo or c_lo > hi:
        return FAIL
    return INCONCLUSIVE


def combine_status(statuses) -> str:
    statuses = list(statuses)
    if any(s == FAIL for s in statuses):
        return FAIL
    if any(s == INCONCLUSIVE for s in statuses):
        return INCONCLUSIVE
    return PASS


def decades(values) -> float:
    v = np.asarray(values, float)
    return float(np.log10(v.max() / v.min()))
