"""Neumann cosine eigenbasis on [0, pi]^d.

Fields are sampled at the half-integer collocation nodes
``x_j = pi * (j + 1/2) / n`` on every axis. With these nodes the matrix
``A[k, j] = phi_k(x_j) * sqrt(pi / n)`` is the orthonormal DCT-II, so the
transforms below are exact inverses of each other and Parseval holds under
the uniform quadrature weight ``(pi / n)**d``.

All functions accept a leading batch dimension: anything in front of the
last ``d`` axes is treated as independent samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft

from chfluct._validation import check_finite, check_positive_int

__all__ = [
    "GridSpec",
    "Field",
    "SpectralField",
    "NormSpec",
    "Trajectory",
    "to_spectral",
    "to_physical",
    "spectral_coeffs",
    "physical_values",
    "lp_norm",
    "lp_norms",
    "holder_norm",
    "holder_seminorm",
    "continuity_modulus",
    "basis_matrix",
]


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid over [0, pi]^d plus the uniform time axis [0, T]."""

    d: int = 1
    n: int = 64
    T: float = 0.1
    nt: int = 2000

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        check_positive_int(self.n, "n")
        if self.n < 4:
            raise ValueError(f"n must be >= 4, got {self.n}")
        check_positive_int(self.nt, "nt")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive and finite, got {self.T}")
        object.__setattr__(self, "T", float(self.T))

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def weight(self) -> float:
        """Quadrature weight of a single node."""
        return (math.pi / self.n) ** self.d

    @property
    def axis(self) -> np.ndarray:
        return np.pi * (np.arange(self.n) + 0.5) / self.n

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    def mesh(self) -> tuple:
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        return tuple(np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    def wavenumbers(self) -> tuple:
        return tuple(np.meshgrid(*([np.arange(self.n)] * self.d), indexing="ij"))

    def with_time(self, T: Optional[float] = None, nt: Optional[int] = None) -> "GridSpec":
        return GridSpec(self.d, self.n, self.T if T is None else T, self.nt if nt is None else nt)


def _coerce(grid: GridSpec, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != grid.shape:
        if arr.size != grid.size:
            raise ValueError(f"expected {grid.size} values for grid {grid.shape}, got shape {arr.shape}")
        arr = arr.reshape(grid.shape)
    check_finite(arr, "values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field:
    """Physical values of a function on the collocation grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _coerce(self.grid, self.values))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "Field":
        return cls(grid, func(*grid.mesh()))

    def __add__(self, other):
        return Field(self.grid, self.values + _values_of(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _values_of(other))

    def __mul__(self, other):
        return Field(self.grid, self.values * _values_of(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


def _values_of(other):
    return other.values if isinstance(other, Field) else other


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients against the orthonormal eigenfunctions phi_k, k in {0..n-1}^d."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _coerce(self.grid, self.coeffs))


@dataclass(frozen=True)
class NormSpec:
    """Exponents for the L^p / Hoelder norms and the moment order q."""

    p: float = 2.0
    q: float = 2.0
    alpha: float = 0.2

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.q >= self.p:
            raise ValueError(f"q must be >= p, got q={self.q}, p={self.p}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def holder_violations(self, d: int, gamma: float) -> list:
        """Labelled violations of the admissible temporal Hoelder band."""
        out = []
        if self.alpha > gamma / 4:
            out.append(f"alpha={self.alpha} violates alpha <= gamma/4 = {gamma / 4:g} (H.4 regularity of u0)")
        upper = 0.5 * (1 - d / 4)
        if not self.alpha < upper:
            out.append(f"alpha={self.alpha} violates alpha < (1 - d/4)/2 = {upper:g} (Hoelder band for d={d})")
        return out


# ----------------------------------------------------------------------------
# transforms


def _scale(grid: GridSpec) -> float:
    return math.sqrt(math.pi / grid.n) ** grid.d


def _axes(d: int) -> tuple:
    return tuple(range(-d, 0))


def spectral_coeffs(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Array-level forward transform; leading axes are batch axes."""
    return sfft.dctn(values, type=2, norm="ortho", axes=_axes(grid.d)) * _scale(grid)


def physical_values(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Array-level inverse transform; leading axes are batch axes."""
    return sfft.idctn(coeffs, type=2, norm="ortho", axes=_axes(grid.d)) / _scale(grid)


def to_spectral(f: Field) -> SpectralField:
    return SpectralField(f.grid, spectral_coeffs(f.values, f.grid))


def to_physical(c: SpectralField) -> Field:
    return Field(c.grid, physical_values(c.coeffs, c.grid))


def basis_matrix(n: int) -> np.ndarray:
    """Dense 1-D matrix ``B[k, j] = phi_k(x_j)``; O(n^2), used for checking."""
    x = np.pi * (np.arange(n) + 0.5) / n
    k = np.arange(n)[:, None]
    c = np.where(k == 0, 1 / math.sqrt(math.pi), math.sqrt(2 / math.pi))
    return c * np.cos(k * x[None, :])


# ----------------------------------------------------------------------------
# norms


def lp_norms(values: np.ndarray, grid: GridSpec, p: float) -> np.ndarray:
    """L^p norms over the last ``d`` axes by node quadrature."""
    a = np.abs(values)
    axes = _axes(grid.d)
    if p == 2:
        s = np.sum(a * a, axis=axes)
    elif p == 1:
        s = np.sum(a, axis=axes)
    else:
        s = np.sum(a**p, axis=axes)
    return (s * grid.weight) ** (1.0 / p)


def lp_norm(f: Field, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(lp_norms(f.values, f.grid, p))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-indexed frames on a uniform time axis.

    ``frames`` has shape ``(len(times),) + grid.shape``. The time axis need
    not be the full ``grid.times``; subsampled trajectories keep a uniform
    spacing ``times[1] - times[0]``.
    """

    grid: GridSpec
    times: np.ndarray
    frames: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        frames = np.asarray(self.frames, dtype=float)
        if times.ndim != 1 or len(times) < 1:
            raise ValueError("times must be a non-empty 1-D array")
        if frames.shape != (len(times),) + self.grid.shape:
            raise ValueError(f"frames shape {frames.shape} does not match {(len(times),) + self.grid.shape}")
        if len(times) > 1:
            steps = np.diff(times)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ValueError("time grid must be strictly increasing and uniform")
        check_finite(frames, "frames")
        for a in (times, frames):
            a.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "frames", frames)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def __len__(self):
        return len(self.times)

    def frame(self, i: int) -> Field:
        return Field(self.grid, self.frames[i])

    def lp_norms(self, p: float) -> np.ndarray:
        key = ("lp", float(p))
        if key not in self._cache:
            self._cache[key] = lp_norms(self.frames, self.grid, p)
        return self._cache[key]

    def coeffs(self) -> np.ndarray:
        if "coeffs" not in self._cache:
            self._cache["coeffs"] = spectral_coeffs(self.frames, self.grid)
        return self._cache["coeffs"]

    def subsample(self, stride: int) -> "Trajectory":
        idx = np.arange(0, len(self.times), stride)
        return Trajectory(self.grid, self.times[idx], self.frames[idx])

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.times, self.frames - other.frames)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.times, self.frames + other.frames)

    def scaled(self, c: float) -> "Trajectory":
        return Trajectory(self.grid, self.times, c * self.frames)


def _pair_ratios(frames: np.ndarray, grid: GridSpec, dt: float, p: float, alpha: float, max_lag: int):
    """Per lag L = 1..max_lag, the max over t of ||f(t+L) - f(t)||_p / (L dt)^alpha.

    ``frames`` may carry leading batch axes before the time axis; the time
    axis is ``-(d + 1)``.
    """
    tax = frames.ndim - grid.d - 1
    nfr = frames.shape[tax]
    out = []
    for lag in range(1, min(max_lag, nfr - 1) + 1):
        a = np.take(frames, np.arange(lag, nfr), axis=tax)
        b = np.take(frames, np.arange(0, nfr - lag), axis=tax)
        norms = lp_norms(a - b, grid, p)
        out.append(norms.max(axis=-1) / (lag * dt) ** alpha)
    return np.stack(out, axis=-1) if out else np.zeros(frames.shape[:tax] + (0,))


def holder_seminorm(values: np.ndarray, grid: GridSpec, dt: float, p: float, alpha: float) -> np.ndarray:
    """Sup over grid-time pairs of ||f(t) - f(s)||_p / |t - s|^alpha (batched)."""
    tax = values.ndim - grid.d - 1
    ratios = _pair_ratios(values, grid, dt, p, alpha, values.shape[tax] - 1)
    return ratios.max(axis=-1)


def holder_norm(tr: Trajectory, ns: NormSpec) -> float:
    """Discrete surrogate of the C^alpha([0, T], L^p) norm over grid-time pairs."""
    if len(tr) < 2:
        raise ValueError("holder_norm needs at least two time points")
    sup = float(tr.lp_norms(ns.p).max())
    return sup + float(holder_seminorm(tr.frames, tr.grid, tr.dt, ns.p, ns.alpha))


def continuity_modulus(tr: Trajectory, ns: NormSpec, delta: float) -> float:
    """Sup of the Hoelder quotient over pairs with time gap at most ``delta``."""
    if len(tr) < 2:
        raise ValueError("continuity_modulus needs at least two time points")
    dt = tr.dt
    if delta < dt * (1 - 1e-12):
        raise ValueError(f"delta={delta} is below the time step {dt}")
    max_lag = int(math.floor(delta / dt * (1 + 1e-12)))
    ratios = _pair_ratios(tr.frames, tr.grid, dt, ns.p, ns.alpha, max_lag)
    return float(ratios.max()) if ratios.size else 0.0
