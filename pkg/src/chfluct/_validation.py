"""Input validation helpers shared by the public API."""
from __future__ import annotations

import numbers

import numpy as np


class BlowUpError(RuntimeError):
    """A trajectory left the finite range; carries the offending time index."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"solution blew up at time index {step}")


class DegenerateNoiseError(ValueError):
    """sigma(u0) falls below the configured floor, so the control is not unique."""


class InadmissibleTargetError(ValueError):
    """The target path does not start at zero and cannot be reached by any control."""


class InconclusiveError(RuntimeError):
    pass


BLOWUP_THRESHOLD = 1e8


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_probability_eps(eps: float, allow_zero: bool = False) -> float:
    eps = float(eps)
    lo_ok = eps >= 0 if allow_zero else eps > 0
    if not (lo_ok and eps <= 1):
        raise ValueError(f"eps must lie in {'[0' if allow_zero else '(0'}, 1], got {eps}")
    return eps


def check_same_axes(a, b, what: str = "trajectories") -> None:
    """Raise unless two trajectories share grid and time axis."""
    if a.grid.shape != b.grid.shape or a.grid.d != b.grid.d:
        raise ValueError(f"{what} live on different spatial grids")
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=1e-12, atol=1e-15):
        raise ValueError(f"{what} have mismatched time axes")


def check_batch_array(X, width: int, name: str = "X") -> np.ndarray:
    """2-D float array with ``width`` columns, as sklearn-style methods expect."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != width:
        raise ValueError(f"{name} must have shape (n_samples, {width}), got {X.shape}")
    return check_finite(X, name)
