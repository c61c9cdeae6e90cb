"""Problem data: cubic drift, bounded Lipschitz noise coefficient, initial datum, scaling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from chfluct.spectral import Field, GridSpec

__all__ = [
    "ModelError",
    "SigmaSpec",
    "InitialSpec",
    "ModelSpec",
    "ScalingSpec",
    "f_eval",
    "f_prime",
    "f_second",
    "sigma_eval",
]


class ModelError(ValueError):
    """Invalid problem data. ``issues`` lists each violation with its label."""

    def __init__(self, issues: Sequence[str]):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


SIGMA_KINDS = ("constant", "cosine", "rational_bounded")
U0_KINDS = ("single_mode", "smooth_bump", "zero")
H_FAMILIES = ("one", "inv_sqrt", "power", "log")


@dataclass(frozen=True)
class SigmaSpec:
    """Closed registry of noise coefficients, each with certified constants.

    constant          sigma(u) = c
    cosine            sigma(u) = amplitude * cos(frequency * u)
    rational_bounded  sigma(u) = base + scale * u / (1 + u^2)
    """

    kind: str = "constant"
    c: float = 1.0
    amplitude: float = 1.0
    frequency: float = 1.0
    base: float = 1.0
    scale: float = 0.5

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise ModelError([f"sigma kind {self.kind!r} is not in the registry {SIGMA_KINDS} (H.1)"])
        for name in ("c", "amplitude", "frequency", "base", "scale"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError([f"sigma parameter {name} must be finite (H.1)"])

    @property
    def bound(self) -> float:
        """sup |sigma|."""
        if self.kind == "constant":
            return abs(self.c)
        if self.kind == "cosine":
            return abs(self.amplitude)
        return abs(self.base) + abs(self.scale) / 2

    @property
    def lipschitz(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "cosine":
            return abs(self.amplitude * self.frequency)
        # d/du u/(1+u^2) = (1-u^2)/(1+u^2)^2 has sup 1 at u = 0
        return abs(self.scale)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full_like(u, self.c, dtype=float)
        if self.kind == "cosine":
            return self.amplitude * np.cos(self.frequency * u)
        return self.base + self.scale * u / (1 + u * u)

    def to_dict(self) -> dict:
        keys = {"constant": ("c",), "cosine": ("amplitude", "frequency"), "rational_bounded": ("base", "scale")}
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys[self.kind]}}


@dataclass(frozen=True)
class InitialSpec:
    """Registry of smooth initial data.

    single_mode  amp * prod_i cos(k_i x_i)
    smooth_bump  amp * exp(-|x - centre|^2 / (2 width^2)), centre of the box
    zero         u0 = 0
    """

    kind: str = "single_mode"
    k: tuple = (1,)
    amp: float = 1.0
    width: float = 0.5

    def __post_init__(self):
        if self.kind not in U0_KINDS:
            raise ModelError([f"u0 kind {self.kind!r} is not in the registry {U0_KINDS} (H.3)"])
        object.__setattr__(self, "k", tuple(int(k) for k in np.atleast_1d(self.k)))
        if any(k < 0 for k in self.k):
            raise ModelError(["u0 wavenumbers must be non-negative (H.3)"])
        if not math.isfinite(self.amp) or not self.width > 0:
            raise ModelError(["u0 amplitude must be finite and width positive (H.3)"])

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        xs = grid.mesh()
        if self.kind == "zero":
            return np.zeros(grid.shape)
        if self.kind == "single_mode":
            k = tuple(self.k) + (0,) * (grid.d - len(self.k))
            if len(k) > grid.d or any(ki >= grid.n for ki in k):
                raise ModelError([f"u0 mode {self.k} is not representable on grid d={grid.d}, n={grid.n}"])
            out = np.full(grid.shape, self.amp)
            for ki, xi in zip(k, xs):
                out = out * np.cos(ki * xi)
            return out
        r2 = sum((xi - math.pi / 2) ** 2 for xi in xs)
        return self.amp * np.exp(-r2 / (2 * self.width**2))

    def to_dict(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "single_mode":
            return {"kind": self.kind, "k": list(self.k), "amp": self.amp}
        return {"kind": self.kind, "amp": self.amp, "width": self.width}


@dataclass(frozen=True)
class ModelSpec:
    """f(u) = a3 u^3 + a2 u^2 + a1 u + a0, noise coefficient sigma, datum u0.

    ``allow_degenerate`` lifts the a3 > 0 requirement; it exists for test
    models such as f = 0 or linear f and is never set by configuration.
    """

    grid: GridSpec = field(default_factory=GridSpec)
    f_coeffs: tuple = (1.0, 0.0, -1.0, 0.0)
    sigma: SigmaSpec = field(default_factory=SigmaSpec)
    u0: InitialSpec = field(default_factory=InitialSpec)
    gamma: float = 1.0
    allow_degenerate: bool = False

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.f_coeffs)
        object.__setattr__(self, "f_coeffs", coeffs)
        issues = []
        if len(coeffs) != 4 or not all(math.isfinite(a) for a in coeffs):
            issues.append("f_coeffs must be four finite numbers (a3, a2, a1, a0) (H.2)")
        elif coeffs[0] <= 0 and not self.allow_degenerate:
            issues.append(f"f must be cubic with positive leading coefficient, got a3={coeffs[0]} (H.2)")
        if not 0 < self.gamma <= 1:
            issues.append(f"gamma must lie in (0, 1], got {self.gamma} (H.4)")
        if issues:
            raise ModelError(issues)

    # pointwise array maps --------------------------------------------------
    def f(self, u: np.ndarray) -> np.ndarray:
        a3, a2, a1, a0 = self.f_coeffs
        return ((a3 * u + a2) * u + a1) * u + a0

    def f_prime(self, u: np.ndarray) -> np.ndarray:
        a3, a2, a1, _ = self.f_coeffs
        return (3 * a3 * u + 2 * a2) * u + a1

    def f_second(self, u: np.ndarray) -> np.ndarray:
        a3, a2, _, _ = self.f_coeffs
        return 6 * a3 * u + 2 * a2

    def f_quotient(self, u: np.ndarray, z: np.ndarray, w: float) -> np.ndarray:
        """(f(u + w z) - f(u)) / w, expanded so that small w loses no digits.

        At w = 0 this is f'(u) z.
        """
        a3, a2, a1, _ = self.f_coeffs
        wz = w * z
        return z * (a3 * (3 * u * u + 3 * u * wz + wz * wz) + a2 * (2 * u + wz) + a1)

    @property
    def mean_value_constant(self) -> float:
        """C with |f(u+h) - f(u) - f'(u) h| <= C (2|u| + |h| + 1) h^2."""
        a3, a2, _, _ = self.f_coeffs
        # remainder is h^2 (a3 (3u + h) + a2)
        return max(1.5 * abs(a3), abs(a2))

    def initial_field(self) -> Field:
        return Field(self.grid, self.u0.evaluate(self.grid))

    def with_grid(self, grid: GridSpec) -> "ModelSpec":
        return ModelSpec(grid, self.f_coeffs, self.sigma, self.u0, self.gamma, self.allow_degenerate)

    def to_dict(self) -> dict:
        return {
            "f_coeffs": list(self.f_coeffs),
            "sigma": self.sigma.to_dict(),
            "u0": self.u0.to_dict(),
            "gamma": self.gamma,
        }


def f_eval(u: Field, m: ModelSpec) -> Field:
    return Field(u.grid, m.f(u.values))


def f_prime(u: Field, m: ModelSpec) -> Field:
    return Field(u.grid, m.f_prime(u.values))


def f_second(u: Field, m: ModelSpec) -> Field:
    return Field(u.grid, m.f_second(u.values))


def sigma_eval(u: Field, m: ModelSpec) -> Field:
    return Field(u.grid, m.sigma(u.values))


@dataclass(frozen=True)
class ScalingSpec:
    """Deviation scale h(eps) for Z = (u_eps - u0) / (sqrt(eps) h(eps)).

    one       h = 1, the central-limit scale
    inv_sqrt  h = eps^{-1/2}, the large-deviation scale
    power     h = eps^{-theta}, 0 < theta < 1/2 (moderate deviations)
    log       h = sqrt(log(1/eps)), requires eps < 1
    """

    eps_list: tuple = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
    family: str = "power"
    theta: float = 0.25

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        object.__setattr__(self, "eps_list", eps)
        issues = []
        if not eps or not all(0 < e <= 1 for e in eps):
            issues.append("eps_list must be non-empty with every eps in (0, 1]")
        if self.family not in H_FAMILIES:
            issues.append(f"h family {self.family!r} not in {H_FAMILIES}")
        elif self.family == "power" and not 0 < self.theta < 0.5:
            issues.append(
                f"theta={self.theta} outside (0, 1/2): the regime h -> inf, sqrt(eps) h -> 0 fails (moderate-deviation regime)"
            )
        elif self.family == "log" and any(e >= 1 for e in eps):
            issues.append("log family needs eps < 1 so that h(eps) > 0")
        if issues:
            raise ModelError(issues)

    def h(self, eps: float) -> float:
        if self.family == "one":
            return 1.0
        if self.family == "inv_sqrt":
            return eps**-0.5
        if self.family == "power":
            return eps**-self.theta
        return math.sqrt(math.log(1 / eps))

    def to_dict(self) -> dict:
        out = {"eps_list": list(self.eps_list), "family": self.family}
        if self.family == "power":
            out["theta"] = self.theta
        return out
