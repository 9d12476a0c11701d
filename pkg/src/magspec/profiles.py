"""Weight profiles and periodic-profile tables.

Localization weights are smooth compactly supported bumps; profiles for the
surface-correction term are supplied either as closed-form callables or as
two-column text tables with linear interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = ["BumpProfile", "load_profile_table", "TabulatedProfile", "save_profile_table"]


@dataclass(frozen=True)
class BumpProfile:
    """Smooth bump exp(1 - 1/(1 - u^2)) on |x - center| < radius, 0 outside.

    Normalized to peak value `amplitude` at the center; infinitely smooth and
    compactly supported, so trapezoid rules on it converge super-algebraically.
    """

    radius: float
    center: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.radius
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - ui * ui))
        if out.ndim == 0:
            return float(out)
        return out

    @property
    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def mass(self) -> float:
        """Integral over the line (amplitude * radius * int of the unit bump)."""
        val, _ = quad(lambda u: math.exp(1.0 - 1.0 / (1.0 - u * u)), -1.0, 1.0)
        return self.amplitude * self.radius * val


@dataclass(frozen=True)
class TabulatedProfile:
    """Linear interpolation of a sampled profile, optionally periodic."""

    x: np.ndarray
    y: np.ndarray
    period: float | None = None

    def __call__(self, s):
        if self.period is not None:
            return np.interp(s, self.x, self.y, period=self.period)
        return np.interp(s, self.x, self.y)


def load_profile_table(path, period: float | None = None) -> TabulatedProfile:
    """Load a two-column text table (argument, value) as an interpolant."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"profile table {path} needs two columns")
    order = np.argsort(data[:, 0])
    return TabulatedProfile(x=data[order, 0].copy(), y=data[order, 1].copy(), period=period)


def save_profile_table(path, x, y):
    np.savetxt(path, np.column_stack([x, y]))
