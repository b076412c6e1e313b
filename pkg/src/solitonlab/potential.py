"""Slowly varying potentials V(x) = W(h x) with analytic derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .group import sech

PROFILES = ("zero", "sech2well", "tabulated", "custom")


def _sech2_derivs(y):
    s2 = sech(y) ** 2
    t = np.tanh(y)
    return (
        s2,
        -2.0 * s2 * t,
        s2 * (4.0 * t**2 - 2.0 * s2),
        s2 * t * (16.0 * s2 - 8.0 * t**2),
    )


@dataclass(frozen=True)
class PotentialSpec:
    """V(x) = W(h x).

    ``sech2well`` means W(y) = amplitude * sech(y)**2.  ``tabulated`` takes
    samples of W on an increasing y-grid and differentiates a cubic spline.
    ``custom`` accepts callables for W and its first three derivatives.
    """

    profile_id: str = "zero"
    amplitude: float = 0.0
    h: float = 1.0
    table_y: Optional[tuple] = None
    table_w: Optional[tuple] = None
    custom: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.profile_id not in PROFILES:
            raise ValueError(f"unknown profile {self.profile_id!r}; expected one of {PROFILES}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.profile_id == "tabulated":
            if self.table_y is None or self.table_w is None:
                raise ValueError("tabulated profile needs table_y and table_w")
            from scipy.interpolate import CubicSpline

            spline = CubicSpline(np.asarray(self.table_y), np.asarray(self.table_w))
            object.__setattr__(self, "_spline", spline)
        if self.profile_id == "custom" and (self.custom is None or len(self.custom) != 4):
            raise ValueError("custom profile needs four callables (W, W', W'', W''')")

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero")

    @classmethod
    def sech2well(cls, amplitude: float, h: float) -> "PotentialSpec":
        return cls("sech2well", amplitude=amplitude, h=h)

    @classmethod
    def from_callables(cls, w: Callable, dw: Callable, d2w: Callable, d3w: Callable,
                       h: float = 1.0) -> "PotentialSpec":
        return cls("custom", h=h, custom=(w, dw, d2w, d3w))

    @classmethod
    def constant(cls, c: float) -> "PotentialSpec":
        zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
        return cls.from_callables(lambda y: c + zero(y), zero, zero, zero)

    @property
    def is_zero(self) -> bool:
        return self.profile_id == "zero" or (
            self.profile_id == "sech2well" and self.amplitude == 0.0
        )

    def w_derivative(self, y, order: int = 0):
        """W^(order)(y), order 0..3."""
        y = np.asarray(y, dtype=float)
        if self.profile_id == "zero":
            return np.zeros_like(y)
        if self.profile_id == "sech2well":
            return self.amplitude * _sech2_derivs(y)[order]
        if self.profile_id == "tabulated":
            return self._spline(y, order)
        return np.asarray(self.custom[order](y), dtype=float) + np.zeros_like(y)

    def derivatives(self, x, orders=(0, 1)) -> list:
        """[V^(k)(x) for k in orders], sharing one transcendental evaluation."""
        x = np.asarray(x, dtype=float)
        if self.profile_id == "sech2well":
            d = _sech2_derivs(self.h * x)
            return [self.amplitude * self.h**k * d[k] for k in orders]
        return [self(x, k) for k in orders]

    def __call__(self, x, order: int = 0):
        """V^(order)(x) = h**order W^(order)(h x)."""
        return self.h**order * self.w_derivative(self.h * np.asarray(x, dtype=float), order)

    def sup_w(self, order: int, span: float = 50.0) -> float:
        """Sampled sup |W^(order)| over |y| <= span."""
        y = np.linspace(-span, span, 20001)
        return float(np.max(np.abs(self.w_derivative(y, order))))

    def describe(self) -> str:
        if self.profile_id == "sech2well":
            return f"sech2well(amplitude={self.amplitude}, h={self.h})"
        return f"{self.profile_id}(h={self.h})"
