"""The soliton group G = H3 x| R+, its action on fields, and its Lie algebra.

A group element g = (a, v, gamma, mu) acts by

    (g.u)(x) = exp(i gamma) exp(i v (x - a)) mu u(mu (x - a)).

The Lie algebra basis acts as e1 = -d/dx, e2 = i x, e3 = i, e4 = d/dx x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, WaveField, fourier_resample, spectral_derivative


@dataclass(frozen=True)
class GroupElement:
    a: float
    v: float
    gamma: float
    mu: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.as_tuple()):
            raise ValueError(f"non-finite group element {self}")
        if not self.mu > 0:
            raise ValueError(f"scale mu must be positive, got {self.mu}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.v, self.gamma, self.mu)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @classmethod
    def from_array(cls, arr) -> "GroupElement":
        a, v, gamma, mu = (float(c) for c in arr)
        return cls(a, v, gamma, mu)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)


@dataclass(frozen=True)
class LieAlgebraElement:
    """Coefficients over e1 = -d/dx, e2 = ix, e3 = i, e4 = d/dx x."""

    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.as_tuple()):
            raise ValueError(f"non-finite Lie algebra element {self}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.c1, self.c2, self.c3, self.c4)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @classmethod
    def basis(cls, j: int) -> "LieAlgebraElement":
        """The basis element e_j, j = 1..4."""
        coeffs = [0.0] * 4
        coeffs[j - 1] = 1.0
        return cls(*coeffs)

    def norm(self) -> float:
        return float(np.max(np.abs(self.as_array())))


def identity() -> GroupElement:
    return GroupElement(0.0, 0.0, 0.0, 1.0)


def multiply(g: GroupElement, g2: GroupElement) -> GroupElement:
    return GroupElement(
        a=g.a + g2.a / g.mu,
        v=g.v + g2.v * g.mu,
        gamma=g.gamma + g2.gamma + g.v * g2.a / g.mu,
        mu=g.mu * g2.mu,
    )


def inverse(g: GroupElement) -> GroupElement:
    return GroupElement(
        a=-g.a * g.mu,
        v=-g.v / g.mu,
        gamma=-g.gamma + g.v * g.a,
        mu=1.0 / g.mu,
    )


def exp_basis(j: int, s: float) -> GroupElement:
    """One-parameter subgroup exp(s e_j)."""
    if j == 1:
        return GroupElement(s, 0.0, 0.0, 1.0)
    if j == 2:
        return GroupElement(0.0, s, 0.0, 1.0)
    if j == 3:
        return GroupElement(0.0, 0.0, s, 1.0)
    if j == 4:
        return GroupElement(0.0, 0.0, 0.0, math.exp(s))
    raise ValueError(f"basis index must be 1..4, got {j}")


def _modulation(g: GroupElement, x: np.ndarray) -> np.ndarray:
    return g.mu * np.exp(1j * (g.gamma + g.v * (x - g.a)))


def act(g: GroupElement, u: WaveField) -> WaveField:
    """g.u, resampling u(mu(x - a)) by band-limited interpolation."""
    grid = u.grid
    resampled = fourier_resample(u.values, grid, scale=g.mu, offset=-g.mu * g.a)
    return WaveField(grid, _modulation(g, grid.x) * resampled)


def act_analytic(g: GroupElement, profile, grid: Grid) -> WaveField:
    """g.psi for a profile given as a callable, evaluated exactly on the nodes."""
    x = grid.x
    return WaveField(grid, _modulation(g, x) * profile(g.mu * (x - g.a)))


def lie_apply(X: LieAlgebraElement, u: WaveField) -> WaveField:
    grid = u.grid
    x = grid.x
    vals = u.values
    out = np.zeros_like(vals)
    if X.c1:
        out -= X.c1 * spectral_derivative(vals, grid)
    if X.c2:
        out += X.c2 * 1j * x * vals
    if X.c3:
        out += X.c3 * 1j * vals
    if X.c4:
        out += X.c4 * spectral_derivative(x * vals, grid)
    return WaveField(grid, out)


def sech(x):
    # cosh overflows past |x| ~ 710; sech is exactly 0 in double there anyway
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(x)


def soliton_profile(grid: Grid) -> WaveField:
    """eta(x) = sech(x)."""
    return WaveField(grid, sech(grid.x))


# Analytic tangent vectors e_j.eta as functions of y.
def _e1_eta(y):
    return sech(y) * np.tanh(y)


def _e2_eta(y):
    return 1j * y * sech(y)


def _e3_eta(y):
    return 1j * sech(y)


def _e4_eta(y):
    return sech(y) * (1.0 - y * np.tanh(y))


TANGENT_PROFILES = (_e1_eta, _e2_eta, _e3_eta, _e4_eta)


def tangent_basis(grid: Grid, g: GroupElement | None = None) -> list[WaveField]:
    """[g.(e_j eta) for j = 1..4], evaluated in closed form."""
    g = identity() if g is None else g
    return [act_analytic(g, prof, grid) for prof in TANGENT_PROFILES]


def free_trajectory(g0: GroupElement, t: float) -> GroupElement:
    """Parameters of the exact V = 0 soliton at time t."""
    return GroupElement(
        a=g0.a + g0.v * t,
        v=g0.v,
        gamma=g0.gamma + 0.5 * (g0.mu**2 + g0.v**2) * t,
        mu=g0.mu,
    )


def free_soliton(g0: GroupElement, t: float, grid: Grid) -> WaveField:
    """Exact solution g(t).eta of the potential-free equation."""
    return act_analytic(free_trajectory(g0, t), sech, grid)
