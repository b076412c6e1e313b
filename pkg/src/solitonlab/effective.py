"""Modulation ODEs: the effective-Hamiltonian flow and the bare Newton system.

Convolutions use the orientation (f*g)(a) = int f(y) g(a - y) dy on a
dedicated quadrature grid, independent of any PDE grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .group import sech
from .potential import PotentialSpec

CONV_POINTS = 4096


@dataclass(frozen=True)
class ModState:
    a: float
    v: float
    gamma: float
    mu: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.v, self.gamma, self.mu], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ModState":
        return cls(*(float(c) for c in arr))


@dataclass
class ModulationTrajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n, 4): a, v, gamma, mu
    h_eff: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.h_eff)):
            raise ValueError("trajectory arrays differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def a(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def gamma(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def mu(self) -> np.ndarray:
        return self.states[:, 3]

    def state(self, i: int) -> ModState:
        return ModState.from_array(self.states[i])

    def interpolate(self, t) -> np.ndarray:
        """Linear interpolation of (a, v, gamma, mu) at times t."""
        t = np.atleast_1d(t)
        return np.stack([np.interp(t, self.times, self.states[:, j]) for j in range(4)], axis=1)

    def write_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            fh.write("t,a,v,gamma,mu,H_eff\n")
            for t, s, e in zip(self.times, self.states, self.h_eff):
                fh.write(",".join(repr(float(c)) for c in (t, *s, e)) + "\n")


@lru_cache(maxsize=64)
def _kernels(h: float, mu: float):
    """Quadrature nodes and the two even kernels sech^2(mu y), mu y sech^2(mu y) tanh(mu y)."""
    length = max(40.0, 10.0 / h) / min(mu, 1.0)
    dy = length / CONV_POINTS
    y = -0.5 * length + dy * np.arange(CONV_POINTS)
    s2 = sech(mu * y) ** 2
    moment = mu * y * s2 * np.tanh(mu * y)
    return y, dy, s2, moment


def _conv_parts(V: PotentialSpec, a: float, mu: float, orders=(0, 1)):
    y, dy, s2, moment = _kernels(float(V.h), float(mu))
    vals = dict(zip(orders, V.derivatives(a - y, orders)))
    return dy, s2, moment, vals


def conv_sech2(V: PotentialSpec, a: float, mu: float = 1.0, order: int = 0) -> float:
    """int sech^2(mu y) V^(order)(a - y) dy."""
    dy, s2, _, vals = _conv_parts(V, a, mu, (order,))
    return float(dy * np.dot(s2, vals[order]))


def conv_moment(V: PotentialSpec, a: float, mu: float = 1.0) -> float:
    """mu int (mu y) sech^2(mu y) tanh(mu y) V(a - y) dy."""
    dy, _, moment, vals = _conv_parts(V, a, mu, (0,))
    return float(mu * dy * np.dot(moment, vals[0]))


def effective_rhs(s: ModState, V: PotentialSpec) -> np.ndarray:
    """Hamiltonian vector field of the restricted Hamiltonian (mu is conserved)."""
    a, v, mu = s.a, s.v, s.mu
    if V.is_zero:
        return np.array([v, 0.0, 0.5 * v**2 + 0.5 * mu**2, 0.0])
    dy, s2, moment, vals = _conv_parts(V, a, mu, (0, 1))
    c0 = dy * np.dot(s2, vals[0])
    c1 = dy * np.dot(s2, vals[1])
    cm = mu * dy * np.dot(moment, vals[0])
    v_dot = -0.5 * mu * c1
    gamma_dot = 0.5 * v**2 + 0.5 * mu**2 - mu * c0 + cm
    return np.array([v, v_dot, gamma_dot, 0.0])


def newton_rhs(s: ModState, V: PotentialSpec) -> np.ndarray:
    """Point-particle dynamics in V with the O(h^2) corrections dropped."""
    return np.array([
        s.v,
        -float(V(s.a, 1)),
        0.5 + 0.5 * s.v**2 - float(V(s.a)),
        0.0,
    ])


def effective_hamiltonian(s: ModState, V: PotentialSpec) -> float:
    """mu v^2/2 - mu^3/6 + mu^2/2 (V * sech^2(mu .))(a)."""
    pot = 0.0 if V.is_zero else conv_sech2(V, s.a, s.mu)
    return 0.5 * s.mu * s.v**2 - s.mu**3 / 6.0 + 0.5 * s.mu**2 * pot


def _effective_hamiltonian_batch(states: np.ndarray, V: PotentialSpec,
                                 chunk: int = 512) -> np.ndarray:
    a, v, mu = states[:, 0], states[:, 1], states[:, 3]
    pot = np.zeros(len(states))
    if not V.is_zero:
        for m in np.unique(mu):
            idx = np.flatnonzero(mu == m)
            y, dy, s2, _ = _kernels(float(V.h), float(m))
            for start in range(0, len(idx), chunk):
                sel = idx[start:start + chunk]
                pot[sel] = dy * (V(a[sel, None] - y[None, :]) @ s2)
    return 0.5 * mu * v**2 - mu**3 / 6.0 + 0.5 * mu**2 * pot


def hamiltonian_vector_field(f: Callable[[ModState], float], s: ModState,
                             eps: float = 1e-5) -> np.ndarray:
    """(a', v', gamma', mu') of the flow of f under mu dv^da + v dmu^da + dgamma^dmu,
    from centered-difference partials of f."""
    p = s.as_array()
    grads = np.empty(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = eps
        grads[i] = (f(ModState.from_array(p + e)) - f(ModState.from_array(p - e))) / (2 * eps)
    f_a, f_v, f_g, f_mu = grads
    mu, v = s.mu, s.v
    return np.array([
        f_v / mu,
        -f_a / mu - v * f_g / mu,
        v * f_v / mu - f_mu,
        f_g,
    ])


def _rk4_arrays(fun, y0: np.ndarray, t_end: float, dt: float):
    n = int(round(t_end / dt))
    if abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a whole number of dt={dt} steps")
    times = dt * np.arange(n + 1)
    ys = np.empty((n + 1, len(y0)))
    ys[0] = y0
    y = y0.astype(float)
    for i in range(n):
        t = times[i]
        k1 = fun(t, y)
        k2 = fun(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = fun(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = fun(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return times, ys


def integrate_ode(rhs: Callable[[ModState, PotentialSpec], np.ndarray], s0: ModState,
                  t_end: float, dt: float = 1e-3, V: PotentialSpec | None = None,
                  ) -> ModulationTrajectory:
    """Classical fixed-step RK4, recording every step.

    `rhs` is called as rhs(state, V); H_eff is the effective Hamiltonian
    along the computed states.
    """
    if not 0 < dt <= 1e-2:
        raise ValueError(f"dt must lie in (0, 1e-2], got {dt}")
    V = PotentialSpec.zero() if V is None else V
    times, ys = _rk4_arrays(lambda t, y: rhs(ModState.from_array(y), V),
                            s0.as_array(), t_end, dt)
    h_eff = _effective_hamiltonian_batch(ys, V)
    return ModulationTrajectory(times, ys, h_eff)


def ode_compare(h: float, delta: float, eps1: Callable[[float], float],
                eps2: Callable[[float], float], f: Callable, t_end: float,
                a0: float = 1.0, v0: float = 0.0, dt: float = 1e-3) -> tuple[float, float]:
    """Sup-norm gaps between the perturbed system a' = v + eps1, v' = h f(h a) + eps2
    and the unperturbed one from identical data."""

    def perturbed(t, y):
        return np.array([y[1] + eps1(t), h * f(h * y[0]) + eps2(t)])

    def exact(t, y):
        return np.array([y[1], h * f(h * y[0])])

    y0 = np.array([a0, v0], dtype=float)
    n = max(1, int(math.ceil(t_end / dt)))
    step = t_end / n
    _, yp = _rk4_arrays(perturbed, y0, t_end, step)
    _, ye = _rk4_arrays(exact, y0, t_end, step)
    gaps = np.abs(yp - ye).max(axis=0)
    return float(gaps[0]), float(gaps[1])


def ode_compare_bounds(h: float, delta: float) -> tuple[float, float]:
    """h^{2-2 delta} log(1/h) and h^{3-2 delta} log(1/h)."""
    L = math.log(1.0 / h)
    return h ** (2 - 2 * delta) * L, h ** (3 - 2 * delta) * L


def time_window(h: float, delta: float) -> float:
    """delta log(1/h) / h."""
    return delta * math.log(1.0 / h) / h
