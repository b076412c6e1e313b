"""Linearized operators around the soliton and the quantities built from them.

    L+ = -1/2 d^2/dx^2 - 3 eta^2 + 1/2
    L- = -1/2 d^2/dx^2 -   eta^2 + 1/2
    calL w = L+ Re w + i L- Im w

Dense work (eigenpairs, the forced solve, coercivity) uses the spectral
second-derivative matrix of the periodic grid, so it agrees with `apply` to
roundoff.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from .grid import Grid, WaveField, inner, spectral_derivative
from .group import sech
from .potential import PotentialSpec

KINDS = ("Lplus", "Lminus", "calL")

RHO0 = 9.0 / (2.0 * (12.0 + math.pi**2))
COERCIVITY_BOUND = 2.0 * RHO0 / (7.0 + 2.0 * RHO0)
C2 = (7.0 + 2.0 * RHO0) / (2.0 * RHO0)


@dataclass(frozen=True)
class LinearizedOperator:
    kind: str
    grid: Grid

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}; expected one of {KINDS}")

    @property
    def well_depth(self) -> float:
        return 3.0 if self.kind == "Lplus" else 1.0


def _real_apply(depth: float, grid: Grid, f: np.ndarray) -> np.ndarray:
    eta2 = sech(grid.x) ** 2
    f2 = spectral_derivative(f, grid, order=2).real
    return -0.5 * f2 - depth * eta2 * f + 0.5 * f


def apply(op: LinearizedOperator, w: WaveField) -> WaveField:
    if w.grid != op.grid:
        raise ValueError("field and operator live on different grids")
    if op.kind == "calL":
        re = _real_apply(3.0, op.grid, w.real)
        im = _real_apply(1.0, op.grid, w.imag)
        return WaveField(op.grid, re + 1j * im)
    if np.any(w.imag != 0):
        raise ValueError(f"{op.kind} acts on real fields; got a complex input")
    return WaveField(op.grid, _real_apply(op.well_depth, op.grid, w.real))


@lru_cache(maxsize=8)
def _second_derivative_matrix(grid: Grid) -> np.ndarray:
    eye = np.eye(grid.n_points)
    d2 = np.fft.ifft((-grid.k**2)[:, None] * np.fft.fft(eye, axis=0), axis=0).real
    return 0.5 * (d2 + d2.T)


def matrix(op: LinearizedOperator) -> np.ndarray:
    """Dense symmetric matrix of L+ or L- on the grid nodes."""
    if op.kind == "calL":
        raise ValueError("calL has no single real matrix; use its L+ and L- blocks")
    eta2 = sech(op.grid.x) ** 2
    m = -0.5 * _second_derivative_matrix(op.grid)
    m[np.diag_indices_from(m)] += 0.5 - op.well_depth * eta2
    return m


def _normalize(vec: np.ndarray, grid: Grid) -> np.ndarray:
    vec = vec / math.sqrt(grid.spacing * float(vec @ vec))
    first_pos = int(np.argmax(grid.x > 0))
    return -vec if vec[first_pos] < 0 else vec


def eigen_extremes(op: LinearizedOperator, count: int = 3) -> list[tuple[float, WaveField]]:
    """Lowest `count` eigenpairs, L2-normalized, positive at the first node with x > 0."""
    if not 1 <= count <= 6:
        raise ValueError(f"count must lie in 1..6, got {count}")
    vals, vecs = scipy.linalg.eigh(matrix(op), subset_by_index=[0, count - 1])
    return [(float(lam), WaveField(op.grid, _normalize(vecs[:, i], op.grid)))
            for i, lam in enumerate(vals)]


def forcing(grid: Grid) -> WaveField:
    """(pi^2/12 + x^2) eta."""
    x = grid.x
    return WaveField(grid, (math.pi**2 / 12.0 + x**2) * sech(x))


@lru_cache(maxsize=8)
def _forced_solution(grid: Grid) -> np.ndarray:
    Lp = matrix(LinearizedOperator("Lplus", grid))
    vals, vecs = scipy.linalg.eigh(Lp)
    kernel = vecs[:, int(np.argmin(np.abs(vals)))]
    rhs = forcing(grid).real
    rhs = rhs - (kernel @ rhs) * kernel
    n = grid.n_points
    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = Lp
    bordered[:n, n] = kernel
    bordered[n, :n] = kernel
    sol = np.linalg.solve(bordered, np.append(rhs, 0.0))
    f = sol[:n]
    return f - (kernel @ f) * kernel


def solve_forced(grid: Grid) -> WaveField:
    """The solution of L+ f = (pi^2/12 + x^2) eta orthogonal to the kernel of L+.

    The solution decays like x^3 e^{-|x|}, so the box should be wide enough
    for that tail to be negligible at the edges (L = 80 leaves about 1e-12).
    """
    return WaveField(grid, _forced_solution(grid).copy())


def forced_residual(grid: Grid) -> float:
    """L2 norm of L+ f - (pi^2/12 + x^2) eta."""
    f = solve_forced(grid)
    r = apply(LinearizedOperator("Lplus", grid), f) - forcing(grid)
    return math.sqrt(grid.spacing * float(np.sum(np.abs(r.values) ** 2)))


def decay_slope(field: WaveField, x_min: float = 10.0, margin: float = 5.0) -> float:
    """Least-squares slope of log|f| against x on [x_min, L/2 - margin]."""
    x = field.grid.x
    sel = (x >= x_min) & (x <= 0.5 * field.grid.domain_length - margin)
    if sel.sum() < 2:
        raise ValueError("decay window is empty; use a wider box")
    mag = np.abs(field.values[sel])
    if np.any(mag == 0):
        raise ValueError("field vanishes inside the decay window")
    return float(np.polyfit(x[sel], np.log(mag), 1)[0])


def tilde_w(a: float, mu: float, V: PotentialSpec, grid: Grid) -> WaveField:
    """Stationary approximate residual -(V''(a) / (2 mu^4)) f."""
    if not 0.5 <= mu <= 2.0:
        raise ValueError(f"mu must lie in [1/2, 2], got {mu}")
    if V.is_zero:
        return grid.field(np.zeros(grid.n_points))
    scale = -float(V(a, 2)) / (2.0 * mu**4)
    return solve_forced(grid) * scale


def lyapunov_quadratic(w: WaveField) -> float:
    """<calL w, w> in the real inner product."""
    return inner(apply(LinearizedOperator("calL", w.grid), w), w)


def _constraint_rows(grid: Grid) -> np.ndarray:
    """Rows c with c . (Re w, Im w) = omega(w, e_j eta), up to sign and dx."""
    x = grid.x
    eta = sech(x)
    zero = np.zeros_like(x)
    return np.array([
        np.concatenate([zero, eta * np.tanh(x)]),
        np.concatenate([x * eta, zero]),
        np.concatenate([eta, zero]),
        np.concatenate([zero, eta * (1.0 - x * np.tanh(x))]),
    ])


def _quadratic_forms(grid: Grid):
    dx = grid.spacing
    d2 = _second_derivative_matrix(grid)
    q = scipy.linalg.block_diag(matrix(LinearizedOperator("Lplus", grid)),
                                matrix(LinearizedOperator("Lminus", grid))) * dx
    h1 = np.eye(grid.n_points) - d2
    gram = scipy.linalg.block_diag(h1, h1) * dx
    return q, gram


def coercivity_constant(grid: Grid, constrained: bool = True) -> float:
    """min <calL w, w> / ||w||_{H1}^2, over w with omega(w, e_j eta) = 0 when constrained."""
    q, gram = _quadratic_forms(grid)
    if constrained:
        z = scipy.linalg.null_space(_constraint_rows(grid))
        q = z.T @ q @ z
        gram = z.T @ gram @ z
    vals = scipy.linalg.eigh(q, gram, eigvals_only=True, subset_by_index=[0, 0])
    return float(vals[0])


def write_spectrum_csv(path, rows, comment: str | None = None) -> None:
    """rows of (kind, index, eigenvalue)."""
    with Path(path).open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["kind", "index", "eigenvalue"])
        for kind, idx, lam in rows:
            writer.writerow([kind, int(idx), repr(float(lam))])


def write_forced_csv(path, f: WaveField, comment: str | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "f"])
        for x, val in zip(f.grid.x, f.real):
            writer.writerow([repr(float(x)), repr(float(val))])
