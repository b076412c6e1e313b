"""Periodic 1D grid, complex fields, spectral derivatives and quadrature."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class GridMismatchError(ValueError):
    """Two fields live on incompatible discretizations."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2)."""

    n_points: int
    domain_length: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 16:
            raise ValueError(f"n_points must be an integer >= 16, got {self.n_points}")
        if not self.domain_length > 0:
            raise ValueError(f"domain_length must be positive, got {self.domain_length}")

    @property
    def spacing(self) -> float:
        return self.domain_length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.domain_length + self.spacing * np.arange(self.n_points)

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT ordering."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @cached_property
    def ik(self) -> np.ndarray:
        # Nyquist coefficient zeroed so real fields stay real under d/dx.
        ik = 1j * self.k
        if self.n_points % 2 == 0:
            ik[self.n_points // 2] = 0.0
        return ik

    def field(self, values) -> "WaveField":
        return WaveField(self, values)

    def sample(self, fn) -> "WaveField":
        """Evaluate a vectorized function at the grid nodes."""
        return WaveField(self, fn(self.x))


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex samples of a function on a periodic grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains NaN or Inf")
        object.__setattr__(self, "values", values)

    # light arithmetic so formulas read naturally

    def _other(self, other):
        if isinstance(other, WaveField):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return WaveField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return WaveField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return WaveField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return WaveField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return WaveField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return WaveField(self.grid, -self.values)

    def conj(self) -> "WaveField":
        return WaveField(self.grid, self.values.conj())

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def to_csv(self, path) -> None:
        write_field_csv(path, self)


def check_same_grid(u: WaveField, v: WaveField) -> None:
    if u.grid != v.grid:
        raise GridMismatchError(f"grids differ: {u.grid} vs {v.grid}")


def integrate(field_product: WaveField) -> complex:
    """Rectangle rule, which is the periodic trapezoid rule."""
    return complex(field_product.grid.spacing * field_product.values.sum())


def spectral_derivative(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Array-level spectral derivative, used in hot loops.

    Odd orders drop the Nyquist mode; even orders keep its -k^2 weight so
    that second-order operators stay definite on the whole grid.
    """
    mult = grid.ik**order if order % 2 else (1j * grid.k) ** order
    return np.fft.ifft(mult * np.fft.fft(values))


def derivative(field: WaveField) -> WaveField:
    return WaveField(field.grid, spectral_derivative(field.values, field.grid))


def l2_norm_sq(field: WaveField) -> float:
    return field.grid.spacing * float(np.sum(np.abs(field.values) ** 2))


def h1_norm_sq(field: WaveField) -> float:
    """||u||_{L2}^2 + ||u'||_{L2}^2."""
    return l2_norm_sq(field) + l2_norm_sq(derivative(field))


def h1_norm(field: WaveField) -> float:
    return float(np.sqrt(h1_norm_sq(field)))


def inner(u: WaveField, v: WaveField) -> float:
    """Real inner product Re int u conj(v)."""
    check_same_grid(u, v)
    return u.grid.spacing * float(np.real(np.vdot(v.values, u.values)))


def symplectic_pairing(u: WaveField, v: WaveField) -> float:
    """omega(u, v) = Im int u conj(v)."""
    check_same_grid(u, v)
    return u.grid.spacing * float(np.imag(np.vdot(v.values, u.values)))


def fourier_resample(values: np.ndarray, grid: Grid, scale: float = 1.0,
                     offset: float = 0.0) -> np.ndarray:
    """Evaluate the trigonometric interpolant of `values` at ``scale*x_k + offset``.

    Uses a chirp-z transform so the cost stays O(N log N) for any scale.
    Points falling outside the fundamental box are set to zero: the samples
    represent a decaying function on the line, not a periodic one.
    """
    from scipy.signal import czt

    n = grid.n_points
    L = grid.domain_length
    ypts = scale * grid.x + offset
    outside = (ypts < -0.5 * L) | (ypts >= 0.5 * L)
    if scale == 1.0:
        # pure translation: a Fourier phase, exact to roundoff
        out = np.fft.ifft(np.fft.fft(values) * np.exp(1j * grid.k * offset))
        if n % 2 == 0:
            vhat_nyq = np.fft.fft(values)[n // 2] / n
            out += vhat_nyq * (np.cos(np.pi * n / L * (ypts + 0.5 * L))
                               - np.exp(1j * grid.k[n // 2] * (ypts + 0.5 * L)))
        out[outside] = 0.0
        return out
    coeffs = np.fft.fftshift(np.fft.fft(values)) / n  # modes m = -n/2 .. n/2-1
    m = np.arange(n) - n // 2
    kappa = 2 * np.pi * m / L
    # p(y) = sum_m c_m exp(i kappa_m (y + L/2)); y_j + L/2 = s + scale*j*dx
    s = 0.5 * L * (1.0 - scale) + offset
    nyq = coeffs[0] if n % 2 == 0 else 0.0
    if n % 2 == 0:
        coeffs = coeffs.copy()
        coeffs[0] = 0.0
    d = coeffs * np.exp(1j * kappa * s)
    w = np.exp(2j * np.pi * scale / n)
    j = np.arange(n)
    out = czt(d, m=n, w=w, a=1.0) * np.exp(-2j * np.pi * scale * j * (n // 2) / n)
    if n % 2 == 0:
        # split the Nyquist mode symmetrically (a cosine)
        out = out + nyq * np.cos(np.pi * n / L * (ypts + 0.5 * L))
    out[outside] = 0.0
    return out


def write_field_csv(path, field: WaveField, comment: str | None = None) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "re", "im"])
        for x, z in zip(field.grid.x, field.values):
            writer.writerow([repr(float(x)), repr(float(z.real)), repr(float(z.imag))])


def read_field_csv(path) -> WaveField:
    rows = []
    with Path(path).open() as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if header != ["x", "re", "im"]:
            raise ValueError(f"unexpected header {header}")
        for row in reader:
            rows.append([float(c) for c in row])
    data = np.array(rows)
    n = len(data)
    spacing = data[1, 0] - data[0, 0]
    grid = Grid(n, float(np.round(spacing * n, 12)))
    return WaveField(grid, data[:, 1] + 1j * data[:, 2])
