import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitonlab.grid import (
    Grid,
    GridMismatchError,
    WaveField,
    h1_norm_sq,
    inner,
    integrate,
    fourier_resample,
    l2_norm_sq,
    read_field_csv,
    spectral_derivative,
    symplectic_pairing,
)
from solitonlab.group import sech

GRID = Grid(512, 60.0)


def test_grid_nodes_and_spacing():
    g = Grid(16, 8.0)
    assert g.spacing == 0.5
    np.testing.assert_allclose(g.x, -4.0 + 0.5 * np.arange(16))
    assert g.x[8] == 0.0


@pytest.mark.parametrize("n,length", [(8, 1.0), (1024, 0.0), (1024, -3.0)])
def test_grid_rejects_bad_sizes(n, length):
    with pytest.raises(ValueError):
        Grid(n, length)


def test_wavefield_validates_values():
    with pytest.raises(ValueError):
        WaveField(GRID, np.zeros(10))
    bad = np.zeros(GRID.n_points)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        WaveField(GRID, bad)


def test_mixed_grids_rejected():
    u = GRID.field(np.ones(GRID.n_points))
    v = Grid(256, 60.0).field(np.ones(256))
    with pytest.raises(GridMismatchError):
        inner(u, v)
    with pytest.raises(GridMismatchError):
        u + v


def test_quadrature_of_sech_powers():
    # int sech^2 = 2, int sech^4 = 4/3, int x^2 sech^2 = pi^2/6
    x = GRID.x
    assert integrate(GRID.field(sech(x) ** 2)).real == pytest.approx(2.0, abs=1e-12)
    assert integrate(GRID.field(sech(x) ** 4)).real == pytest.approx(4 / 3, abs=1e-12)
    assert integrate(GRID.field(x**2 * sech(x) ** 2)).real == pytest.approx(np.pi**2 / 6, abs=1e-10)


def test_spectral_derivatives_of_sech():
    x = GRID.x
    s, t = sech(x), np.tanh(x)
    d1 = spectral_derivative(s, GRID, 1)
    d2 = spectral_derivative(s, GRID, 2)
    np.testing.assert_allclose(d1, -s * t, atol=1e-11)
    np.testing.assert_allclose(d2, s * (t**2 - s**2), atol=1e-10)


def test_h1_norm_of_sech():
    # ||sech||^2 + ||sech'||^2 = 2 + 2/3
    assert h1_norm_sq(GRID.sample(sech)) == pytest.approx(8 / 3, abs=1e-11)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_symplectic_form_properties(seed):
    rng = np.random.default_rng(seed)
    x = GRID.x
    u = GRID.field((rng.normal() + 1j * rng.normal()) * sech(x - rng.uniform(-3, 3)))
    v = GRID.field((rng.normal() + 1j * rng.normal()) * np.exp(-(x**2)) * (1 + rng.normal() * x))
    assert symplectic_pairing(u, v) == pytest.approx(-symplectic_pairing(v, u), abs=1e-12)
    assert abs(symplectic_pairing(u, u)) < 1e-12
    # omega(i u, u) = ||u||^2 and omega(u, v) = <u, i v>
    assert symplectic_pairing(u * 1j, u) == pytest.approx(l2_norm_sq(u), rel=1e-12)
    assert symplectic_pairing(u, v) == pytest.approx(inner(u, v * 1j), abs=1e-12)


@pytest.mark.parametrize("offset", [0.37, -2.5, 7.0])
def test_translation_resample_is_exact(offset):
    x = GRID.x
    out = fourier_resample(sech(x).astype(complex), GRID, 1.0, offset)
    inside = np.abs(x + offset) < 0.5 * GRID.domain_length
    np.testing.assert_allclose(out[inside], sech(x + offset)[inside], atol=1e-13)
    assert np.all(out[~inside] == 0)


@pytest.mark.parametrize("scale,offset", [(0.8, 0.0), (1.25, 1.3), (1.1, -2.0)])
def test_scaled_resample_matches_analytic(scale, offset):
    x = GRID.x
    out = fourier_resample(sech(x).astype(complex), GRID, scale, offset)
    np.testing.assert_allclose(out, sech(scale * x + offset), atol=1e-9)


def test_resample_zeroes_points_outside_box():
    x = GRID.x
    out = fourier_resample(np.ones(GRID.n_points, dtype=complex), GRID, 2.0, 0.0)
    outside = np.abs(2.0 * x) > 0.5 * GRID.domain_length
    assert np.all(out[outside] == 0)


def test_csv_roundtrip(tmp_path):
    u = GRID.field(sech(GRID.x) * np.exp(0.3j * GRID.x))
    path = tmp_path / "u.csv"
    from solitonlab.grid import write_field_csv

    write_field_csv(path, u, comment="test field")
    assert path.read_text().startswith("# test field\nx,re,im\n")
    back = read_field_csv(path)
    assert back.grid == GRID
    np.testing.assert_array_equal(back.values, u.values)
