import numpy as np
import pytest

from solitonlab.group import sech
from solitonlab.potential import PotentialSpec

Y = np.linspace(-4, 4, 41)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_sech2well_derivatives_match_finite_differences(order):
    W = PotentialSpec.sech2well(-1.0, 1.0)
    eps = 1e-5
    fd = (W.w_derivative(Y + eps, order - 1) - W.w_derivative(Y - eps, order - 1)) / (2 * eps)
    np.testing.assert_allclose(W.w_derivative(Y, order), fd, atol=1e-8)


def test_chain_rule_scaling():
    h = 0.2
    V = PotentialSpec.sech2well(-1.0, h)
    x = np.linspace(-10, 10, 21)
    for k in range(4):
        np.testing.assert_allclose(V(x, k), h**k * V.w_derivative(h * x, k), rtol=1e-14)
    np.testing.assert_allclose(V(x), -sech(h * x) ** 2, rtol=1e-14)


def test_shared_derivative_evaluation_agrees():
    V = PotentialSpec.sech2well(-0.7, 0.3)
    x = np.linspace(-20, 20, 101)
    for k, d in zip((0, 1, 2), V.derivatives(x, (0, 1, 2))):
        np.testing.assert_allclose(d, V(x, k), rtol=1e-14)


def test_tabulated_spline_tracks_analytic_profile():
    y = np.linspace(-10, 10, 801)
    tab = PotentialSpec("tabulated", h=0.5, table_y=tuple(y), table_w=tuple(-sech(y) ** 2))
    ref = PotentialSpec.sech2well(-1.0, 0.5)
    x = np.linspace(-6, 6, 37)
    np.testing.assert_allclose(tab(x), ref(x), atol=1e-7)
    np.testing.assert_allclose(tab(x, 1), ref(x, 1), atol=1e-5)


def test_constant_and_zero_profiles():
    c = PotentialSpec.constant(0.3)
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(c(x), 0.3)
    np.testing.assert_allclose(c(x, 1), 0.0)
    z = PotentialSpec.zero()
    assert z.is_zero
    np.testing.assert_array_equal(z(x, 2), 0.0)
    assert PotentialSpec.sech2well(0.0, 0.1).is_zero


def test_sup_norms():
    W = PotentialSpec.sech2well(-1.0, 0.1)
    assert W.sup_w(0) == pytest.approx(1.0)
    assert W.sup_w(2) == pytest.approx(2.0, rel=1e-6)


@pytest.mark.parametrize("kwargs", [
    dict(profile_id="bogus"),
    dict(profile_id="sech2well", h=0.0),
    dict(profile_id="tabulated"),
    dict(profile_id="custom", custom=(abs,)),
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        PotentialSpec(**kwargs)
