import math

import numpy as np
import pytest

from solitonlab.grid import Grid, h1_norm_sq, inner, integrate, symplectic_pairing
from solitonlab.group import GroupElement, act_analytic, sech, tangent_basis
from solitonlab.modulation import extract
from solitonlab.potential import PotentialSpec
from solitonlab.solver import SolverConfig, evolve
from solitonlab.spectral import (
    C2,
    COERCIVITY_BOUND,
    RHO0,
    LinearizedOperator,
    apply,
    coercivity_constant,
    decay_slope,
    eigen_extremes,
    forced_residual,
    forcing,
    lyapunov_quadratic,
    matrix,
    solve_forced,
    tilde_w,
    write_forced_csv,
    write_spectrum_csv,
)

SMALL = Grid(512, 40.0)
WIDE = Grid(1024, 80.0)


def _residual(op, field, target):
    r = apply(op, WIDE.field(field)).values - target
    return math.sqrt(WIDE.spacing * np.sum(np.abs(r) ** 2))


def test_constants():
    assert RHO0 == pytest.approx(9 / (2 * (12 + math.pi**2)))
    assert RHO0 == pytest.approx(0.20577, abs=1e-5)
    assert COERCIVITY_BOUND == pytest.approx(0.05553, abs=1e-5)
    assert C2 * COERCIVITY_BOUND == pytest.approx(1.0)


def test_operator_validation():
    with pytest.raises(ValueError):
        LinearizedOperator("L0", SMALL)
    with pytest.raises(ValueError):
        matrix(LinearizedOperator("calL", SMALL))
    with pytest.raises(ValueError):
        apply(LinearizedOperator("Lplus", SMALL), SMALL.field(1j * sech(SMALL.x)))
    with pytest.raises(ValueError):
        apply(LinearizedOperator("Lplus", SMALL), WIDE.field(sech(WIDE.x)))
    with pytest.raises(ValueError):
        eigen_extremes(LinearizedOperator("Lplus", SMALL), 7)


def test_closed_form_actions():
    x = WIDE.x
    eta, t = sech(x), np.tanh(x)
    Lp, Lm = LinearizedOperator("Lplus", WIDE), LinearizedOperator("Lminus", WIDE)
    # L+ eta = -2 eta^3, L- eta = 0, L+ eta' = 0, L+ eta^2 = -3/2 eta^2
    assert _residual(Lp, eta, -2 * eta**3) < 1e-10
    assert _residual(Lm, eta, 0.0) < 1e-10
    assert _residual(Lp, -eta * t, 0.0) < 1e-10
    assert _residual(Lp, eta**2, -1.5 * eta**2) < 1e-10
    # L+ (x eta)' = -eta
    assert _residual(Lp, eta - x * eta * t, -eta) < 1e-10


def test_calL_acts_blockwise():
    x = WIDE.x
    f, g = sech(x) ** 2, sech(x) * np.tanh(x)
    out = apply(LinearizedOperator("calL", WIDE), WIDE.field(f + 1j * g)).values
    plus = apply(LinearizedOperator("Lplus", WIDE), WIDE.field(f)).values
    minus = apply(LinearizedOperator("Lminus", WIDE), WIDE.field(g)).values
    np.testing.assert_allclose(out, plus + 1j * minus, atol=1e-14)


@pytest.mark.parametrize("kind", ["Lplus", "Lminus"])
def test_self_adjoint_and_matrix_matches_apply(kind):
    rng = np.random.default_rng(5)
    op = LinearizedOperator(kind, SMALL)
    x = SMALL.x
    f = SMALL.field(np.exp(-0.5 * (x - rng.uniform(-2, 2)) ** 2))
    g = SMALL.field(x * np.exp(-0.3 * (x - rng.uniform(-2, 2)) ** 2))
    assert inner(apply(op, f), g) == pytest.approx(inner(f, apply(op, g)), abs=1e-12)
    np.testing.assert_allclose(matrix(op) @ f.real, apply(op, f).real, atol=1e-11)
    m = matrix(op)
    np.testing.assert_array_equal(m, m.T)


def test_calL_is_self_adjoint_in_the_real_inner_product():
    rng = np.random.default_rng(6)
    op = LinearizedOperator("calL", SMALL)
    x = SMALL.x
    for _ in range(3):
        c = rng.normal(size=4)
        u = SMALL.field((c[0] + 1j * c[1]) * np.exp(-0.5 * (x - c[2]) ** 2))
        w = SMALL.field((c[3] + 0.5j) * x * np.exp(-0.4 * x**2))
        assert inner(apply(op, u), w) == pytest.approx(inner(u, apply(op, w)), abs=1e-10)


def test_eigenvalues_of_lplus():
    (l0, v0), (l1, v1), (l2, _) = eigen_extremes(LinearizedOperator("Lplus", SMALL), 3)
    assert l0 == pytest.approx(-1.5, abs=1e-4)
    assert l1 == pytest.approx(0.0, abs=1e-4)
    # continuum starts at 1/2
    assert l2 > 0.5 - 0.05
    x = SMALL.x
    ground = sech(x) ** 2 / math.sqrt(4 / 3)
    np.testing.assert_allclose(v0.real, ground, atol=1e-6)
    zero_mode = sech(x) * np.tanh(x) / math.sqrt(2 / 3)
    np.testing.assert_allclose(v1.real, zero_mode, atol=1e-6)


def test_eigenvalues_of_lminus():
    (l0, v0), (l1, _) = eigen_extremes(LinearizedOperator("Lminus", SMALL), 2)
    assert l0 == pytest.approx(0.0, abs=1e-4)
    assert l1 > 0.5 - 0.05
    np.testing.assert_allclose(v0.real, sech(SMALL.x) / math.sqrt(2.0), atol=1e-6)


def test_forced_solution_properties():
    f = solve_forced(WIDE)
    assert forced_residual(WIDE) < 1e-8
    np.testing.assert_allclose(f.real, f.real[::-1][np.r_[-1, 0:WIDE.n_points - 1]], atol=1e-10)
    assert abs(integrate(f * WIDE.field(sech(WIDE.x))).real) < 1e-7
    for e in tangent_basis(WIDE):
        assert abs(symplectic_pairing(f, e)) < 1e-7
    assert np.all(f.imag == 0)


def test_forced_solution_is_stable_under_refinement():
    coarse = solve_forced(Grid(512, 80.0))
    fine = solve_forced(WIDE)
    np.testing.assert_allclose(fine.real[::2], coarse.real, atol=1e-9)


def test_forcing_projection_identity():
    # int (pi^2/12 + x^2) eta (x eta)' = 0, which is why int f eta vanishes
    x = WIDE.x
    eta = sech(x)
    dxeta = WIDE.field(eta - x * eta * np.tanh(x))
    assert integrate(forcing(WIDE) * dxeta).real == pytest.approx(0.0, abs=1e-12)


def test_decay_slope_of_pure_exponential():
    u = WIDE.field(np.exp(-np.abs(WIDE.x)))
    assert decay_slope(u) == pytest.approx(-1.0, abs=1e-10)
    v = WIDE.field(WIDE.x**3 * np.exp(-np.abs(WIDE.x)) + 1e-300)
    with pytest.raises(ValueError):
        decay_slope(v, x_min=40.0)


def test_tilde_w_examples():
    assert h1_norm_sq(tilde_w(0.3, 1.0, PotentialSpec.zero(), WIDE)) == 0.0
    V = PotentialSpec.sech2well(-1.0, 0.2)
    f = solve_forced(WIDE)
    w = tilde_w(0.0, 1.0, V, WIDE)
    # V''(0) = 2 h^2
    np.testing.assert_allclose(w.real, -0.04 * f.real, atol=1e-15)
    w2 = tilde_w(0.0, 2.0, V, WIDE)
    np.testing.assert_allclose(w2.real, w.real / 16, atol=1e-15)
    with pytest.raises(ValueError):
        tilde_w(0.0, 3.0, V, WIDE)


@pytest.mark.parametrize("h,a", [(0.2, -3.0), (0.1, 0.0), (0.05, 7.0)])
def test_tilde_w_size_and_orthogonality(h, a):
    V = PotentialSpec.sech2well(-1.0, h)
    w = tilde_w(a, 1.0, V, WIDE)
    c = V.sup_w(2) * math.sqrt(h1_norm_sq(solve_forced(WIDE))) / 2
    assert math.sqrt(h1_norm_sq(w)) <= c * h**2
    for e in tangent_basis(WIDE):
        assert abs(symplectic_pairing(w, e)) < 1e-7


def test_lyapunov_quadratic_examples():
    eta = SMALL.field(sech(SMALL.x))
    assert lyapunov_quadratic(eta) == pytest.approx(-8 / 3, abs=1e-10)
    assert lyapunov_quadratic(eta * 1j) == pytest.approx(0.0, abs=1e-10)
    deta = SMALL.field(-sech(SMALL.x) * np.tanh(SMALL.x))
    assert lyapunov_quadratic(deta) == pytest.approx(0.0, abs=1e-10)


def test_coercivity_constants():
    c = coercivity_constant(SMALL)
    assert c >= COERCIVITY_BOUND
    assert c < 0.5
    u = coercivity_constant(SMALL, constrained=False)
    assert -1.5 <= u < 0


def test_random_orthogonal_fields_respect_coercivity():
    from solitonlab.spectral import _constraint_rows

    rng = np.random.default_rng(9)
    rows = _constraint_rows(SMALL)
    q, _ = np.linalg.qr(rows.T)
    x = SMALL.x
    c = coercivity_constant(SMALL)
    for _ in range(5):
        p = rng.normal(size=(2, 4))
        re = np.polyval(p[0], x) * np.exp(-0.5 * x**2)
        im = np.polyval(p[1], x) * np.exp(-0.5 * x**2)
        vec = np.concatenate([re, im])
        vec -= q @ (q.T @ vec)
        n = SMALL.n_points
        w = SMALL.field(vec[:n] + 1j * vec[n:])
        for e in tangent_basis(SMALL):
            assert abs(symplectic_pairing(w, e)) < 1e-10
        assert lyapunov_quadratic(w) >= (c - 1e-9) * h1_norm_sq(w)


def test_extracted_remainder_obeys_coercivity():
    V = PotentialSpec.sech2well(-1.0, 0.2)
    grid = Grid(1024, 60.0)
    cfg = SolverConfig(grid, 2e-3, 6.0, V, observer_stride=250)
    last = [extract(act_analytic(GroupElement(-3, 0, 0, 1), sech, grid), GroupElement(-3, 0, 0, 1))]

    def obs(t, u):
        last.append(extract(u, last[-1].g))

    evolve(cfg, act_analytic(GroupElement(-3, 0, 0, 1), sech, grid), obs)
    for d in last[2:]:
        ratio = lyapunov_quadratic(d.w) / h1_norm_sq(d.w)
        assert COERCIVITY_BOUND <= ratio <= 4.0


def test_csv_writers(tmp_path):
    rows = [("Lplus", 0, -1.5), ("Lminus", 0, 0.0)]
    write_spectrum_csv(tmp_path / "s.csv", rows, comment="spectrum")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[:3] == ["# spectrum", "kind,index,eigenvalue", "Lplus,0,-1.5"]
    write_forced_csv(tmp_path / "f.csv", solve_forced(WIDE))
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,f"
    assert len(lines) == 1 + WIDE.n_points
