"""Symplectic decomposition u = g.(eta + w) and the modulation diagnostics.

The parameters g(u) are fixed by the four conditions

    omega(g^{-1}.u - eta, e_j.eta) = 0,   j = 1..4.

Because the action is conformally symplectic (omega(g.u, g.v) = mu omega(u, v)),
each condition equals (1/mu) omega(u, g.(e_j eta)) - omega(eta, e_j eta).  The
tangent vectors g.(e_j eta) are known in closed form, so the Newton iteration
never has to resample u; only the final residual field w does.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid, WaveField, h1_norm, l2_norm_sq, symplectic_pairing
from .group import (
    GroupElement,
    LieAlgebraElement,
    act,
    inverse,
    soliton_profile,
    tangent_basis,
)
from .potential import PotentialSpec

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
FD_STEP = 1e-6


class NoConvergence(RuntimeError):
    """Modulation parameters could not be extracted; u has left the soliton tube."""


@dataclass(frozen=True)
class Decomposition:
    g: GroupElement
    w: WaveField
    ortho_residual: tuple[float, float, float, float]
    newton_iters: int

    @property
    def w_l2(self) -> float:
        return float(np.sqrt(l2_norm_sq(self.w)))

    @property
    def w_h1(self) -> float:
        return h1_norm(self.w)

    @property
    def ortho_max(self) -> float:
        return float(np.max(np.abs(self.ortho_residual)))


@dataclass(frozen=True)
class AlphaBeta:
    alpha: float
    beta: float


@lru_cache(maxsize=16)
def _gram_on(grid: Grid):
    """omega-Gram matrix of the tangent basis at eta, the basis, and omega(eta, e_j eta)."""
    eta = soliton_profile(grid)
    basis = tangent_basis(grid)
    # gram[k, j] = omega(e_j eta, e_k eta)
    gram = np.array([[symplectic_pairing(ej, ek) for ej in basis] for ek in basis])
    ref = np.array([symplectic_pairing(eta, ej) for ej in basis])
    return gram, basis, ref


def pairing_residual(u: WaveField, g: GroupElement) -> np.ndarray:
    """F_j(g) = omega(g^{-1}.u - eta, e_j eta), via conformality."""
    _, _, ref = _gram_on(u.grid)
    moved = tangent_basis(u.grid, g)
    vals = np.array([symplectic_pairing(u, t) for t in moved]) / g.mu
    return vals - ref


def extract(u: WaveField, guess: GroupElement, tol: float = NEWTON_TOL,
            max_iter: int = NEWTON_MAX_ITER) -> Decomposition:
    """Newton solve for g(u) with a forward-difference Jacobian."""
    p = guess.as_array()
    F = pairing_residual(u, guess)
    it = 0
    while np.max(np.abs(F)) > tol:
        if it >= max_iter:
            raise NoConvergence(
                f"no convergence after {max_iter} iterations, |F|={np.max(np.abs(F)):.3g}")
        J = np.empty((4, 4))
        for i in range(4):
            step = FD_STEP * max(1.0, abs(p[i]))
            q = p.copy()
            q[i] += step
            J[:, i] = (pairing_residual(u, GroupElement.from_array(q)) - F) / step
        try:
            dp = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Jacobian") from exc
        if not np.all(np.isfinite(dp)):
            raise NoConvergence("singular Jacobian")
        # keep mu positive
        lam = 1.0
        while p[3] + lam * dp[3] <= 0.1 * p[3]:
            lam *= 0.5
        p_new = p + lam * dp
        F_new = pairing_residual(u, GroupElement.from_array(p_new))
        it += 1
        if np.max(np.abs(F_new)) >= np.max(np.abs(F)) and np.max(np.abs(F_new)) < 1e3 * tol:
            # roundoff floor reached just above tol
            p, F = p_new, F_new
            break
        p, F = p_new, F_new
    g = GroupElement.from_array(p)
    if np.max(np.abs(F)) > 1e3 * tol:
        raise NoConvergence(f"residual {np.max(np.abs(F)):.3g} above tolerance")
    w = act(inverse(g), u) - soliton_profile(u.grid)
    return Decomposition(g, w, tuple(float(f) for f in F), it)


def orthogonality_residual(w: WaveField) -> np.ndarray:
    """omega(w, e_j eta) evaluated directly on the residual field."""
    return np.array([symplectic_pairing(w, e) for e in tangent_basis(w.grid)])


def project_tangent(u: WaveField) -> LieAlgebraElement:
    """P(u): the X with omega(u - X.eta, Y.eta) = 0 for every Y."""
    gram, basis, _ = _gram_on(u.grid)
    rhs = np.array([symplectic_pairing(u, ek) for ek in basis])
    cond = np.linalg.cond(gram)
    assert cond < 1e8, f"tangent Gram matrix is singular (cond={cond:.3g})"
    return LieAlgebraElement(*np.linalg.solve(gram, rhs))


@lru_cache(maxsize=4)
def _eta_quadrature(n: int = 4096, length: float = 80.0):
    x = -0.5 * length + (length / n) * np.arange(n)
    return x, 1.0 / np.cosh(x) ** 2, length / n


def alpha_beta(V: PotentialSpec, a: float, mu: float) -> AlphaBeta:
    """alpha = 1/2 int V(x/mu + a) eta^2 - 1/2 int V'(x/mu + a)(x/mu) eta^2,
    beta = 1/(2 mu) int V'(x/mu + a) eta^2."""
    x, eta2, dx = _eta_quadrature()
    y = x / mu + a
    v0 = V(y)
    v1 = V(y, 1)
    alpha = 0.5 * dx * np.sum(v0 * eta2) - 0.5 * dx * np.sum(v1 * (x / mu) * eta2)
    beta = dx * np.sum(v1 * eta2) / (2.0 * mu)
    return AlphaBeta(float(alpha), float(beta))


def generator_deficit(g: GroupElement, g_dot, ab: AlphaBeta) -> LieAlgebraElement:
    """X0 = (-a' + v) e1 + (-v' - beta) e2 + (-gamma' + a'v - v^2/2 + 1/2 - alpha) e3 - mu' e4."""
    a_dot, v_dot, gamma_dot, mu_dot = (float(c) for c in g_dot)
    v = g.v
    return LieAlgebraElement(
        -a_dot + v,
        -v_dot - ab.beta,
        -gamma_dot + a_dot * v - 0.5 * v**2 + 0.5 - ab.alpha,
        -mu_dot,
    )


def mass_identity_gap(w: WaveField, mu: float) -> float:
    """||w||^2 - 2(1 - mu)/mu, zero when u has the soliton's mass."""
    return l2_norm_sq(w) - 2.0 * (1.0 - mu) / mu


def mu_from_mass(w_l2_sq: float) -> float:
    """The scale forced by the mass identity for a given ||w||^2."""
    return 2.0 / (2.0 + w_l2_sq)
