"""Isentropic compressible Euler flow with linear velocity damping.

Conservative form, for density rho and momentum m = rho u:

    rho_t + div m = 0
    m_t + div(m (x) m / rho) + grad p(rho) = -m,          p(rho) = rho^gamma.

The working state for analysis is the symmetrized perturbation

    V = ( (c/rho_bar)(rho - rho_bar), u ),    c^2 = p'(rho_bar),

a constant rescale of (rho, u).  In these variables the quasilinear system

    A0(V) V_t + sum_j Aj(V) V_{x_j} + L V = r(V)

has block-diagonal A0(V) that equals the identity at equilibrium, flux
matrices that linearize to c [[0, w^T], [w, 0]], L = diag(0, I), and a
quadratic residual r(V) = (0, -(V1/c) u).  The first component of the
advective remainder is a perfect divergence, so the discrete mass mean is
conserved to rounding once products are dealiased.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grids import Grid, GridField, gradient, two_thirds_mask
from .systems import LinearDissipativeSystem, make_system

__all__ = [
    "AdmissibilityError",
    "EulerModel",
    "damped_euler_model",
    "linearize_damped_euler",
    "euler_normal_form_rhs",
]


class AdmissibilityError(ValueError):
    """State violates |V1| < c/2, the vacuum/shock proxy bound."""


def linearize_damped_euler(
    n: int, gamma: float = 1.4, rho_bar: float = 1.0
) -> LinearDissipativeSystem:
    """Normalized linearization of damped Euler about the constant state.

    Variables (a, u) with a = c (rho - rho_bar)/rho_bar: A0 is the identity,
    the directional flux is c [[0, w^T], [w, 0]] and L = diag(0, I_n).
    """
    if gamma < 1.0:
        raise ValueError("adiabatic exponent must be at least 1")
    if rho_bar <= 0:
        raise ValueError("background density must be positive")
    c = float(np.sqrt(gamma) * rho_bar ** ((gamma - 1.0) / 2.0))
    N = n + 1
    A = np.zeros((n, N, N))
    for j in range(n):
        A[j, 0, j + 1] = c
        A[j, j + 1, 0] = c
    L = np.eye(N)
    L[0, 0] = 0.0
    return make_system(np.eye(N), A, L, name=f"euler{n}d")


@dataclass(frozen=True)
class EulerModel:
    """Damped isentropic Euler in n space dimensions."""

    n: int
    gamma: float
    rho_bar: float
    name: str = "damped-euler"

    def __post_init__(self) -> None:
        if self.gamma < 1.0 or self.rho_bar <= 0:
            raise ValueError("need gamma >= 1 and rho_bar > 0")

    @property
    def N(self) -> int:
        return self.n + 1

    @property
    def c(self) -> float:
        """Equilibrium sound speed sqrt(p'(rho_bar))."""
        return float(np.sqrt(self.gamma) * self.rho_bar ** ((self.gamma - 1) / 2))

    @property
    def equilibrium(self) -> np.ndarray:
        return np.concatenate([[self.rho_bar], np.zeros(self.n)])

    # thermodynamics ----------------------------------------------------

    def pressure(self, rho):
        return rho**self.gamma

    def sound_speed_sq(self, rho):
        return self.gamma * rho ** (self.gamma - 1.0)

    def pressure_potential(self, rho):
        """Convex potential with second derivative p'(rho)/rho."""
        if self.gamma == 1.0:
            return rho * np.log(rho)
        return rho**self.gamma / (self.gamma - 1.0)

    # conservative form -------------------------------------------------

    def flux(self, U: np.ndarray) -> np.ndarray:
        """F^j(U) for U = (rho, m); shape (n, N, ...)."""
        rho, m = U[0], U[1:]
        out = np.zeros((self.n,) + U.shape)
        p = self.pressure(rho)
        for j in range(self.n):
            out[j, 0] = m[j]
            for i in range(self.n):
                out[j, 1 + i] = m[i] * m[j] / rho
            out[j, 1 + j] += p
        return out

    def source(self, U: np.ndarray) -> np.ndarray:
        out = np.zeros_like(U)
        out[1:] = -U[1:]
        return out

    # symmetrized perturbation variables ---------------------------------

    def to_normal_form(self, U: np.ndarray) -> np.ndarray:
        rho, m = U[0], U[1:]
        V = np.empty_like(U)
        V[0] = (self.c / self.rho_bar) * (rho - self.rho_bar)
        V[1:] = m / rho
        return V

    def from_normal_form(self, V: np.ndarray) -> np.ndarray:
        rho = self.density_of(V[0])
        U = np.empty_like(V)
        U[0] = rho
        U[1:] = rho * V[1:]
        return U

    def density_of(self, V1):
        return self.rho_bar * (1.0 + V1 / self.c)

    def admissible(self, V: np.ndarray) -> bool:
        """Perturbations with |V1| < c/2 keep the density uniformly positive."""
        return bool(np.max(np.abs(V[0])) < 0.5 * self.c)

    def coeff_A0(self, V: np.ndarray) -> np.ndarray:
        """Block-diagonal symmetrizer A0(V); identity at V = 0."""
        rho = self.density_of(V[0])
        shape = (self.N, self.N) + V.shape[1:]
        out = np.zeros(shape)
        out[0, 0] = self.sound_speed_sq(rho) * self.rho_bar / (rho * self.c**2)
        for i in range(self.n):
            out[1 + i, 1 + i] = rho / self.rho_bar
        return out

    def coeff_A(self, V: np.ndarray) -> np.ndarray:
        """Directional flux matrices Aj(V); shape (n, N, N, ...)."""
        rho = self.density_of(V[0])
        u = V[1:]
        psq = self.sound_speed_sq(rho)
        alpha = psq * self.rho_bar / (rho * self.c**2)
        off = psq / self.c
        out = np.zeros((self.n, self.N, self.N) + V.shape[1:])
        for j in range(self.n):
            out[j, 0, 0] = alpha * u[j]
            out[j, 0, 1 + j] = off
            out[j, 1 + j, 0] = off
            for i in range(self.n):
                out[j, 1 + i, 1 + i] = (rho / self.rho_bar) * u[j]
        return out

    def residual_r(self, V: np.ndarray) -> np.ndarray:
        """Quadratic source remainder r(V) = (0, -(V1/c) u)."""
        out = np.zeros_like(V)
        out[1:] = -(V[0] / self.c) * V[1:]
        return out

    def entropy(self, f: GridField) -> float:
        """Relative energy integral, the invariant of the undamped flow."""
        V = f.values
        rho = self.density_of(V[0])
        u = V[1:]
        pp = self.pressure_potential
        dp = (self.gamma / (self.gamma - 1.0) * self.rho_bar ** (self.gamma - 1.0)
              if self.gamma > 1.0 else np.log(self.rho_bar) + 1.0)
        density = (pp(rho) - pp(self.rho_bar) - dp * (rho - self.rho_bar)
                   + 0.5 * rho * np.sum(u * u, axis=0))
        return float(np.sum(density) * f.grid.cell_volume)

    @cached_property
    def linear_system(self) -> LinearDissipativeSystem:
        return linearize_damped_euler(self.n, self.gamma, self.rho_bar)


def damped_euler_model(n: int, gamma: float = 1.4, rho_bar: float = 1.0) -> EulerModel:
    if n not in (1, 2, 3):
        raise ValueError("n must be 1, 2 or 3")
    return EulerModel(n, float(gamma), float(rho_bar))


def euler_normal_form_rhs(
    model: EulerModel, w: GridField, dealias: bool = True
) -> GridField:
    """Residual R = R1 + R2 of the constant-coefficient reduction.

    R1 collects the advective mismatch
    -sum_j [ (A0(V))^-1 Aj(V) - Aj(0) ] d_j V and R2 the source mismatch
    -[(A0(V))^-1 - I] L V + (A0(V))^-1 r(V).  For this model R2 cancels
    identically (the damping is exactly linear in u), but it is evaluated by
    the generic formula so the decomposition stays visible.  With dealiasing
    on, inputs are truncated to the alias-free band, making the zero mode of
    the mass row vanish to rounding.
    """
    if w.ncomp != model.N:
        raise ValueError(f"field has {w.ncomp} components, model needs {model.N}")
    if dealias:
        mask = two_thirds_mask(w.grid)
        w = GridField(w.grid, spectrum=w.spectrum * mask[np.newaxis])
    V = w.values
    if not model.admissible(V):
        raise AdmissibilityError("state left the admissible set (|V1| >= c/2)")
    grads = gradient(w)  # grads[j].values has shape (N, ...)
    rho = model.density_of(V[0])
    u = V[1:]
    psq = model.sound_speed_sq(rho)
    c = model.c

    R = np.zeros(V.shape)
    # velocity rows see -(p'(rho) rho_bar/(rho c) - c) grad V1 - (u . grad) u
    coeff = psq * model.rho_bar / (rho * c) - c
    for j in range(model.n):
        dV = grads[j].values
        # mass row: -(u . grad V1 + V1 div u), a perfect divergence
        R[0] -= u[j] * dV[0] + V[0] * dV[1 + j]
        R[1 + j] -= coeff * dV[0]
        for i in range(model.n):
            R[1 + i] -= u[j] * dV[1 + i]

    # source mismatch; zero for this model but kept explicit
    inv_a0_u = model.rho_bar / rho
    R[1:] += -(inv_a0_u - 1.0) * V[1:] + inv_a0_u * (-(V[0] / c) * V[1:])
    return GridField(w.grid, values=R)
