"""Per-frequency analysis of constant-coefficient dissipative systems.

A plane-wave ansatz reduces the PDE to one ODE per frequency xi = r omega,

    dw/dt = Phi(i xi) w,
    Phi(i xi) = -(A0)^-1 ( i r A(omega) + L + r^2 B(omega) ),

and everything here is matrix analysis of that family: its spectrum, the
kernel coupling certificate (no undamped traveling mode), a numerically
synthesized compensating matrix that turns partial damping into a strict
per-frequency energy decay, and the matrix semigroup exp(t Phi).

All routines are deterministic: the only randomness is an internally seeded
generator used for optimizer restarts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .systems import EIG_TOL, LinearDissipativeSystem, omega_samples

__all__ = [
    "FourierSymbol",
    "SpectralError",
    "symbol",
    "symbol_stack",
    "pencil_eigenvalues",
    "semigroup",
    "semigroup_stack",
    "KernelWitness",
    "KernelConditionReport",
    "check_sk_kernel",
    "SpectralGapReport",
    "spectral_gap_fit",
    "CompensatingMatrix",
    "CompensatorSynthesisError",
    "build_compensating_matrix",
    "CompensatorFamily",
    "build_compensator_family",
    "lyapunov_energy",
    "lyapunov_equivalence",
]


class SpectralError(RuntimeError):
    """Numerical failure in a per-frequency computation."""

    def __init__(self, message: str, xi=None):
        super().__init__(message)
        self.xi = xi


def _sort_eigenvalues(lams: np.ndarray) -> np.ndarray:
    """Descending real part, ties by ascending imaginary part."""
    order = np.lexsort((lams.imag, -lams.real))
    return lams[order]


def _split_direction(xi: np.ndarray) -> tuple[float, np.ndarray]:
    xi = np.asarray(xi, dtype=np.float64)
    r = float(np.linalg.norm(xi))
    omega = xi / r if r > 0 else np.zeros_like(xi)
    return r, omega


def _symbol_matrix(sys: LinearDissipativeSystem, xi: np.ndarray) -> np.ndarray:
    r, omega = _split_direction(xi)
    M = sys.L.astype(np.complex128)
    if r > 0:
        M = M + 1j * r * sys.A_of(omega)
        if sys.B is not None:
            M = M + r * r * sys.B_of(omega)
    return -np.linalg.solve(sys.A0, M)


@dataclass(frozen=True)
class FourierSymbol:
    """One frequency's reduction matrix and its sorted spectrum."""

    xi: np.ndarray
    Phi: np.ndarray
    eigenvalues: np.ndarray

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.xi))

    @property
    def worst_real_part(self) -> float:
        return float(self.eigenvalues[0].real)


def symbol(sys: LinearDissipativeSystem, xi) -> FourierSymbol:
    """Assemble Phi(i xi) and its eigenvalues for one frequency.

    xi = 0 is allowed and picks out the relaxation spectrum of -(A0)^-1 L.
    """
    xi = np.array(xi, dtype=np.float64)
    if xi.shape != (sys.n,):
        raise ValueError(f"xi must be a vector of length {sys.n}")
    Phi = _symbol_matrix(sys, xi)
    try:
        lams = np.linalg.eigvals(Phi)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver failed at xi={xi!r}", xi=xi) from exc
    for a in (xi, Phi):
        a.setflags(write=False)
    lams = _sort_eigenvalues(lams)
    lams.setflags(write=False)
    return FourierSymbol(xi=xi, Phi=Phi, eigenvalues=lams)


def symbol_stack(
    sys: LinearDissipativeSystem, omega: np.ndarray, radii: np.ndarray
) -> np.ndarray:
    """Phi(i r omega) for many radii at once, shaped (len(radii), N, N)."""
    omega = np.asarray(omega, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    A_w = sys.A_of(omega).astype(np.complex128)
    M = (
        sys.L[np.newaxis].astype(np.complex128)
        + 1j * radii[:, np.newaxis, np.newaxis] * A_w
    )
    if sys.B is not None:
        M = M + (radii**2)[:, np.newaxis, np.newaxis] * sys.B_of(omega)
    return -np.linalg.solve(sys.A0[np.newaxis], M)


def pencil_eigenvalues(sys: LinearDissipativeSystem, xi) -> np.ndarray:
    """Spectrum computed from the generalized pencil, as a cross-check.

    Solves lambda A0 phi = -(i|xi| A(omega) + L + |xi|^2 B(omega)) phi with a
    QZ-based generalized eigensolver, an independent code path from
    :func:`symbol`.
    """
    xi = np.asarray(xi, dtype=np.float64)
    r, omega = _split_direction(xi)
    M = sys.L.astype(np.complex128)
    if r > 0:
        M = M + 1j * r * sys.A_of(omega)
        if sys.B is not None:
            M = M + r * r * sys.B_of(omega)
    lams = scipy.linalg.eig(-M, sys.A0.astype(np.complex128), right=False)
    return _sort_eigenvalues(lams)


def semigroup(sys: LinearDissipativeSystem, xi, t: float) -> np.ndarray:
    """exp(t Phi(i xi)) by scaling and squaring."""
    if t < 0:
        raise ValueError("the semigroup is only defined for t >= 0")
    E = scipy.linalg.expm(float(t) * _symbol_matrix(sys, xi))
    if not np.all(np.isfinite(E)):
        raise SpectralError(f"matrix exponential overflowed at xi={xi!r}", xi=xi)
    return E


def semigroup_stack(
    sys: LinearDissipativeSystem, omega: np.ndarray, radii: np.ndarray, t: float
) -> np.ndarray:
    """exp(t Phi(i r omega)) for a whole radial batch."""
    if t < 0:
        raise ValueError("the semigroup is only defined for t >= 0")
    E = scipy.linalg.expm(float(t) * symbol_stack(sys, omega, radii))
    if not np.all(np.isfinite(E)):
        raise SpectralError("matrix exponential overflowed in a radial batch")
    return E


# -- kernel coupling certificate ------------------------------------------


@dataclass(frozen=True)
class KernelWitness:
    """An undamped traveling mode: lambda A0 phi + A(omega) phi = 0 with
    phi in the kernel of the dissipation in direction omega."""

    omega: np.ndarray
    eigenvalue: float
    vector: np.ndarray


@dataclass(frozen=True)
class KernelConditionReport:
    passed: bool
    witnesses: tuple[KernelWitness, ...]
    directions_checked: int

    def summary(self) -> str:
        if self.passed:
            return (
                f"kernel coupling condition holds on {self.directions_checked} "
                "sampled directions"
            )
        w = self.witnesses[0]
        return (
            f"kernel coupling condition FAILS: lambda={w.eigenvalue:.6g}, "
            f"omega={np.array2string(w.omega, precision=3)}"
        )


def _dissipation_kernel_projector(
    sys: LinearDissipativeSystem, omega: np.ndarray, tol: float
) -> np.ndarray:
    """Orthogonal projector onto ker(L + B(omega))."""
    D = sys.dissipation_of(omega)
    vals, vecs = np.linalg.eigh(D)
    scale = max(1.0, float(vals[-1]))
    Q = vecs[:, vals < tol * scale]
    return Q @ Q.T


def check_sk_kernel(
    sys: LinearDissipativeSystem,
    omegas: Sequence[np.ndarray] | None = None,
    tol: float = EIG_TOL,
) -> KernelConditionReport:
    """Certify that no traveling wave escapes the damping.

    For each sampled direction the symmetric pencil A(omega) phi =
    mu A0 phi is diagonalized (all mu real since A0 is positive definite);
    the condition fails exactly when some eigenspace meets the kernel of the
    directional dissipation L + B(omega) nontrivially.  The intersection
    dimension of an eigenspace with basis E is dim E - rank((I - P) E),
    where P projects onto that kernel.
    """
    if omegas is None:
        omegas = omega_samples(sys.n)
    witnesses: list[KernelWitness] = []
    count = 0
    for omega in omegas:
        omega = np.asarray(omega, dtype=np.float64)
        count += 1
        mus, vecs = scipy.linalg.eigh(sys.A_of(omega), sys.A0)
        P = _dissipation_kernel_projector(sys, omega, tol)
        if not P.any():
            continue  # dissipation has trivial kernel: vacuously fine
        scale = max(1.0, float(np.abs(mus).max()))
        # group near-equal pencil eigenvalues into clusters
        splits = np.nonzero(np.diff(mus) > tol * scale)[0] + 1
        for block in np.split(np.arange(sys.N), splits):
            E = vecs[:, block]
            G = (np.eye(sys.N) - P) @ E
            sv = np.linalg.svd(G, compute_uv=False)
            defect = int(np.sum(sv < tol * max(1.0, sv[0] if sv.size else 0.0)))
            if defect == 0:
                continue
            # recover one witness direction inside the intersection
            _, _, vt = np.linalg.svd(G)
            phi = E @ vt[-1]
            phi = phi / np.linalg.norm(phi)
            witnesses.append(
                KernelWitness(
                    omega=omega,
                    eigenvalue=float(-mus[block[0]]),
                    vector=phi,
                )
            )
    return KernelConditionReport(
        passed=not witnesses,
        witnesses=tuple(witnesses),
        directions_checked=count,
    )


# -- spectral gap over a frequency grid ------------------------------------


@dataclass(frozen=True)
class SpectralGapReport:
    """Grid certificate for max Re lambda(i xi) <= -c |xi|^2/(1+|xi|^2)."""

    radii: np.ndarray
    omegas: np.ndarray
    worst_real_parts: np.ndarray  # (n_radii, n_omegas)
    ratios: np.ndarray  # (-worst) * (1+r^2)/r^2
    c_star: float
    passed: bool

    def describe(self) -> str:
        return (
            f"radii {self.radii[0]:.3g}..{self.radii[-1]:.3g} "
            f"({len(self.radii)} points, log-spaced) x "
            f"{self.omegas.shape[0]} directions; "
            f"c* = {self.c_star:.6g} ({'pass' if self.passed else 'FAIL'})"
        )


def spectral_gap_fit(
    sys: LinearDissipativeSystem,
    radii: np.ndarray | None = None,
    omegas: np.ndarray | None = None,
) -> SpectralGapReport:
    """Measure the frequency-wise decay rate and fit its sharp constant.

    The constant is the infimum over the grid of
    (-max_k Re lambda_k(i xi)) (1+|xi|^2)/|xi|^2, so by construction it is a
    lower bound for every sampled ratio; the certificate passes when it is
    positive.
    """
    if radii is None:
        radii = np.logspace(-2.0, 2.0, 81)
    radii = np.array(radii, dtype=np.float64)
    if radii.min() <= 0:
        raise ValueError("radii must be positive (xi = 0 is excluded)")
    if omegas is None:
        omegas = omega_samples(sys.n)
    omegas = np.array(omegas, dtype=np.float64)

    worst = np.empty((radii.size, omegas.shape[0]))
    for j, omega in enumerate(omegas):
        lams = np.linalg.eigvals(symbol_stack(sys, omega, radii))
        worst[:, j] = lams.real.max(axis=1)
    ratios = (-worst) * ((1.0 + radii**2) / radii**2)[:, np.newaxis]
    c_star = float(ratios.min())
    for a in (radii, omegas, worst, ratios):
        a.setflags(write=False)
    return SpectralGapReport(
        radii=radii,
        omegas=omegas,
        worst_real_parts=worst,
        ratios=ratios,
        c_star=c_star,
        passed=c_star > 0.0,
    )


# -- compensating matrix synthesis -----------------------------------------


class CompensatorSynthesisError(RuntimeError):
    def __init__(self, message: str, best_value: float):
        super().__init__(f"{message} (best value {best_value:.6g})")
        self.best_value = best_value


@dataclass(frozen=True)
class CompensatingMatrix:
    """Skew correction K(omega) making the damped quadratic form strict.

    K A0 is exactly skew-symmetric, achieved_min_eig is the smallest
    eigenvalue of [K A(omega)]' + L, and kappa is an energy weight proven
    admissible (kappa <= kappa_max) for the weighted per-frequency energy;
    c_lo, c_hi are the resulting norm-equivalence constants at that kappa.
    """

    system: LinearDissipativeSystem
    omega: np.ndarray
    K: np.ndarray
    achieved_min_eig: float
    kappa: float
    kappa_max: float
    c_lo: float
    c_hi: float


def _skew(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M - M.T)


def _min_eig_form(t: float, Msym: np.ndarray, L: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(t * Msym + L)[0])


def _ascend(
    S: np.ndarray,
    Bmat: np.ndarray,
    L: np.ndarray,
    max_iter: int,
    step_rule: Callable[[int], float],
) -> tuple[np.ndarray, float]:
    """Projected subgradient ascent of lambda_min([S B]' + L) on the unit ball."""
    best_S, best_f = S, -np.inf
    for k in range(1, max_iter + 1):
        W = 0.5 * (S @ Bmat + (S @ Bmat).T) + L
        vals, vecs = np.linalg.eigh(W)
        if vals[0] > best_f:
            best_f, best_S = float(vals[0]), S
        v = vecs[:, 0]
        G = _skew(np.outer(v, Bmat @ v))
        g = np.linalg.norm(G)
        if g < 1e-15:
            break
        S = S + step_rule(k) * (G / g)
        nrm = np.linalg.norm(S)
        if nrm > 1.0:
            S = S / nrm
    return best_S, best_f


def build_compensating_matrix(
    sys: LinearDissipativeSystem,
    omega,
    max_iter: int = 300,
    step_rule: Callable[[int], float] | None = None,
    restarts: int = 200,
) -> CompensatingMatrix:
    """Synthesize K(omega) with [K A(omega)]' + L positive definite.

    Stage one maximizes f(S) = lambda_min([S (A0)^-1 A(omega)]' + L) over
    skew S in the Frobenius unit ball by projected subgradient ascent
    (non-monotone; the best iterate is kept) with deterministic random
    restarts.  Stage two rescales the winner: g(t) = lambda_min(t [S B]' + L)
    is concave in t, so a golden-section search finds the best amplitude.
    K = t S (A0)^-1, which makes K A0 = t S skew to rounding.

    The odd extension K(-omega) = -K(omega) holds exactly: synthesis always
    runs at a canonical sign of omega and flips the result.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (sys.n,) or abs(np.linalg.norm(omega) - 1.0) > 1e-10:
        raise ValueError("omega must be a unit vector of length n")
    if step_rule is None:
        step_rule = lambda k: 1.0 / np.sqrt(k)

    # canonical sign: first nonzero component positive
    flip = False
    for x in omega:
        if abs(x) > 1e-12:
            flip = x < 0
            break
    omega_c = -omega if flip else omega

    Bmat = np.linalg.solve(sys.A0, sys.A_of(omega_c))
    L = sys.L
    if np.linalg.norm(Bmat) < 1e-14:
        raise CompensatorSynthesisError(
            "flux vanishes in this direction; no skew correction can act",
            float(np.linalg.eigvalsh(L)[0]),
        )
    rng = np.random.default_rng(1810)

    best_S, best_f = None, -np.inf
    stale = 0
    for trial in range(restarts):
        if trial == 0:
            # one subgradient step from S = 0, where the active form is L
            v = np.linalg.eigh(L)[1][:, 0]
            S0 = _skew(np.outer(v, Bmat @ v))
            if np.linalg.norm(S0) < 1e-14:
                S0 = _skew(rng.standard_normal((sys.N, sys.N)))
        else:
            S0 = _skew(rng.standard_normal((sys.N, sys.N)))
        nrm = np.linalg.norm(S0)
        if nrm < 1e-14:
            continue
        S, f = _ascend(S0 / nrm, Bmat, L, max_iter, step_rule)
        if f > best_f + 1e-12:
            best_S, best_f = S, f
            stale = 0
        else:
            stale += 1
        if best_f > 0 and stale >= 8:
            break
    if best_S is None:
        raise CompensatorSynthesisError("no usable skew direction found", -np.inf)

    Msym = 0.5 * (best_S @ Bmat + (best_S @ Bmat).T)
    m_norm = float(np.linalg.norm(Msym, 2))
    if m_norm < 1e-14:
        raise CompensatorSynthesisError("ascent produced a null form", best_f)

    # concave 1D amplitude search on [0, t_cap]
    t_cap = 10.0 * (1.0 + float(np.linalg.norm(L, 2))) / m_norm
    lo, hi = 0.0, t_cap
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a = hi - inv_phi * (hi - lo)
    b = lo + inv_phi * (hi - lo)
    fa, fb = _min_eig_form(a, Msym, L), _min_eig_form(b, Msym, L)
    for _ in range(120):
        if fa < fb:
            lo, a, fa = a, b, fb
            b = lo + inv_phi * (hi - lo)
            fb = _min_eig_form(b, Msym, L)
        else:
            hi, b, fb = b, a, fa
            a = hi - inv_phi * (hi - lo)
            fa = _min_eig_form(a, Msym, L)
    t_star = 0.5 * (lo + hi)
    achieved = _min_eig_form(t_star, Msym, L)
    if achieved <= 0 or t_star <= 0:
        raise CompensatorSynthesisError(
            "could not make the damped form positive definite", achieved
        )

    K = t_star * np.linalg.solve(sys.A0.T, best_S.T).T  # t* S (A0)^-1
    if flip:
        K = -K
    kappa_max, kappa, c_lo, c_hi = _admissible_weight(sys, K, achieved)
    K.setflags(write=False)
    omega = omega.copy()
    omega.setflags(write=False)
    return CompensatingMatrix(
        system=sys,
        omega=omega,
        K=K,
        achieved_min_eig=achieved,
        kappa=kappa,
        kappa_max=kappa_max,
        c_lo=c_lo,
        c_hi=c_hi,
    )


def _admissible_weight(
    sys: LinearDissipativeSystem, K: np.ndarray, achieved: float
) -> tuple[float, float, float, float]:
    """Largest proven-safe energy weight and the working value (half of it).

    Three sufficient conditions are intersected: kappa <= lam_min(A0)/|K A0|
    keeps the weighted energy equivalent to |w|^2; kappa <= 1 lets the
    damped form absorb the convex split; kappa <= 2 m / (|K|^2 |L|) makes the
    commutator remainder of the cross term small against the leftover
    dissipation.  Written as 0.5 lam_min(A0) m / (|K A0| c_bound) with
    c_bound the max of the three matching denominators.
    """
    lam = float(np.linalg.eigvalsh(sys.A0)[0])
    nKA0 = float(np.linalg.norm(K @ sys.A0, 2))
    nK = float(np.linalg.norm(K, 2))
    nL = float(np.linalg.norm(sys.L, 2))
    c_bound = max(
        0.5 * achieved,
        0.5 * lam * achieved / nKA0,
        0.25 * lam * nK * nK * nL / nKA0,
    )
    kappa_max = 0.5 * lam * achieved / (nKA0 * c_bound)
    kappa = 0.5 * kappa_max
    c_lo, c_hi = lyapunov_equivalence_raw(sys, K, kappa)
    return kappa_max, kappa, c_lo, c_hi


def lyapunov_equivalence_raw(
    sys: LinearDissipativeSystem, K: np.ndarray, kappa: float
) -> tuple[float, float]:
    a0_eigs = np.linalg.eigvalsh(sys.A0)
    half_corr = 0.25 * kappa * float(np.linalg.norm(K @ sys.A0, 2))
    return (0.5 * float(a0_eigs[0]) - half_corr, 0.5 * float(a0_eigs[-1]) + half_corr)


def lyapunov_equivalence(comp: CompensatingMatrix, kappa: float | None = None):
    """Norm-equivalence constants c_lo, c_hi of the weighted energy."""
    if kappa is None:
        kappa = comp.kappa
    return lyapunov_equivalence_raw(comp.system, comp.K, kappa)


@dataclass(frozen=True)
class CompensatorFamily:
    """Compensators over a direction grid with one shared energy weight."""

    system: LinearDissipativeSystem
    members: tuple[CompensatingMatrix, ...]
    kappa: float
    min_achieved: float


def build_compensator_family(
    sys: LinearDissipativeSystem,
    omegas: Sequence[np.ndarray] | None = None,
    **kwargs,
) -> CompensatorFamily:
    """Synthesize K over the standard direction grid; kappa = grid minimum."""
    if omegas is None:
        omegas = omega_samples(sys.n)
    members = tuple(build_compensating_matrix(sys, w, **kwargs) for w in omegas)
    return CompensatorFamily(
        system=sys,
        members=members,
        kappa=min(m.kappa for m in members),
        min_achieved=min(m.achieved_min_eig for m in members),
    )


def lyapunov_energy(
    xi, w_hat: np.ndarray, comp: CompensatingMatrix, kappa: float | None = None
) -> float:
    """Weighted per-frequency energy

        E[w] = 1/2 (A0 w, w) + (kappa/2) |xi|/(1+|xi|^2) Im (K A0 w, w).

    Requires xi parallel to the compensator's direction (the odd extension
    handles the antiparallel case) and kappa within the proven range, which
    guarantees c_lo |w|^2 <= E <= c_hi |w|^2.
    """
    if kappa is None:
        kappa = comp.kappa
    if not 0.0 <= kappa <= comp.kappa_max:
        raise ValueError(
            f"kappa={kappa:.6g} outside the admissible range "
            f"[0, {comp.kappa_max:.6g}]"
        )
    xi = np.asarray(xi, dtype=np.float64)
    w_hat = np.asarray(w_hat, dtype=np.complex128)
    sys = comp.system
    E = 0.5 * float(np.real(np.vdot(w_hat, sys.A0 @ w_hat)))
    r = float(np.linalg.norm(xi))
    if r == 0 or kappa == 0.0:
        return E
    sign = float(np.dot(xi / r, comp.omega))
    if abs(abs(sign) - 1.0) > 1e-8:
        raise ValueError("xi is not parallel to the compensator direction")
    cross = float(np.imag(np.vdot(w_hat, (comp.K @ sys.A0) @ w_hat)))
    return E + 0.5 * kappa * (r / (1.0 + r * r)) * np.sign(sign) * cross
