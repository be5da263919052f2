"""Frequency-wise certificates: kernel condition, gap, compensators."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from decaylab.euler import linearize_damped_euler
from decaylab.systems import make_system
from decaylab.spectral import (
    CompensatorSynthesisError,
    build_compensating_matrix,
    build_compensator_family,
    check_sk_kernel,
    lyapunov_energy,
    lyapunov_equivalence,
    pencil_eigenvalues,
    semigroup,
    spectral_gap_fit,
    symbol,
)


def euler_unit_speed(n=1):
    """Damped acoustics with sound speed one."""
    N = n + 1
    A = np.zeros((n, N, N))
    for j in range(n):
        A[j, 0, j + 1] = A[j, j + 1, 0] = 1.0
    L = np.eye(N)
    L[0, 0] = 0.0
    return make_system(np.eye(N), A, L, name=f"acoustic{n}d")


def decoupled():
    return make_system(
        np.eye(2), np.zeros((1, 2, 2)), np.diag([0.0, 1.0]), name="decoupled"
    )


SYS1 = euler_unit_speed(1)


def test_symbol_eigenvalues_low_frequency():
    # lambda^2 + lambda + xi^2 = 0 at |xi| = 0.1
    lams = np.sort_complex(symbol(SYS1, [0.1]).eigenvalues)
    root = np.sqrt(0.96)
    assert lams[0] == pytest.approx(-(1 + root) / 2, abs=1e-12)
    assert lams[1] == pytest.approx(-(1 - root) / 2, abs=1e-12)
    assert lams[1].real == pytest.approx(-0.010102051443, abs=1e-12)
    assert lams[0].real == pytest.approx(-0.989897948557, abs=1e-12)


def test_symbol_at_zero_frequency_is_minus_l():
    lams = np.sort_complex(symbol(SYS1, [0.0]).eigenvalues)
    assert np.allclose(lams, [-1.0, 0.0], atol=1e-14)


def test_symbol_oscillatory_branch_has_half_rate():
    # above |xi| = 1/2 the discriminant flips and both branches share Re
    lams = symbol(SYS1, [3.0]).eigenvalues
    assert np.allclose(lams.real, -0.5, atol=1e-12)
    assert np.allclose(np.sort(lams.imag), np.array([-1.0, 1.0]) * np.sqrt(35) / 2)


@pytest.mark.parametrize("r", [0.0, 0.3, 1.0, 40.0])
def test_pencil_solver_agrees_with_direct_eigenvalues(r):
    xi = np.array([r])
    qz = pencil_eigenvalues(SYS1, xi)
    direct = symbol(SYS1, xi).eigenvalues
    # conjugate pairs come back in solver-dependent order
    qz, direct = qz[np.argsort(qz.imag)], direct[np.argsort(direct.imag)]
    assert np.allclose(qz, direct, atol=1e-12)


@pytest.mark.parametrize("n", [1, 3])
def test_kernel_condition_holds_for_damped_acoustics(n):
    rep = check_sk_kernel(euler_unit_speed(n))
    assert rep.passed
    assert not rep.witnesses


def test_kernel_condition_fails_with_explicit_witness():
    rep = check_sk_kernel(decoupled())
    assert not rep.passed
    w = rep.witnesses[0]
    assert w.eigenvalue == pytest.approx(0.0, abs=1e-14)
    v = np.abs(w.vector)
    assert np.allclose(v / v.max(), [1.0, 0.0], atol=1e-12)


def test_gap_constant_for_unit_speed_acoustics():
    gap = spectral_gap_fit(SYS1, radii=np.logspace(-2, 2, 81))
    # the oscillatory branch pins the infimum at the largest radius
    assert gap.c_star == pytest.approx(0.50005, rel=1e-9)
    assert 0.45 <= gap.c_star <= 0.51


def test_gap_report_shapes():
    radii = np.logspace(-1, 1, 7)
    gap = spectral_gap_fit(SYS1, radii=radii)
    n_omegas = gap.worst_real_parts.shape[1]
    assert gap.worst_real_parts.shape == (7, n_omegas)
    assert gap.ratios.shape == (7, n_omegas)
    assert np.all(gap.ratios >= gap.c_star - 1e-12)


def test_gap_vanishes_without_kernel_condition():
    gap = spectral_gap_fit(decoupled())
    assert gap.c_star == pytest.approx(0.0, abs=1e-12)


class TestCompensator:
    def test_reaches_analytic_optimum(self):
        comp = build_compensating_matrix(SYS1, np.array([1.0]))
        assert comp.achieved_min_eig >= 0.4
        assert comp.achieved_min_eig == pytest.approx(0.5, abs=1e-6)
        assert np.allclose(comp.K, [[0.0, 0.5], [-0.5, 0.0]], atol=1e-6)

    def test_skew_product_is_exact(self):
        comp = build_compensating_matrix(SYS1, np.array([1.0]))
        M = comp.K @ SYS1.A0
        assert np.abs(M + M.T).max() == 0.0

    def test_odd_in_direction(self):
        plus = build_compensating_matrix(SYS1, np.array([1.0]))
        minus = build_compensating_matrix(SYS1, np.array([-1.0]))
        assert np.array_equal(plus.K, -minus.K)

    def test_energy_weight_within_proven_range(self):
        comp = build_compensating_matrix(SYS1, np.array([1.0]))
        assert 0.0 < comp.kappa <= comp.kappa_max
        assert comp.kappa == pytest.approx(0.5, rel=1e-6)
        assert comp.c_lo == pytest.approx(0.4375, rel=1e-6)
        assert comp.c_hi == pytest.approx(0.5625, rel=1e-6)

    def test_equivalence_constants_match_fields(self):
        comp = build_compensating_matrix(SYS1, np.array([1.0]))
        lo, hi = lyapunov_equivalence(comp)
        assert (lo, hi) == (comp.c_lo, comp.c_hi)

    def test_synthesis_fails_on_decoupled_system(self):
        with pytest.raises(CompensatorSynthesisError):
            build_compensating_matrix(decoupled(), np.array([1.0]))


def test_family_quotes_weakest_member():
    fam = build_compensator_family(SYS1)
    assert fam.kappa == pytest.approx(min(m.kappa for m in fam.members))
    assert fam.min_achieved == pytest.approx(
        min(m.achieved_min_eig for m in fam.members)
    )
    assert fam.min_achieved >= 0.4


class TestLyapunovEnergy:
    comp = build_compensating_matrix(SYS1, np.array([1.0]))

    def test_norm_sandwich(self, rng):
        for _ in range(50):
            xi = np.array([10.0 ** rng.uniform(-2, 2)])
            w = rng.normal(size=2) + 1j * rng.normal(size=2)
            E = lyapunov_energy(xi, w, self.comp)
            n2 = np.vdot(w, w).real
            assert self.comp.c_lo * n2 - 1e-12 <= E <= self.comp.c_hi * n2 + 1e-12

    def test_rejects_inadmissible_weight(self):
        with pytest.raises(ValueError):
            lyapunov_energy(
                np.array([1.0]), np.array([1.0, 0.0]),
                self.comp, kappa=2 * self.comp.kappa_max,
            )

    def test_rejects_misaligned_frequency(self):
        comp3 = build_compensating_matrix(
            euler_unit_speed(3), np.array([1.0, 0.0, 0.0])
        )
        with pytest.raises(ValueError):
            lyapunov_energy(
                np.array([0.0, 1.0, 0.0]), np.ones(4, dtype=complex), comp3
            )

    def test_decays_along_trajectories(self, rng):
        """Centered differences obey the certified differential inequality."""
        minus = build_compensating_matrix(SYS1, np.array([-1.0]))
        dt = 1e-5
        for _ in range(40):
            r = 10.0 ** rng.uniform(-2, 2)
            sign = rng.choice([-1.0, 1.0])
            xi = np.array([r * sign])
            comp = self.comp if sign > 0 else minus
            w0 = rng.normal(size=2) + 1j * rng.normal(size=2)
            rho = r * r / (1.0 + r * r)
            dE = (
                lyapunov_energy(xi, semigroup(SYS1, xi, dt) @ w0, comp)
                - lyapunov_energy(xi, w0, comp)
            ) / dt
            wm = semigroup(SYS1, xi, 0.5 * dt) @ w0
            n2 = np.vdot(wm, wm).real
            slack = dE + 0.5 * comp.achieved_min_eig * comp.kappa * rho * n2
            assert slack <= 1e-6 * n2


def test_semigroup_identity_at_zero_time():
    assert np.allclose(semigroup(SYS1, [0.3], 0.0), np.eye(2), atol=1e-15)


def test_semigroup_composition():
    xi = [0.7]
    one = semigroup(SYS1, xi, 0.9) @ semigroup(SYS1, xi, 1.3)
    two = semigroup(SYS1, xi, 2.2)
    assert np.allclose(one, two, atol=1e-12)


@given(st.floats(min_value=0.05, max_value=20.0), st.floats(min_value=0.0, max_value=8.0))
def test_semigroup_unitary_without_dissipation(r, t):
    """With the damping removed the A0 energy of every mode is constant."""
    rng = np.random.default_rng(7)
    M = rng.normal(size=(2, 2))
    A0 = M @ M.T + 2.0 * np.eye(2)
    A = (M + M.T)[None]
    free = make_system(A0, A, np.zeros((2, 2)), name="free")
    w = rng.normal(size=2) + 1j * rng.normal(size=2)
    wt = semigroup(free, [r], t) @ w
    before = np.vdot(w, A0 @ w).real
    after = np.vdot(wt, A0 @ wt).real
    assert after == pytest.approx(before, rel=1e-8)
