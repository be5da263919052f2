"""Radial and spherical quadrature rules against independent integrals."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma, gammainc

from decaylab.quadrature import (
    RADIAL_WINDOW,
    log_radial_rule,
    random_directions,
    sphere_design_26,
    sphere_rule,
)


def test_log_rule_exact_for_inverse_r():
    # 1/r is constant after the log substitution, so any order nails it
    r, w = log_radial_rule(4, (0.5, 8.0))
    assert np.sum(w / r) == pytest.approx(np.log(16.0), rel=1e-14)


def test_log_rule_matches_adaptive_quadrature():
    r, w = log_radial_rule(96, (1e-3, 10.0))
    got = np.sum(w * r**2 * np.exp(-2.0 * r * r))
    ref, err = quad(lambda s: s**2 * np.exp(-2.0 * s * s), 1e-3, 10.0)
    assert got == pytest.approx(ref, rel=1e-12)


def test_log_rule_gaussian_moment_vs_incomplete_gamma():
    """Window integral of r^{2s-1} e^{-2r^2} has a closed form.

    Substituting u = 2 r^2 turns it into a lower incomplete gamma
    difference; this independent value anchors the decay-rate oracles.
    """
    s = 0.5
    r0, r1 = RADIAL_WINDOW
    r, w = log_radial_rule(256, RADIAL_WINDOW)
    got = np.sum(w * r ** (2.0 * s - 1.0) * np.exp(-2.0 * r * r))
    expect = (
        2.0 ** (-s - 1.0)
        * gamma(s)
        * (gammainc(s, 2.0 * r1 * r1) - gammainc(s, 2.0 * r0 * r0))
    )
    assert got == pytest.approx(expect, rel=1e-12)


def test_log_rule_rejects_bad_window():
    with pytest.raises(ValueError):
        log_radial_rule(8, (0.0, 1.0))
    with pytest.raises(ValueError):
        log_radial_rule(8, (2.0, 1.0))


def test_design_weights_sum_to_sphere_area():
    pts, w = sphere_design_26()
    assert pts.shape == (26, 3)
    assert np.sum(w) == pytest.approx(4.0 * np.pi, rel=1e-14)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-15)


# exact sphere averages of even monomials through degree seven
MONOMIALS = [
    ((2, 0, 0), 1.0 / 3.0),
    ((4, 0, 0), 1.0 / 5.0),
    ((2, 2, 0), 1.0 / 15.0),
    ((6, 0, 0), 1.0 / 7.0),
    ((4, 2, 0), 1.0 / 35.0),
    ((2, 2, 2), 1.0 / 105.0),
    ((1, 0, 0), 0.0),
    ((3, 2, 1), 0.0),
    ((5, 1, 1), 0.0),
]


@pytest.mark.parametrize("powers,expected", MONOMIALS)
def test_design_monomial_averages(powers, expected):
    pts, w = sphere_design_26()
    vals = np.prod(pts ** np.array(powers), axis=1)
    avg = np.sum(w * vals) / (4.0 * np.pi)
    assert avg == pytest.approx(expected, abs=1e-14)


def test_design_agrees_with_monte_carlo_on_smooth_function(rng):
    pts, w = sphere_design_26()
    f = lambda p: np.exp(0.3 * p[:, 0] - 0.2 * p[:, 1] * p[:, 2])
    design = np.sum(w * f(pts)) / (4.0 * np.pi)
    sample = random_directions(3, 200_000, rng)
    mc = f(sample).mean()
    assert design == pytest.approx(mc, abs=5e-3)


@pytest.mark.parametrize("n,area", [(1, 2.0), (2, 2.0 * np.pi), (3, 4.0 * np.pi)])
def test_sphere_rule_total_weight(n, area):
    pts, w = sphere_rule(n)
    assert np.sum(w) == pytest.approx(area, rel=1e-13)
    assert np.allclose(np.linalg.norm(np.atleast_2d(pts), axis=1), 1.0)


def test_sphere_rule_rejects_high_dimension():
    with pytest.raises(ValueError):
        sphere_rule(4)


def test_circle_rule_integrates_harmonics():
    pts, w = sphere_rule(2)
    # cos^2 averages to 1/2; any Fourier mode below the node count vanishes
    assert np.sum(w * pts[:, 0] ** 2) / (2 * np.pi) == pytest.approx(0.5)
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    assert np.sum(w * np.cos(5 * theta)) == pytest.approx(0.0, abs=1e-13)


def test_random_directions_shape_and_norm(rng):
    d = random_directions(2, 57, rng)
    assert d.shape == (57, 2)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)
