"""Decay-rate measurement and comparison against the predicted exponents.

Algebraic rates are fitted as straight lines in (log(1+t), log value), the
same time weight the theory uses, so a clean series v = C (1+t)^a is
recovered exactly.  The registry in `predicted_exponent` holds the claimed
exponents keyed by what is being measured; tests and report tables always
go through it rather than hard-coding numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import NormHistory

__all__ = [
    "DecayFit",
    "ExponentialFit",
    "TheoryComparison",
    "default_window",
    "fit_decay",
    "fit_exponential_decay",
    "gamma_pq",
    "predicted_exponent",
    "claim_ids",
    "compare_with_theory",
]

_MIN_POINTS = 8


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power law v ~ C (1+t)^alpha over a time window."""

    window: tuple[float, float]
    exponent: float
    prefactor: float
    r_squared: float
    points: int

    def __post_init__(self) -> None:
        if self.window[0] >= self.window[1]:
            raise ValueError("fit window must have positive length")
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError("coefficient of determination outside [0, 1]")
        if self.points < _MIN_POINTS:
            raise ValueError(f"fit needs at least {_MIN_POINTS} points")


@dataclass(frozen=True)
class ExponentialFit:
    """Least-squares exponential v ~ C exp(-rate t) over a time window."""

    window: tuple[float, float]
    rate: float
    prefactor: float
    r_squared: float
    points: int


@dataclass(frozen=True)
class TheoryComparison:
    """One measured exponent against its predicted value."""

    quantity: str
    predicted: float
    fit: DecayFit
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.fit.exponent - self.predicted)

    @property
    def verdict(self) -> bool:
        return self.deviation <= self.tolerance and self.fit.r_squared >= 0.98

    def describe(self) -> str:
        status = "pass" if self.verdict else "FAIL"
        return (
            f"{self.quantity}: measured {self.fit.exponent:+.4f} vs "
            f"predicted {self.predicted:+.4f} (tol {self.tolerance:g}, "
            f"R^2 = {self.fit.r_squared:.4f}) [{status}]"
        )


def default_window(times) -> tuple[float, float]:
    """Last decade of the series, excluding the final five percent."""
    t_max = float(np.max(times))
    if t_max <= 0:
        raise ValueError("need positive times to pick a window")
    hi = 0.95 * t_max
    return hi / 10.0, hi


def _window_slice(times, values, window):
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    lo, hi = float(window[0]), float(window[1])
    mask = (t >= lo) & (t <= hi)
    if int(mask.sum()) < _MIN_POINTS:
        raise ValueError(
            f"only {int(mask.sum())} samples in [{lo:g}, {hi:g}]; "
            f"need {_MIN_POINTS}"
        )
    return t[mask], v[mask], (lo, hi)


def _line_fit(x, y):
    coeff = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeff, x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-28 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(coeff[0]), float(coeff[1]), float(min(max(r2, 0.0), 1.0))


def fit_decay(history: NormHistory, norm_name: str, window=None) -> DecayFit:
    """Fit one recorded norm to a power of (1+t).

    All values inside the window must be positive; at least eight samples
    are required.  The window defaults to the last decade of the series
    with the final five percent dropped.
    """
    values = history.column(norm_name)
    if window is None:
        window = default_window(history.times)
    t, v, window = _window_slice(history.times, values, window)
    if np.any(v <= 0):
        raise ValueError(f"nonpositive values of {norm_name!r} in the window")
    slope, intercept, r2 = _line_fit(np.log1p(t), np.log(v))
    return DecayFit(window, slope, float(np.exp(intercept)), r2, t.size)


def fit_exponential_decay(
    history: NormHistory, norm_name: str, window=None
) -> ExponentialFit:
    """Fit one recorded norm to C exp(-rate t) on a semilog scale."""
    values = history.column(norm_name)
    if window is None:
        window = default_window(history.times)
    t, v, window = _window_slice(history.times, values, window)
    if np.any(v <= 0):
        raise ValueError(f"nonpositive values of {norm_name!r} in the window")
    slope, intercept, r2 = _line_fit(t, np.log(v))
    return ExponentialFit(window, -slope, float(np.exp(intercept)), r2, t.size)


def gamma_pq(n: int, p: float, q: float) -> float:
    """Heat-kernel exponent (n/2)(1/p - 1/q) between Lebesgue indices."""
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q")
    inv_p = 0.0 if p == np.inf else 1.0 / p
    inv_q = 0.0 if q == np.inf else 1.0 / q
    return 0.5 * n * (inv_p - inv_q)


def _radial_besov_data(s, ell):
    return -0.5 * (s + ell)


def _radial_besov_orthogonal(s, ell):
    return -0.5 * (s + ell + 1.0)


def _lebesgue_data(n, p, ell, q=2.0):
    return -gamma_pq(n, p, q) - 0.5 * ell


def _lebesgue_data_orthogonal(n, p, ell, q=2.0):
    return -gamma_pq(n, p, q) - 0.5 * (ell + 1.0)


def _homogeneous_besov_surplus(s, sigma):
    if sigma <= 0:
        raise ValueError("the surplus index must be positive")
    return -0.5 * (s + sigma)


def _semigroup_l2(s):
    return -0.5 * s


_CLAIMS = {
    # L2-type norms of data lying in a negative-order block space of
    # regularity -s: total part, and the faster undamped-orthogonal part.
    "radial-besov-data": _radial_besov_data,
    "radial-besov-orthogonal": _radial_besov_orthogonal,
    # L^p source data measured in L^q, with the derivative count ell.
    "lebesgue-data": _lebesgue_data,
    "lebesgue-data-orthogonal": _lebesgue_data_orthogonal,
    # Extra decay of homogeneous norms of positive index sigma.
    "homogeneous-besov-surplus": _homogeneous_besov_surplus,
    # Plain semigroup L2 rate for negative-order data (also the mixed
    # hyperbolic-parabolic configuration).
    "semigroup-l2": _semigroup_l2,
}


def claim_ids() -> tuple[str, ...]:
    return tuple(sorted(_CLAIMS))


def predicted_exponent(claim: str, **params) -> float:
    """Exponent a in the claimed bound value ~ (1+t)^a for one quantity."""
    try:
        formula = _CLAIMS[claim]
    except KeyError:
        raise ValueError(
            f"unknown claim {claim!r}; known: {', '.join(claim_ids())}"
        ) from None
    try:
        return float(formula(**params))
    except TypeError as exc:
        raise ValueError(f"bad parameters for {claim!r}: {exc}") from None


def compare_with_theory(
    quantity: str, fit: DecayFit, claim: str, tolerance: float, **params
) -> TheoryComparison:
    return TheoryComparison(quantity, predicted_exponent(claim, **params),
                            fit, float(tolerance))
