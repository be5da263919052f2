"""Measured-constant harnesses for block-norm inequalities.

Each harness evaluates a norm ratio over a batch of sample fields and
reports the extremes, so a test can pin the best empirical constant and
watch it for regressions.  Every ratio checked here balances
dimensionally, which gives a free consistency probe: re-evaluating the
same coefficient array on a box of half the size doubles every lattice
frequency and scales each Lebesgue norm by 2^(-n/p), exactly the
whole-space dilation f -> f(2x).  A balanced ratio must come back
unchanged to rounding error, and the harnesses verify that it does.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dyadic import BesovSpec, besov_norm, frac_laplacian, lp_block, make_partition
from .grids import Grid, GridField, lp_norm, random_band_field

_SUPPORTED_P = (1.0, 2.0, np.inf)


@dataclass(frozen=True)
class RatioReport:
    """Extreme norm ratios measured over a sample batch.

    ``ratios`` holds one entry per retained sample; ``skipped`` counts
    samples dropped for a vanishing denominator.  ``dilation_max_dev`` is
    the largest relative change of any ratio under the exact half-box
    dilation, or None when that check was not run.
    """

    label: str
    theta: float
    ratios: np.ndarray
    skipped: int
    dilation_max_dev: float | None
    block_constant: float | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.ratios, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "ratios", arr)

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else float("nan")

    @property
    def min_ratio(self) -> float:
        return float(self.ratios.min()) if self.ratios.size else float("nan")

    def describe(self) -> str:
        parts = [
            f"{self.label}: {self.ratios.size} samples",
            f"ratio in [{self.min_ratio:.6g}, {self.max_ratio:.6g}]",
        ]
        if self.skipped:
            parts.append(f"{self.skipped} skipped (zero denominator)")
        if self.dilation_max_dev is not None:
            parts.append(f"dilation deviation {self.dilation_max_dev:.3e}")
        if self.block_constant is not None:
            parts.append(f"per-block constant {self.block_constant:.6g}")
        return "; ".join(parts)


def box_dilate(f: GridField) -> GridField:
    """Exact dilation x -> 2x: the same samples read on a half-size box.

    Halving the box doubles every lattice frequency bitwise (all scale
    factors are powers of two), so dyadic blocks shift by exactly one
    index and derivative weights double exactly.
    """
    half = Grid(f.grid.resolution, tuple(b / 2.0 for b in f.grid.box))
    return GridField(half, values=f.values)


def band_limited_samples(
    grid: Grid,
    ncomp: int,
    count: int,
    seed: int,
    r_hi: float | None = None,
    r_lo: float = 0.0,
) -> list[GridField]:
    """Reproducible mean-free random fields supported on frequency bands.

    Each sample gets its own upper band edge, drawn between a quarter of
    ``r_hi`` and ``r_hi`` itself, so a batch exercises several dyadic
    blocks rather than one fixed annulus.
    """
    if r_hi is None:
        r_hi = 0.5 * grid.nyquist
    if not 0.0 <= r_lo < r_hi:
        raise ValueError("need 0 <= r_lo < r_hi")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        hi = r_hi * rng.uniform(0.25, 1.0)
        hi = max(hi, 2.0 * grid.min_frequency)

        def envelope(r, hi=hi):
            return ((r > r_lo) & (r <= hi)).astype(float)

        out.append(random_band_field(grid, ncomp, rng, envelope))
    return out


def _shared_dimension(samples) -> int:
    if not samples:
        raise ValueError("need at least one sample field")
    n = samples[0].grid.n
    if any(f.grid.n != n for f in samples):
        raise ValueError("samples mix spatial dimensions")
    return n


def _derivative_lp(f: GridField, order: float, p: float) -> float:
    """Lebesgue norm of the order-`order` spectral derivative.

    Order zero still routes through the multiplier so the zero mode is
    dropped consistently across all factors of a ratio.
    """
    return lp_norm(frac_laplacian(f, order), p)


def _require_mean_free(f: GridField) -> None:
    scale = float(np.max(np.abs(f.spectrum))) or 1.0
    if float(np.max(np.abs(f.mean()))) > 1e-10 * scale:
        raise ValueError("this harness needs mean-free samples")


def _collect(label, theta, ratios, devs, skipped, block_constant=None):
    dev = None
    if devs is not None:
        dev = float(max(devs)) if devs else 0.0
    return RatioReport(
        label=label,
        theta=theta,
        ratios=np.asarray(ratios, dtype=np.float64),
        skipped=skipped,
        dilation_max_dev=dev,
        block_constant=block_constant,
    )


def verify_interpolation_suite(
    samples,
    k: float,
    m: float,
    rho: float,
    check_dilation: bool = True,
) -> RatioReport:
    """Measure |D^k f|_2 against |D^(k+m) f|_2 and a negative-order block sup.

    The interpolation exponent theta = (rho + k) / (rho + k + m) makes the
    ratio

        |D^k f|_2 / ( |D^(k+m) f|_2^theta * sup_q 2^(-q rho) |block_q f|_2^(1-theta) )

    scale-free; the report carries the measured extremes so callers can
    pin the constant.  Samples whose denominator vanishes are skipped and
    counted.
    """
    if k < 0 or m <= 0 or rho <= 0:
        raise ValueError("need k >= 0, m > 0, rho > 0")
    _shared_dimension(samples)
    theta = (rho + k) / (rho + k + m)
    spec = BesovSpec(-rho, 2.0, np.inf, homogeneous=True)

    def ratio_of(f: GridField) -> float | None:
        num = _derivative_lp(f, k, 2.0)
        high = _derivative_lp(f, k + m, 2.0)
        _require_mean_free(f)
        # Mean-free inputs make the excluded zero mode vacuous, so the
        # critical-index warning carries no information here.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            low = besov_norm(f, spec)
        den = high**theta * low ** (1.0 - theta)
        if not np.isfinite(den) or den == 0.0:
            return None
        return num / den

    ratios, devs, skipped = [], ([] if check_dilation else None), 0
    for f in samples:
        r = ratio_of(f)
        if r is None:
            skipped += 1
            continue
        ratios.append(r)
        if check_dilation:
            rd = ratio_of(box_dilate(f))
            if rd is None or r == 0.0:
                skipped += 1
                ratios.pop()
                continue
            devs.append(abs(rd - r) / r)
    label = f"interpolation k={k:g} m={m:g} rho={rho:g}"
    return _collect(label, theta, ratios, devs, skipped)


def gns_check(
    samples,
    k: float,
    q: float,
    m: float,
    rho: float,
    r: float,
    check_dilation: bool = True,
) -> RatioReport:
    """Measure the derivative-interpolation ratio with mixed integrability.

    theta is fixed by the dimensional balance

        k + n (1/r - 1/q) = m (1 - theta) + rho * theta,

    and the measured quantity is
    |D^k f|_{L^q} / ( |D^m f|_{L^r}^(1-theta) * |D^rho f|_{L^r}^theta ).
    Exponents outside {1, 2, inf}, theta outside [0, 1], or q < r are
    rejected.
    """
    if q not in _SUPPORTED_P or r not in _SUPPORTED_P:
        raise ValueError("integrability exponents must be 1, 2 or inf")
    inv_q = 0.0 if q == np.inf else 1.0 / q
    inv_r = 0.0 if r == np.inf else 1.0 / r
    if inv_r < inv_q:
        raise ValueError("need r <= q (no reverse embeddings on a box)")
    if rho == m:
        raise ValueError("need distinct derivative orders m != rho")
    if min(k, m, rho) < 0:
        raise ValueError("derivative orders must be nonnegative")
    n = _shared_dimension(samples)
    theta = (k + n * (inv_r - inv_q) - m) / (rho - m)
    if not -1e-12 <= theta <= 1.0 + 1e-12:
        raise ValueError(f"exponents give theta = {theta:.6g} outside [0, 1]")
    theta = min(max(theta, 0.0), 1.0)

    def ratio_of(f: GridField) -> float | None:
        num = _derivative_lp(f, k, q)
        den = _derivative_lp(f, m, r) ** (1.0 - theta) * _derivative_lp(
            f, rho, r
        ) ** theta
        if not np.isfinite(den) or den == 0.0:
            return None
        return num / den

    ratios, devs, skipped = [], ([] if check_dilation else None), 0
    for f in samples:
        val = ratio_of(f)
        if val is None:
            skipped += 1
            continue
        ratios.append(val)
        if check_dilation:
            vd = ratio_of(box_dilate(f))
            if vd is None or val == 0.0:
                skipped += 1
                ratios.pop()
                continue
            devs.append(abs(vd - val) / val)
    label = f"gns k={k:g} Lq={q:g} vs m={m:g} rho={rho:g} Lr={r:g}"
    return _collect(label, theta, ratios, devs, skipped)


def lp_embedding_check(
    samples,
    p: float,
    rho: float | None = None,
    check_dilation: bool = True,
) -> RatioReport:
    """Measure the negative-order block sup against the L^p norm.

    With rho = n (1/p - 1/2) the quantity sup_q 2^(-q rho) |block_q f|_2
    is controlled by |f|_{L^p}; the report carries the best constant seen
    and, separately, the largest per-block value of
    2^(q n / 2) |block_q f|_2 / (2^(q n / p) |f|_p), which must agree with
    the norm-level maximum.
    """
    if p not in (1, 2):
        raise ValueError("embedding source exponent must be 1 or 2")
    n = _shared_dimension(samples)
    expected = n * (1.0 / p - 0.5)
    if rho is None:
        rho = expected
    elif abs(rho - expected) > 1e-12:
        raise ValueError(f"rho must equal n(1/p - 1/2) = {expected:g}")
    spec = BesovSpec(-rho, 2.0, np.inf, homogeneous=True)
    partitions: dict[Grid, object] = {}

    def norms_of(f: GridField):
        lp = lp_norm(f, p)
        if lp == 0.0:
            return None
        _require_mean_free(f)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bes = besov_norm(f, spec)
        return bes / lp, lp

    ratios, devs, skipped = [], ([] if check_dilation else None), 0
    block_constant = 0.0
    for f in samples:
        got = norms_of(f)
        if got is None:
            skipped += 1
            continue
        val, lp = got
        ratios.append(val)
        part = partitions.setdefault(f.grid, make_partition(f.grid))
        for qi in part.q_range:
            bn = lp_norm(lp_block(f, part, qi), 2.0)
            per_block = 2.0 ** (qi * n * (0.5 - 1.0 / p)) * bn / lp
            block_constant = max(block_constant, per_block)
        if check_dilation:
            gd = norms_of(box_dilate(f))
            if gd is None or val == 0.0:
                skipped += 1
                ratios.pop()
                continue
            devs.append(abs(gd[0] - val) / val)
    label = f"lp-embedding p={p:g} rho={rho:g}"
    return _collect(label, 0.0, ratios, devs, skipped, block_constant)


def bernstein_block_ratios(
    f: GridField, partition=None, rel_floor: float = 1e-9
) -> dict[int, float]:
    """Derivative-to-value norm ratio for every energetically nonempty block.

    For a block supported on the annulus around 2^q the ratio
    |grad block|_2 / |block|_2 must land inside the annulus bounds; blocks
    holding less than ``rel_floor`` of the field's mass are skipped since
    their ratio is dominated by rounding noise.
    """
    if partition is None:
        partition = make_partition(f.grid)
    total = lp_norm(f, 2.0)
    out: dict[int, float] = {}
    for q in partition.q_range:
        piece = lp_block(f, partition, q)
        base = lp_norm(piece, 2.0)
        if base <= rel_floor * total:
            continue
        out[q] = lp_norm(frac_laplacian(piece, 1.0), 2.0) / base
    return out
