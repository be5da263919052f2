"""Dyadic frequency decomposition and Besov-type norms on periodic grids.

The radial profile is built from the classical smooth step: with
``psi(x) = exp(-1/x)`` for positive x,

    step(x) = psi(x) / (psi(x) + psi(1 - x))

rises smoothly from 0 to 1 on [0, 1].  The low-pass bump

    chi(r) = step((4/3 - r) / (4/3 - 3/4))

equals 1 for r <= 3/4 and 0 for r >= 4/3, and the annular profile

    profile(r) = chi(r/2) - chi(r)

is supported on 3/4 <= r <= 8/3, positive inside, and telescopes to a
partition of unity: sum over q of profile(r / 2^q) = 1 for every r > 0.
Because consecutive terms share the same chi evaluations, the telescoping
holds exactly in floating point on every covered annulus.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grids import Grid, GridField, apply_multiplier, lp_norm

__all__ = [
    "BesovSpec",
    "DyadicPartition",
    "smooth_step",
    "low_pass_profile",
    "annulus_profile",
    "make_partition",
    "lp_block",
    "psi_block",
    "block_norms",
    "besov_norm",
    "frac_laplacian",
    "dyadic_dilate",
    "ANNULUS_INNER",
    "ANNULUS_OUTER",
]

ANNULUS_INNER = 0.75
ANNULUS_OUTER = 8.0 / 3.0
_LOW_EDGE = 4.0 / 3.0  # chi(r) = 0 beyond this radius


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, monotone between."""
    x = np.asarray(x, dtype=np.float64)
    lo = x <= 0.0
    hi = x >= 1.0
    mid = ~(lo | hi)
    out = np.where(hi, 1.0, 0.0)
    if np.any(mid):
        xm = x[mid]
        a = np.exp(-1.0 / xm)
        b = np.exp(-1.0 / (1.0 - xm))
        out[mid] = a / (a + b)
    return out


def low_pass_profile(r):
    """chi: equals 1 for r <= 3/4, vanishes for r >= 4/3."""
    r = np.asarray(r, dtype=np.float64)
    return smooth_step((_LOW_EDGE - r) / (_LOW_EDGE - ANNULUS_INNER))


def annulus_profile(r):
    """Bump supported on the annulus [3/4, 8/3], positive inside."""
    r = np.asarray(r, dtype=np.float64)
    return low_pass_profile(0.5 * r) - low_pass_profile(r)


class BesovSpec(NamedTuple):
    """Besov norm parameters: regularity s, integrability p, summation r."""

    s: float
    p: float
    r: float
    homogeneous: bool = True


@dataclass(frozen=True)
class DyadicPartition:
    """Frequency masks phi_q for one grid, plus the low-frequency mask psi.

    ``q_min .. q_certified`` index blocks whose annulus lies entirely inside
    the representable band (2^q * 8/3 <= per-axis Nyquist).  Blocks up to
    ``q_max`` are clipped by the lattice corner but are kept, after
    normalisation by the partial sum, so that the masks still resolve the
    identity and reconstruction is exact.
    """

    grid: Grid
    q_min: int
    q_certified: int
    q_max: int
    masks: dict
    psi_mask: np.ndarray

    @property
    def q_range(self) -> range:
        return range(self.q_min, self.q_max + 1)

    def mask(self, q: int) -> np.ndarray:
        return self.masks[q]


def make_partition(grid: Grid) -> DyadicPartition:
    """Build the dyadic partition adapted to a grid's frequency lattice."""
    mag = grid.frequency_magnitude()
    xi_min = grid.min_frequency
    # Lowest block: its rising edge must sit at or below the smallest
    # nonzero frequency so every lattice point is fully covered.
    q_min = math.floor(math.log2(xi_min / _LOW_EDGE))
    q_certified = math.floor(math.log2(grid.nyquist / ANNULUS_OUTER))
    # Highest block: coverage up to the lattice corner.  The plateau of
    # profile begins at 1.5 * 2^q, so grow q until that exceeds the corner.
    q_max = q_certified
    while 1.5 * 2.0**q_max < grid.max_frequency:
        q_max += 1
    if q_max < q_min:
        raise ValueError("grid too small to carry a dyadic partition")

    raw = {q: annulus_profile(mag / 2.0**q) for q in range(q_min, q_max + 1)}
    total = np.zeros_like(mag)
    for m in raw.values():
        total += m
    safe = np.where(total > 1e-300, total, 1.0)
    masks = {}
    for q, m in raw.items():
        mask = np.where(total > 1e-300, m / safe, 0.0)
        mask.setflags(write=False)
        masks[q] = mask

    psi = np.ones_like(mag)
    for q in range(max(q_min, 0), q_max + 1):
        psi = psi - masks[q]
    np.clip(psi, 0.0, 1.0, out=psi)
    psi.setflags(write=False)
    return DyadicPartition(grid, q_min, q_certified, q_max, masks, psi)


def lp_block(f: GridField, partition: DyadicPartition, q: int) -> GridField:
    """Frequency-localized piece of f on the annulus indexed by q."""
    if q not in partition.masks:
        raise KeyError(f"block {q} outside partition range {partition.q_range}")
    return apply_multiplier(f, partition.masks[q])


def psi_block(f: GridField, partition: DyadicPartition) -> GridField:
    """Low-frequency remainder used by inhomogeneous norms (keeps the mean)."""
    return apply_multiplier(f, partition.psi_mask)


def block_norms(
    f: GridField, partition: DyadicPartition, p: float
) -> dict[int, float]:
    return {q: lp_norm(lp_block(f, partition, q), p) for q in partition.q_range}


def besov_norm(
    f: GridField, spec: BesovSpec, partition: DyadicPartition | None = None
) -> float:
    """Dyadic-block Besov norm of a grid field.

    Homogeneous: l^r over all blocks of 2^{qs} |block_q f|_Lp.  The zero
    mode never enters (all annular masks vanish there).  Inhomogeneous: the
    psi piece enters with unit weight, blocks from q = 0 up.
    """
    if spec.p not in (1, 2, np.inf) or spec.r not in (1, 2, np.inf):
        raise ValueError("supported integrability/summation exponents: 1, 2, inf")
    if partition is None:
        partition = make_partition(f.grid)
    if partition.grid != f.grid:
        raise ValueError("partition was built for a different grid")
    if spec.homogeneous and spec.s <= -0.5 * f.grid.n:
        warnings.warn(
            "homogeneous norm at s <= -n/2: the excluded mean mode would "
            "dominate; value covers the mean-free part only",
            stacklevel=2,
        )
    terms = []
    if not spec.homogeneous:
        terms.append(lp_norm(psi_block(f, partition), spec.p))
    q_lo = partition.q_min if spec.homogeneous else max(partition.q_min, 0)
    for q in range(q_lo, partition.q_max + 1):
        nb = lp_norm(lp_block(f, partition, q), spec.p)
        terms.append(2.0 ** (q * spec.s) * nb)
    arr = np.asarray(terms)
    if spec.r == np.inf:
        return float(arr.max()) if arr.size else 0.0
    return float((arr**spec.r).sum() ** (1.0 / spec.r))


def frac_laplacian(f: GridField, alpha: float, mean_tol: float = 1e-10) -> GridField:
    """Fractional Laplacian |xi|^alpha as a Fourier multiplier.

    Negative powers require a mean-free field; the zero mode is annihilated
    in every case.
    """
    if alpha < 0:
        scale = float(np.sqrt(np.sum(np.abs(f.spectrum) ** 2)))
        mean = float(np.max(np.abs(f.mean())))
        if mean > mean_tol * max(scale, 1e-300):
            raise ValueError(
                "negative-order multiplier needs a mean-free field "
                f"(|mean| = {mean:.3e}, scale = {scale:.3e})"
            )
    mag = f.grid.frequency_magnitude()
    mult = np.zeros_like(mag)
    nz = mag > 0
    mult[nz] = mag[nz] ** alpha
    return apply_multiplier(f, mult)


def dyadic_dilate(f: GridField, tail_tol: float = 1e-13) -> GridField:
    """Return the field x -> f(2x), exactly, by index doubling.

    Representable only when f is band-limited below half the lattice in
    every axis; otherwise raises.  Block content shifts up by exactly one
    dyadic index, which the interpolation harnesses rely on.
    """
    g = f.grid
    spec = f.spectrum
    out = np.zeros_like(spec)
    scale = float(np.sqrt(np.sum(np.abs(spec) ** 2)))

    def half_indices(r: int, hermitian_axis: bool) -> tuple[np.ndarray, np.ndarray]:
        # source index k (fftfreq order), target index 2k; modes whose double
        # would land on the ambiguous Nyquist line are excluded
        if hermitian_axis:
            src = np.arange(r // 2 + 1)
            keep = 2 * src < r // 2
            return src[keep], 2 * src[keep]
        ks = np.fft.fftfreq(r, 1.0 / r).astype(int)
        src = np.arange(r)
        keep = 2 * np.abs(ks) < r // 2
        tgt = np.where(ks >= 0, 2 * ks, r + 2 * ks)
        return src[keep], tgt[keep]

    src_idx = []
    tgt_idx = []
    for axis in range(g.n):
        r = g.resolution[axis]
        s, t = half_indices(r, axis == g.n - 1)
        src_idx.append(s)
        tgt_idx.append(t)

    src_grid = np.ix_(range(f.ncomp), *src_idx)
    tgt_grid = np.ix_(range(f.ncomp), *tgt_idx)
    out[tgt_grid] = spec[src_grid]

    kept = float(np.sqrt(np.sum(np.abs(out) ** 2)))
    if scale > 0 and abs(kept - scale) > tail_tol * scale:
        raise ValueError(
            "field has content above half Nyquist; dilation is not exact "
            f"(dropped mass fraction {abs(scale - kept) / scale:.3e})"
        )
    return GridField(g, spectrum=out)
