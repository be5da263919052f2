"""Periodic grids and multi-component fields with a cached Fourier side.

Conventions used throughout the package:

* A field lives on a uniform periodic grid over ``[0, box_i)`` per axis and is
  stored as a real array of shape ``(ncomp, *resolution)``.
* The spectral representation holds coefficients of the trigonometric
  interpolant, ``c_k = (1/M) sum_j f(x_j) exp(-i xi_k . x_j)``, laid out as
  ``numpy.fft.rfftn`` output (last spatial axis halved).
* Lebesgue norms are physical: ``|f|_Lp^p = sum_x |f(x)|^p * cell_volume``
  with ``|f(x)|`` the Euclidean norm over components.  On a uniform periodic
  grid the trapezoidal rule coincides with this rectangle sum.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "GridField",
    "field_from_values",
    "field_from_spectrum",
    "lp_norm",
    "l2_norm_spectral",
    "apply_multiplier",
    "gradient",
    "random_band_field",
    "read_field",
    "write_field",
    "export_slice_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on a box in 1, 2 or 3 dimensions."""

    resolution: tuple[int, ...]
    box: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (1 <= len(self.resolution) <= 3):
            raise ValueError("only 1, 2 or 3 spatial dimensions are supported")
        if len(self.box) != len(self.resolution):
            raise ValueError("box and resolution dimensionality mismatch")
        if any(r < 4 or r % 2 for r in self.resolution):
            raise ValueError("resolutions must be even and at least 4")
        if any(b <= 0 for b in self.box):
            raise ValueError("box lengths must be positive")

    @property
    def n(self) -> int:
        return len(self.resolution)

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for r, b in zip(self.resolution, self.box):
            vol *= b / r
        return vol

    @property
    def volume(self) -> float:
        v = 1.0
        for b in self.box:
            v *= b
        return v

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        *full, last = self.resolution
        return (*full, last // 2 + 1)

    def axis_coordinates(self, axis: int) -> np.ndarray:
        r, b = self.resolution[axis], self.box[axis]
        return np.arange(r) * (b / r)

    def frequencies(self, axis: int) -> np.ndarray:
        """Angular frequencies along one axis in rfftn layout."""
        r, b = self.resolution[axis], self.box[axis]
        d = b / r
        if axis == self.n - 1:
            return 2.0 * np.pi * np.fft.rfftfreq(r, d=d)
        return 2.0 * np.pi * np.fft.fftfreq(r, d=d)

    def frequency_mesh(self) -> list[np.ndarray]:
        """Broadcastable per-axis frequency arrays over the spectral lattice."""
        out = []
        for axis in range(self.n):
            shape = [1] * self.n
            shape[axis] = -1
            out.append(self.frequencies(axis).reshape(shape))
        return out

    def frequency_magnitude(self) -> np.ndarray:
        acc = np.zeros(self.spectral_shape)
        for f in self.frequency_mesh():
            acc = acc + f * f
        return np.sqrt(acc)

    def parseval_weights(self) -> np.ndarray:
        """Multiplicities of rfftn modes for Plancherel sums.

        The last axis stores only k >= 0; interior modes represent a
        conjugate pair and count twice.
        """
        last = self.resolution[-1]
        w = np.full(last // 2 + 1, 2.0)
        w[0] = 1.0
        if last % 2 == 0:
            w[-1] = 1.0
        shape = [1] * self.n
        shape[-1] = -1
        return w.reshape(shape)

    @property
    def nyquist(self) -> float:
        """Smallest per-axis maximum angular frequency."""
        return min(
            np.pi * r / b for r, b in zip(self.resolution, self.box)
        )

    @property
    def max_frequency(self) -> float:
        """Largest representable |xi| (corner of the spectral lattice)."""
        acc = 0.0
        for r, b in zip(self.resolution, self.box):
            acc += (np.pi * r / b) ** 2
        return float(np.sqrt(acc))

    @property
    def min_frequency(self) -> float:
        """Smallest nonzero |xi| on the lattice."""
        return min(2.0 * np.pi / b for b in self.box)


class GridField:
    """Real multi-component field on a :class:`Grid`.

    Either ``values`` or ``spectrum`` may be supplied; the other side is
    computed lazily and cached.  Instances are treated as immutable.
    """

    def __init__(
        self,
        grid: Grid,
        values: np.ndarray | None = None,
        spectrum: np.ndarray | None = None,
    ) -> None:
        if values is None and spectrum is None:
            raise ValueError("need values or spectrum")
        self.grid = grid
        self._values = None
        self._spectrum = None
        if values is not None:
            values = np.asarray(values, dtype=np.float64)
            if values.ndim == grid.n:
                values = values[np.newaxis]
            if values.shape[1:] != grid.resolution:
                raise ValueError(
                    f"value shape {values.shape} does not match grid "
                    f"resolution {grid.resolution}"
                )
            values.setflags(write=False)
            self._values = values
        if spectrum is not None:
            spectrum = np.asarray(spectrum, dtype=np.complex128)
            if spectrum.ndim == grid.n:
                spectrum = spectrum[np.newaxis]
            if spectrum.shape[1:] != grid.spectral_shape:
                raise ValueError(
                    f"spectrum shape {spectrum.shape} does not match grid "
                    f"spectral shape {grid.spectral_shape}"
                )
            spectrum.setflags(write=False)
            self._spectrum = spectrum

    @property
    def ncomp(self) -> int:
        if self._values is not None:
            return self._values.shape[0]
        return self._spectrum.shape[0]

    @property
    def spatial_axes(self) -> tuple[int, ...]:
        return tuple(range(1, self.grid.n + 1))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = np.fft.irfftn(
                self._spectrum * self._total_modes(),
                s=self.grid.resolution,
                axes=self.spatial_axes,
            )
            v.setflags(write=False)
            self._values = v
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            c = np.fft.rfftn(self._values, axes=self.spatial_axes)
            c = c / self._total_modes()
            c.setflags(write=False)
            self._spectrum = c
        return self._spectrum

    def _total_modes(self) -> float:
        m = 1
        for r in self.grid.resolution:
            m *= r
        return float(m)

    def component(self, i: int) -> np.ndarray:
        return self.values[i]

    def mean(self) -> np.ndarray:
        """Per-component mean over the box (the zero Fourier mode)."""
        return self.spectrum[(slice(None),) + (0,) * self.grid.n].real.copy()

    def map_components(self, matrix: np.ndarray) -> "GridField":
        """Apply a constant matrix across the component axis."""
        matrix = np.asarray(matrix, dtype=np.float64)
        vals = np.einsum("ij,j...->i...", matrix, self.values)
        return GridField(self.grid, values=vals)

    def __add__(self, other: "GridField") -> "GridField":
        self._check_compatible(other)
        return GridField(self.grid, values=self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        self._check_compatible(other)
        return GridField(self.grid, values=self.values - other.values)

    def __mul__(self, scalar: float) -> "GridField":
        return GridField(self.grid, values=self.values * float(scalar))

    __rmul__ = __mul__

    def _check_compatible(self, other: "GridField") -> None:
        if self.grid != other.grid or self.ncomp != other.ncomp:
            raise ValueError("fields live on different grids or sizes")


def field_from_values(grid: Grid, values: np.ndarray) -> GridField:
    return GridField(grid, values=values)


def field_from_spectrum(grid: Grid, spectrum: np.ndarray) -> GridField:
    return GridField(grid, spectrum=spectrum)


def lp_norm(f: GridField, p: float) -> float:
    """Lebesgue norm over the box, Euclidean in the component index."""
    mag = np.sqrt(np.sum(f.values * f.values, axis=0))
    if p == np.inf:
        return float(mag.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(mag**p) * f.grid.cell_volume) ** (1.0 / p))


def l2_norm_spectral(f: GridField) -> float:
    """L2 norm evaluated on the spectral side (Plancherel)."""
    w = f.grid.parseval_weights()
    total = np.sum(w * np.abs(f.spectrum) ** 2)
    return float(np.sqrt(f.grid.volume * total))


def apply_multiplier(f: GridField, multiplier: np.ndarray) -> GridField:
    """Multiply the spectrum by a scalar mask over the frequency lattice."""
    multiplier = np.asarray(multiplier)
    if multiplier.shape != f.grid.spectral_shape:
        raise ValueError("multiplier shape does not match spectral lattice")
    return GridField(f.grid, spectrum=f.spectrum * multiplier[np.newaxis])


def gradient(f: GridField) -> list[GridField]:
    """Spectral partial derivatives, one field per spatial axis."""
    out = []
    for xi in f.grid.frequency_mesh():
        out.append(GridField(f.grid, spectrum=f.spectrum * (1j * xi)))
    return out


def random_band_field(
    grid: Grid,
    ncomp: int,
    rng: np.random.Generator,
    envelope,
    normalize_linf: float | None = None,
) -> GridField:
    """Random real field with spectral envelope ``envelope(|xi|)``.

    White noise is drawn in physical space and filtered, which keeps the
    Hermitian symmetry exact.  The zero mode is removed.  If
    ``normalize_linf`` is given the field is rescaled so its largest
    componentwise magnitude equals that value.
    """
    noise = rng.standard_normal((ncomp, *grid.resolution))
    base = GridField(grid, values=noise)
    mag = grid.frequency_magnitude()
    mask = np.asarray(envelope(mag), dtype=np.float64)
    mask[(0,) * grid.n] = 0.0
    out = apply_multiplier(base, mask)
    if normalize_linf is not None:
        peak = np.abs(out.values).max()
        if peak == 0:
            raise ValueError("field is identically zero; cannot normalize")
        out = out * (normalize_linf / peak)
    return out


def two_thirds_mask(grid: Grid) -> np.ndarray:
    """Boolean spectral mask for alias-free quadratic products.

    Keeps per-axis integer modes |k| <= kmax with 3 kmax < resolution, so a
    pointwise product of two masked fields is exact (Galerkin-consistent) on
    the retained band and in particular its zero mode is exact.
    """
    mask = np.ones(grid.spectral_shape, dtype=bool)
    for axis in range(grid.n):
        r = grid.resolution[axis]
        kmax = r // 3
        if 3 * kmax >= r:
            kmax -= 1
        if axis == grid.n - 1:
            k = np.arange(r // 2 + 1)
        else:
            k = np.abs(np.fft.fftfreq(r, 1.0 / r).astype(int))
        shape = [1] * grid.n
        shape[axis] = -1
        mask &= (k <= kmax).reshape(shape)
    return mask


_MAGIC = b"DLF1"


def write_field(path, f: GridField) -> None:
    """Binary dump: magic, n, ncomp, resolution, box, row-major float64."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<ii", f.grid.n, f.ncomp))
        fh.write(struct.pack(f"<{f.grid.n}i", *f.grid.resolution))
        fh.write(struct.pack(f"<{f.grid.n}d", *f.grid.box))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path) -> GridField:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a field file")
        n, ncomp = struct.unpack("<ii", fh.read(8))
        resolution = struct.unpack(f"<{n}i", fh.read(4 * n))
        box = struct.unpack(f"<{n}d", fh.read(8 * n))
        grid = Grid(tuple(resolution), tuple(box))
        count = ncomp * int(np.prod(resolution))
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
        values = data.reshape((ncomp, *resolution)).astype(np.float64)
    return GridField(grid, values=values)


def export_slice_csv(path, f: GridField, axis: int = 0, index=None) -> None:
    """Write a 1D slice as CSV with 12 significant digits.

    For n = 1 the whole field is written; for higher dimensions the other
    axes are pinned at ``index`` (defaults to zeros).
    """
    g = f.grid
    if index is None:
        index = (0,) * (g.n - 1)
    coords = g.axis_coordinates(axis)
    sel: list = [slice(None)] * g.n
    others = [a for a in range(g.n) if a != axis]
    for a, i in zip(others, index):
        sel[a] = i
    rows = f.values[(slice(None), *sel)]
    with open(path, "w", newline="") as fh:
        header = "x," + ",".join(f"w{i}" for i in range(f.ncomp))
        fh.write(header + "\n")
        for j, x in enumerate(coords):
            line = ",".join([f"{x:.12g}"] + [f"{rows[i][j]:.12g}" for i in range(f.ncomp)])
            fh.write(line + "\n")
