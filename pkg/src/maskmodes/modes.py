"""Sampled scalar fields, plane-wave grids and orthonormal mode bases.

Fields live on centered, power-of-two grids.  Spectra use the DC-centered
layout: every transform goes through an explicit ``ifftshift``/``fftshift``
sandwich so that the discrete Fourier transform of samples at
``x_n = (n - N/2) dx`` is evaluated exactly at angular spatial frequencies
``f_k = 2*pi*(k - N/2)/(N dx)`` with the sign convention
``sum E(x) exp(-i x f) dx dy``.
"""

import struct
from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.special import eval_genlaguerre, eval_hermite

from .errors import EmptyGrid, GridMismatch, GridTooSmall, UnknownLabel

FIELD_MAGIC = b"MMFIELD1"

#: Gram-matrix deviation a shipped basis is allowed on its documented grid.
TOL_ORTH = 1e-8


def _is_power_of_two(n):
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Centered 2D sampling grid.

    Parameters
    ----------
    nx, ny : int
        Sample counts per axis; powers of two, at least 2.
    dx, dy : float
        Physical sample spacing (length units).

    The grid is centered on the origin: sample ``i`` along x sits at
    ``(i - nx/2) * dx``, so the origin itself is always a sample point.
    """

    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        if not (_is_power_of_two(self.nx) and _is_power_of_two(self.ny)):
            raise ValueError(f"grid sizes must be powers of two >= 2, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("grid spacings must be positive")

    @property
    def cell_area(self):
        return self.dx * self.dy

    def x_axis(self):
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    def y_axis(self):
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def meshgrid(self):
        """Return ``X, Y`` coordinate arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x_axis(), self.y_axis(), indexing="xy")

    def freq_x(self):
        """Angular spatial frequencies along x, DC-centered."""
        return 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(self.nx, d=self.dx))

    def freq_y(self):
        return 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(self.ny, d=self.dy))

    def header(self):
        return {"nx": self.nx, "ny": self.ny, "dx": self.dx, "dy": self.dy}

    @classmethod
    def from_header(cls, h):
        return cls(nx=int(h["nx"]), ny=int(h["ny"]), dx=float(h["dx"]), dy=float(h["dy"]))


def centered_fft2(values, grid):
    """DC-centered discrete Fourier transform with physical measure.

    Approximates the continuous transform
    ``F(f) = int E(r) exp(-i r.f) d^2r``; inverse of :func:`centered_ifft2`.
    """
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(values))) * grid.cell_area


def centered_ifft2(spectrum, grid):
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(spectrum))) / grid.cell_area


def spectrum_norm_sq(spectrum, grid):
    """Squared norm of a DC-centered spectrum, matching the field norm (Parseval)."""
    return float(np.sum(np.abs(spectrum) ** 2)) / (grid.nx * grid.ny * grid.cell_area)


class SampledField:
    """Complex scalar field sampled on a :class:`Grid2D`.

    Parameters
    ----------
    grid : Grid2D
    values : ndarray, shape (ny, nx)
        Complex amplitudes; copied and frozen.
    k : float
        Wavenumber ``2*pi / wavelength``.
    """

    def __init__(self, grid, values, k):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.ny, grid.nx):
            raise GridMismatch(
                f"values shape {values.shape} does not match grid ({grid.ny}, {grid.nx})"
            )
        if not k > 0:
            raise ValueError("wavenumber k must be positive")
        self.grid = grid
        self.values = values.copy()
        self.values.setflags(write=False)
        self.k = float(k)

    def norm_sq(self):
        return float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell_area

    def norm(self):
        return float(np.sqrt(self.norm_sq()))

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize an identically zero field")
        return SampledField(self.grid, self.values / n, self.k)

    def spectrum(self):
        """DC-centered spectrum of the field (see :func:`centered_fft2`)."""
        return centered_fft2(self.values, self.grid)

    def __mul__(self, scalar):
        return SampledField(self.grid, self.values * scalar, self.k)

    __rmul__ = __mul__

    def __add__(self, other):
        if self.grid != other.grid:
            raise GridMismatch("cannot add fields on different grids")
        return SampledField(self.grid, self.values + other.values, self.k)

    def __sub__(self, other):
        return self + (-1.0) * other


def field_overlap(a, b):
    """Discrete inner product ``sum conj(a) * b * dx * dy``.

    Conjugate-symmetric: ``field_overlap(a, b) == conj(field_overlap(b, a))``.
    """
    if a.grid != b.grid:
        raise GridMismatch("overlap requires identical grids")
    return complex(np.sum(np.conj(a.values) * b.values) * a.grid.cell_area)


def apply_mask_to_field(field, mask):
    """Multiply a field by a thin-screen mask, point by point.

    The mask is any object exposing ``sample(grid, k)``; analytic masks are
    evaluated at the field's grid points, sampled masks must share the grid.
    """
    mv = mask.sample(field.grid, k=field.k)
    return SampledField(field.grid, mv * field.values, field.k)


def boundary_energy_fraction(values, rim=1):
    """Fraction of total |values|^2 living in the outer ``rim`` pixels."""
    total = float(np.sum(np.abs(values) ** 2))
    if total == 0:
        return 0.0
    inner = np.abs(values[rim:-rim, rim:-rim]) ** 2
    return 1.0 - float(np.sum(inner)) / total


# --------------------------------------------------------------------------
# Mode bases


class ModeBasis:
    """Finite family of modes addressed by label.

    Parameters
    ----------
    labels : sequence
        Hashable labels, order defines matrix indexing.
    sampler : callable
        ``sampler(label, grid) -> ndarray`` returning (possibly unnormalized)
        complex samples of the mode.
    name : str
        Short tag recorded in provenance.
    """

    def __init__(self, labels, sampler, name="custom"):
        self.labels = list(labels)
        if not self.labels:
            raise ValueError("a mode basis needs at least one label")
        self._sampler = sampler
        self.name = name

    @property
    def count(self):
        return len(self.labels)

    def raw_values(self, label, grid):
        if label not in self.labels:
            raise UnknownLabel(f"label {label!r} not in basis {self.name!r}")
        return self._sampler(label, grid)


def sample_field(mode_label, basis, grid, k=2 * np.pi, boundary_tol=1e-10):
    """Realize one basis mode on a grid as a unit-norm :class:`SampledField`.

    Raises
    ------
    UnknownLabel
        If the label is not in the basis.
    GridTooSmall
        If more than ``boundary_tol`` of the mode energy sits on the grid rim,
        i.e. the grid does not contain the mode.
    """
    values = basis.raw_values(mode_label, grid)
    frac = boundary_energy_fraction(values)
    if frac > boundary_tol:
        raise GridTooSmall(
            f"mode {mode_label!r}: boundary energy fraction {frac:.3e} above {boundary_tol:.1e}"
        )
    f = SampledField(grid, values, k)
    return f.normalized()


def _hg_1d(order, coords, waist):
    xi = np.sqrt(2.0) * coords / waist
    h = eval_hermite(order, xi)
    norm = (2.0 / np.pi) ** 0.25 / np.sqrt(2.0**order * float(factorial(order)) * waist)
    return norm * h * np.exp(-(coords**2) / waist**2)


def hermite_gaussian_basis(max_order, waist):
    """All Hermite-Gaussian modes ``(m, n)`` with ``m, n <= max_order``.

    Labels are index pairs; ``(0, 0)`` is the fundamental Gaussian.
    """
    labels = [(m, n) for m in range(max_order + 1) for n in range(max_order + 1)]

    def sampler(label, grid):
        m, n = label
        ux = _hg_1d(m, grid.x_axis(), waist)
        uy = _hg_1d(n, grid.y_axis(), waist)
        return np.outer(uy, ux).astype(complex)

    return ModeBasis(labels, sampler, name=f"hg(max={max_order},w0={waist:g})")


def laguerre_gaussian_basis(labels, waist):
    """Laguerre-Gaussian modes addressed by ``(p, l)`` (radial, azimuthal)."""

    def sampler(label, grid):
        p, l = label
        X, Y = grid.meshgrid()
        r2 = (X**2 + Y**2) / waist**2
        phi = np.arctan2(Y, X)
        al = abs(l)
        norm = np.sqrt(2.0 * float(factorial(p)) / (np.pi * float(factorial(p + al)))) / waist
        radial = (np.sqrt(2.0 * r2)) ** al * eval_genlaguerre(p, al, 2.0 * r2)
        return norm * radial * np.exp(-r2) * np.exp(1j * l * phi)

    return ModeBasis(list(labels), sampler, name=f"lg(w0={waist:g})")


def gram_matrix(basis, grid, k=2 * np.pi):
    """Pairwise overlaps of every basis mode on the grid."""
    fields = [sample_field(lbl, basis, grid, k=k) for lbl in basis.labels]
    m = basis.count
    g = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            g[i, j] = field_overlap(fields[i], fields[j])
    return g


# --------------------------------------------------------------------------
# Plane-wave grids


class PlaneWaveGrid:
    """Finite family of propagating plane-wave directions with amplitudes.

    Directions are unit vectors with ``n_z = +sqrt(1 - nx^2 - ny^2)``;
    transverse components with ``nx^2 + ny^2 > 1`` (evanescent waves) are
    discarded at construction and the dropped weight is recorded in
    ``evanescent_fraction``.  Amplitude vectors are kept in plain discrete
    norm (``sum |phi|^2 = 1`` after :meth:`normalized`); the solid-angle
    weights ``dOmega = dnx dny / nz`` enter the coupling integrals.
    """

    def __init__(self, transverse, amplitudes=None, weights=None):
        t = np.atleast_2d(np.asarray(transverse, dtype=float))
        if t.ndim != 2 or t.shape[1] != 2:
            raise ValueError("transverse must be an (M, 2) array of (nx, ny)")
        amp = (
            np.ones(len(t), dtype=complex)
            if amplitudes is None
            else np.asarray(amplitudes, dtype=complex)
        )
        w = np.ones(len(t)) if weights is None else np.asarray(weights, dtype=float)
        if len(amp) != len(t) or len(w) != len(t):
            raise ValueError("amplitudes/weights length must match directions")

        s2 = np.sum(t**2, axis=1)
        keep = s2 <= 1.0
        total = float(np.sum(np.abs(amp) ** 2))
        kept = float(np.sum(np.abs(amp[keep]) ** 2))
        self.evanescent_fraction = 0.0 if total == 0 else 1.0 - kept / total
        if not np.any(keep):
            raise EmptyGrid("all directions are evanescent")
        self.transverse = t[keep]
        self.amplitudes = amp[keep]
        self.weights = w[keep]
        for arr in (self.transverse, self.amplitudes, self.weights):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.transverse)

    @property
    def nz(self):
        return np.sqrt(np.clip(1.0 - np.sum(self.transverse**2, axis=1), 0.0, None))

    @property
    def directions(self):
        """Unit direction vectors, shape (M, 3)."""
        d = np.column_stack([self.transverse, self.nz])
        norms = np.linalg.norm(d, axis=1)
        assert np.all(np.abs(norms - 1.0) < 1e-12)
        return d

    def normalized(self):
        n = np.sqrt(np.sum(np.abs(self.amplitudes) ** 2))
        if n == 0:
            raise ValueError("zero amplitude vector")
        return PlaneWaveGrid(self.transverse, self.amplitudes / n, self.weights)

    @classmethod
    def single(cls, nx=0.0, ny=0.0):
        """One plane wave travelling along (nx, ny, nz)."""
        return cls([[nx, ny]])

    @classmethod
    def lattice(cls, center, half_extent, steps):
        """Uniform transverse lattice of directions around ``center``.

        ``steps`` points per axis spanning ``center +- half_extent``; weights
        are the solid-angle elements ``dnx dny / nz`` of each sample.
        """
        cx, cy = center
        ax = np.linspace(cx - half_extent, cx + half_extent, steps)
        ay = np.linspace(cy - half_extent, cy + half_extent, steps)
        pts = np.array([(x, y) for y in ay for x in ax])
        d = (2 * half_extent / (steps - 1)) ** 2 if steps > 1 else 1.0
        s2 = np.sum(pts**2, axis=1)
        nz = np.sqrt(np.clip(1.0 - s2, 1e-12, None))
        return cls(pts, weights=d / nz)


# --------------------------------------------------------------------------
# Field import/export: magic + header(nx, ny, dx, dy, k) + row-major complex128


def save_field(path, f):
    header = struct.pack("<IIddd", f.grid.nx, f.grid.ny, f.grid.dx, f.grid.dy, f.k)
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype=np.complex128).tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(FIELD_MAGIC))
        if magic != FIELD_MAGIC:
            raise ValueError(f"not a maskmodes field file (magic {magic!r})")
        nx, ny, dx, dy, k = struct.unpack("<IIddd", fh.read(struct.calcsize("<IIddd")))
        data = np.frombuffer(fh.read(), dtype=np.complex128).reshape(ny, nx)
    return SampledField(Grid2D(nx=nx, ny=ny, dx=dx, dy=dy), data, k)
