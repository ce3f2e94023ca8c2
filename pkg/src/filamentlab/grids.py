"""Transverse grids, z-frequency sets, and the spectral field container.

Fields live directly in z-Fourier space: a field is a stack of complex 2D
slices indexed by the frequency zeta, each slice holding the three Cartesian
components (x1, x2, z) on a uniform cell-centered grid covering [-L, L)^2.
The physical field is real, which translates into the conjugate-symmetry
requirement between the +zeta and -zeta slices.

Binary snapshots use the FLM1 format: magic ``FLM1``, little-endian u32
quadruple (N, N, n_zfreq, n_components=3), then float64 (re, im) pairs in
row-major order with zeta as the outermost index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

SELF_SIMILAR = "self_similar"
PHYSICAL = "physical"

_FLM1_MAGIC = b"FLM1"


@dataclass(frozen=True)
class Grid2D:
    """Uniform cell-centered grid on [-L, L)^2 with N points per axis."""

    half_extent: float = 16.0
    points_per_axis: int = 128

    def __post_init__(self):
        if self.points_per_axis < 8 or self.points_per_axis % 2 != 0:
            raise ValueError("points_per_axis must be even and >= 8")
        if self.half_extent <= 0:
            raise ValueError("half_extent must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_axis

    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.half_extent + h * (np.arange(self.points_per_axis) + 0.5)

    def meshgrid(self):
        x = self.axis()
        return np.meshgrid(x, x, indexing="ij")

    def radius(self) -> np.ndarray:
        x1, x2 = self.meshgrid()
        return np.hypot(x1, x2)

    def wavenumbers(self):
        """FFT wavenumbers for the 2L-periodic extension, 'ij' indexed."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)
        return np.meshgrid(k, k, indexing="ij")

    def cell_area(self) -> float:
        return self.spacing ** 2


@dataclass(frozen=True)
class ZFrequencySet:
    """Symmetric set of z-frequencies with quadrature weights.

    Torus case (period 2 pi): integer modes -zmax..zmax, unit weights, and
    the Wiener-algebra sum over zeta is exact.  Line case: uniformly sampled
    real frequencies with trapezoid weights approximating the d-zeta integral.
    """

    modes: tuple = (0,)
    weights: tuple = (1.0,)
    torus: bool = True

    @classmethod
    def for_torus(cls, zmax: int) -> "ZFrequencySet":
        modes = tuple(range(-zmax, zmax + 1))
        return cls(modes=modes, weights=tuple(1.0 for _ in modes), torus=True)

    @classmethod
    def for_line(cls, zmax: float, n: int) -> "ZFrequencySet":
        if n % 2 == 0:
            n += 1
        modes = np.linspace(-zmax, zmax, n)
        dz = modes[1] - modes[0]
        w = np.full(n, dz)
        w[0] *= 0.5
        w[-1] *= 0.5
        return cls(modes=tuple(modes), weights=tuple(w), torus=False)

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=float)
        if not np.allclose(np.sort(m), np.sort(-m)):
            raise ValueError("frequency set must be symmetric about 0")

    def __len__(self):
        return len(self.modes)

    def index_of(self, zeta) -> int:
        for i, m in enumerate(self.modes):
            if m == zeta:
                return i
        raise KeyError(f"frequency {zeta} not in set")

    def conjugate_index(self, i: int) -> int:
        return self.index_of(-self.modes[i])


@dataclass
class SpectralField:
    """3-component complex field, one 2D slice per z-frequency.

    data has shape (n_zfreq, 3, N, N); components are ordered (x1, x2, z).
    frame is one of SELF_SIMILAR (time variable tau) or PHYSICAL (time t).
    """

    grid: Grid2D
    zfreqs: ZFrequencySet
    data: np.ndarray
    frame: str = SELF_SIMILAR
    time: float = 0.0

    @classmethod
    def zeros(cls, grid: Grid2D, zfreqs: ZFrequencySet, frame=SELF_SIMILAR, time=0.0):
        n = grid.points_per_axis
        data = np.zeros((len(zfreqs), 3, n, n), dtype=complex)
        return cls(grid=grid, zfreqs=zfreqs, data=data, frame=frame, time=time)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.zfreqs, self.data.copy(), self.frame, self.time)

    def slice(self, zeta) -> np.ndarray:
        return self.data[self.zfreqs.index_of(zeta)]

    def validate(self, atol=1e-10):
        """Check shapes, finiteness, and the reality (conjugate) invariant."""
        n = self.grid.points_per_axis
        if self.data.shape != (len(self.zfreqs), 3, n, n):
            raise ValueError(f"data shape {self.data.shape} does not match grid/frequency set")
        if not np.all(np.isfinite(self.data.view(float))):
            raise ValueError("field contains non-finite values")
        scale = max(np.max(np.abs(self.data)), 1.0)
        for i in range(len(self.zfreqs)):
            j = self.zfreqs.conjugate_index(i)
            err = np.max(np.abs(self.data[i] - np.conj(self.data[j])))
            if err > atol * scale:
                raise ValueError(
                    f"reality invariant violated at zeta={self.zfreqs.modes[i]}: {err:.3e}"
                )
        return self

    def enforce_reality(self):
        for i in range(len(self.zfreqs)):
            j = self.zfreqs.conjugate_index(i)
            if j > i:
                avg = 0.5 * (self.data[i] + np.conj(self.data[j]))
                self.data[i] = avg
                self.data[j] = np.conj(avg)
            elif j == i:
                self.data[i] = self.data[i].real + 0.0j
        return self


def write_flm1(path, field: SpectralField):
    n = field.grid.points_per_axis
    header = _FLM1_MAGIC + struct.pack("<4I", n, n, len(field.zfreqs), 3)
    flat = np.ascontiguousarray(field.data)
    inter = np.empty(flat.size * 2, dtype="<f8")
    inter[0::2] = flat.real.ravel()
    inter[1::2] = flat.imag.ravel()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inter.tobytes())


def read_flm1(path, grid: Grid2D | None = None, zfreqs: ZFrequencySet | None = None,
              frame=SELF_SIMILAR, time=0.0) -> SpectralField:
    """Read an FLM1 snapshot.

    The format carries only the array dimensions, so the grid extent and the
    frequency identities are supplied by the caller (defaults: L=16 and the
    symmetric integer torus set matching n_zfreq).
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _FLM1_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected FLM1")
        n1, n2, nz, nc = struct.unpack("<4I", fh.read(16))
        if n1 != n2:
            raise ValueError("non-square grids are not supported")
        if nc != 3:
            raise ValueError(f"expected 3 components, got {nc}")
        raw = fh.read()
    expected = n1 * n2 * nz * nc * 16
    if len(raw) != expected:
        raise ValueError(f"payload size {len(raw)} does not match header (expected {expected})")
    inter = np.frombuffer(raw, dtype="<f8")
    data = (inter[0::2] + 1j * inter[1::2]).reshape(nz, nc, n1, n2).copy()
    if grid is None:
        grid = Grid2D(16.0, n1)
    if grid.points_per_axis != n1:
        raise ValueError("supplied grid does not match snapshot dimensions")
    if zfreqs is None:
        if nz % 2 != 1:
            raise ValueError("cannot infer a symmetric frequency set of even size")
        zfreqs = ZFrequencySet.for_torus(nz // 2)
    if len(zfreqs) != nz:
        raise ValueError("supplied frequency set does not match snapshot dimensions")
    return SpectralField(grid=grid, zfreqs=zfreqs, data=data, frame=frame, time=time)


def fft2(a: np.ndarray) -> np.ndarray:
    return np.fft.fft2(a, axes=(-2, -1))


def ifft2(a: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(a, axes=(-2, -1))


def fft_derivatives(a: np.ndarray, grid: Grid2D):
    """Spectral partial derivatives (d/dx1, d/dx2) of the trig interpolant."""
    k1, k2 = grid.wavenumbers()
    ah = fft2(a)
    return ifft2(1j * k1 * ah), ifft2(1j * k2 * ah)
