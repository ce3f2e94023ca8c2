"""Deterministic random test fields from a counter-based generator.

All randomness flows from a single 64-bit seed through numpy's Philox
(counter-based) bit generator; sub-streams are derived by jumping the key
so independent field draws are reproducible and order-independent.
"""

from __future__ import annotations

import numpy as np

from .grids import Grid2D, SpectralField, ZFrequencySet, fft2, ifft2


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) + np.uint64(stream) * np.uint64(0x9E3779B97F4A7C15)))


def smooth_scalar(grid: Grid2D, seed: int, stream: int = 0, kmax: int = 6,
                  envelope_width: float = 4.0, rng=None) -> np.ndarray:
    """Random band-limited scalar with a Gaussian envelope (Schwartz-class)."""
    rng = rng or generator(seed, stream)
    n = grid.points_per_axis
    spec = np.zeros((n, n), dtype=complex)
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    sel = np.abs(k) <= kmax
    size = (sel.sum(), sel.sum())
    block = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    spec[np.ix_(sel, sel)] = block
    # scale out the 1/n^2 of the inverse transform so the sampled function is
    # resolution-independent (same low modes, same coefficients)
    raw = ifft2(spec).real * (n * n) / 4096.0
    r = grid.radius()
    return raw * np.exp(-(r / envelope_width) ** 2)


def smooth_field(grid: Grid2D, zfreqs: ZFrequencySet, seed: int, stream: int = 0,
                 kmax: int = 6, envelope_width: float = 4.0, frame="self_similar") -> SpectralField:
    """Random smooth 3-component field satisfying the reality invariant."""
    rng = generator(seed, stream)
    f = SpectralField.zeros(grid, zfreqs, frame)
    for i in range(len(zfreqs)):
        for c in range(3):
            re = smooth_scalar(grid, seed, rng=rng, kmax=kmax, envelope_width=envelope_width)
            im = smooth_scalar(grid, seed, rng=rng, kmax=kmax, envelope_width=envelope_width)
            f.data[i, c] = re + 1j * im
    f.enforce_reality()
    return f


def divergence_free_field(grid: Grid2D, zfreqs: ZFrequencySet, seed: int, stream: int = 0,
                          kmax: int = 6, envelope_width: float = 4.0, scale_z: float = 1.0,
                          frame="self_similar") -> SpectralField:
    """Random field with discrete div f^x + i (scale_z zeta) f^z = 0.

    Built as the anisotropic curl of a random smooth vector potential
    (curl_bar A with dbar_3 = i scale_z zeta), so the divergence vanishes by
    symbol algebra and the field inherits the potential's Gaussian-envelope
    locality (a Helmholtz projection would leave power-law tails).
    """
    pot = smooth_field(grid, zfreqs, seed, stream, kmax, envelope_width, frame)
    f = SpectralField.zeros(grid, zfreqs, frame)
    k1, k2 = grid.wavenumbers()
    for i, zeta in enumerate(zfreqs.modes):
        kz = scale_z * zeta
        a1h, a2h, a3h = (fft2(pot.data[i, c]) for c in range(3))
        f.data[i, 0] = ifft2(1j * k2 * a3h - 1j * kz * a2h)
        f.data[i, 1] = ifft2(1j * kz * a1h - 1j * k1 * a3h)
        f.data[i, 2] = ifft2(1j * k1 * a2h - 1j * k2 * a1h)
    f.enforce_reality()
    return f


def project_divergence_free(f: SpectralField, scale_z: float = 1.0):
    """In-place Helmholtz projection per zeta with kbar = (k1, k2, scale_z*zeta)."""
    k1, k2 = f.grid.wavenumbers()
    for i, zeta in enumerate(f.zfreqs.modes):
        kz = scale_z * zeta
        fh = fft2(f.data[i])
        dot = 1j * k1 * fh[0] + 1j * k2 * fh[1] + 1j * kz * fh[2]
        k2norm = k1 ** 2 + k2 ** 2 + kz ** 2
        coef = np.where(k2norm > 0, dot, 0.0) / np.where(k2norm > 0, k2norm, 1.0)
        fh[0] += 1j * k1 * coef
        fh[1] += 1j * k2 * coef
        fh[2] += 1j * kz * coef
        f.data[i] = ifft2(fh)
    return f


def discrete_divergence(f: SpectralField, scale_z: float = 1.0) -> float:
    """Max over zeta of the sup-norm of div f^x + i (scale_z zeta) f^z."""
    k1, k2 = f.grid.wavenumbers()
    worst = 0.0
    for i, zeta in enumerate(f.zfreqs.modes):
        kz = scale_z * zeta
        fh = fft2(f.data[i])
        div = ifft2(1j * k1 * fh[0] + 1j * k2 * fh[1] + 1j * kz * fh[2])
        worst = max(worst, float(np.max(np.abs(div))))
    return worst


def gaussian_bump(grid: Grid2D, center=(0.0, 0.0), width=1.0, amplitude=1.0) -> np.ndarray:
    x1, x2 = grid.meshgrid()
    return amplitude * np.exp(-(((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2) / width ** 2))
