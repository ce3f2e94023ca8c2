"""Function-space norms evaluated by quadrature and z-mode summation.

Implements the anisotropic toolbox used throughout: weighted transverse
Lebesgue norms L^p(m), the Gaussian-weighted inner product on L^2(infinity),
the Wiener-algebra norms B_z X (sum/integral over z-frequencies of the
X-norm of each slice), dyadic ell^p refinements built from a smooth radial
partition of unity, the Y-norm pair controlling vortex stretching, and a
finite-ball-family Morrey seminorm.

All quadrature is the midpoint rule on the cell-centered grid, which is
spectrally accurate for the smooth, rapidly decaying fields this package
works with.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import Grid2D, SpectralField

#: restrict Gaussian-weighted inner products to |xi| <= this radius so that
#: exp(+r^2/4) stays representable; beyond it, eigenfunction-class integrands
#: are below double-precision noise.
WEIGHT_CUTOFF = 12.0


@dataclass(frozen=True)
class WeightSpec:
    """Weight exponent m (np.inf marks the Gaussian-weighted Hilbert space)."""

    m: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if np.isinf(self.m) and self.p != 2:
            raise ValueError("m = infinity is only defined for p = 2")


@dataclass
class NormReport:
    label: str
    norm_kind: str
    time_stamps: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, t, value):
        value = float(value)
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"norm value must be finite and nonnegative, got {value}")
        self.time_stamps.append(float(t))
        self.values.append(value)

    def rows(self):
        return list(zip(self.time_stamps, self.values))


def _pointwise_abs(slc: np.ndarray) -> np.ndarray:
    """Euclidean modulus over components; scalars pass through."""
    if slc.ndim == 2:
        return np.abs(slc)
    return np.sqrt(np.sum(np.abs(slc) ** 2, axis=0))


def lp_weighted(slc: np.ndarray, grid: Grid2D, p: float, m: float = 0.0) -> float:
    """Transverse L^p(m) norm of one slice by midpoint quadrature."""
    mag = _pointwise_abs(np.asarray(slc))
    if m != 0.0:
        r2 = grid.radius() ** 2
        mag = mag * (1.0 + r2) ** (m / 2.0)
    if np.isinf(p):
        return float(np.max(mag))
    return float((np.sum(mag ** p) * grid.cell_area()) ** (1.0 / p))


def bz_norm(f: SpectralField, p: float, weight: WeightSpec | None = None) -> float:
    """Wiener-algebra norm: sum (or weighted sum) over zeta of L^p(m) slice norms."""
    if not np.all(np.isfinite(f.data.view(float))):
        raise ValueError("non-finite field values")
    m = 0.0 if weight is None else weight.m
    total = 0.0
    for i, w in enumerate(f.zfreqs.weights):
        total += w * lp_weighted(f.data[i], f.grid, p, m)
    return float(total)


def l2_infty_inner(f: np.ndarray, h: np.ndarray, grid: Grid2D,
                   cutoff: float = WEIGHT_CUTOFF) -> complex:
    """Inner product with weight G(xi)^{-1}, integrated over |xi| <= cutoff."""
    f = np.asarray(f)
    h = np.asarray(h)
    r2 = grid.radius() ** 2
    mask = r2 <= cutoff ** 2
    ginv = np.zeros_like(r2)
    ginv[mask] = 4.0 * np.pi * np.exp(r2[mask] / 4.0)
    if f.ndim == 2:
        prod = f * np.conj(h)
    else:
        prod = np.sum(f * np.conj(h), axis=0)
    val = np.sum(prod * ginv) * grid.cell_area()
    if not np.isfinite(val):
        raise ValueError("Gaussian-weighted inner product overflowed; shrink the cutoff")
    return complex(val)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def dyadic_bumps(grid: Grid2D, m_min: float = 1.0, m_max: float | None = None):
    """Smooth radial partition of unity on dyadic annuli covering the grid.

    Each annular bump chi_M is supported in {M/2 < r < 2M}; the smallest
    scale is a low-pass core bump supported in {r < 2 m_min} so the
    partition covers the origin.  Raw profiles are normalized pointwise so
    that sum_M chi_M = 1 everywhere on the grid.  The family is independent
    of the resolution, which makes the resulting norms refinement-stable.
    Returns a list of (M, chi_M array) pairs.
    """
    if m_max is None:
        m_max = 2.0 ** np.ceil(np.log2(np.sqrt(2.0) * grid.half_extent))
    r = grid.radius()
    ms, raw = [], []
    mval = m_min
    while mval <= m_max * 1.0001:
        s = r / mval
        chi = _smoothstep((2.0 - s) / 1.5)
        if mval > m_min:
            chi = chi * _smoothstep((s - 0.5) / 1.5)
        ms.append(mval)
        raw.append(chi)
        mval *= 2.0
    total = np.sum(raw, axis=0)
    total[total == 0.0] = 1.0
    return [(m, chi / total) for m, chi in zip(ms, raw)]


def dyadic_ellp_norm(f: SpectralField, p_outer: float, inner_p: float = 2.0,
                     inner_m: float = 0.0, bumps=None) -> float:
    """ell^p over dyadic annuli of the inner B_z L^p(m) norms."""
    if bumps is None:
        bumps = dyadic_bumps(f.grid)
    vals = []
    for _, chi in bumps:
        masked = SpectralField(f.grid, f.zfreqs, f.data * chi, f.frame, f.time)
        vals.append(bz_norm(masked, inner_p, WeightSpec(inner_m, inner_p)))
    vals = np.asarray(vals)
    if np.isinf(p_outer):
        return float(np.max(vals))
    return float(np.sum(vals ** p_outer) ** (1.0 / p_outer))


def stretching_scalar(omega: SpectralField, s: float) -> SpectralField:
    """The auxiliary scalar x . omega^x - 2 s (d_z omega^z), with d_z = i zeta.

    Returned as a SpectralField whose z-component stores the scalar (the
    transverse components are zero), so that the B_z machinery applies.
    """
    x1, x2 = omega.grid.meshgrid()
    out = SpectralField.zeros(omega.grid, omega.zfreqs, omega.frame, omega.time)
    for i, zeta in enumerate(omega.zfreqs.modes):
        psi = (x1 * omega.data[i, 0] + x2 * omega.data[i, 1]
               - 2.0 * s * 1j * zeta * omega.data[i, 2])
        out.data[i, 2] = psi
    return out


def y_norm(omega: SpectralField, s: float):
    """Y_s-norm pair: (B_z L^1 of omega, ell^1 B_z L^2 of the stretching scalar)."""
    first = bz_norm(omega, 1.0)
    psi = stretching_scalar(omega, s)
    second = dyadic_ellp_norm(psi, 1.0, inner_p=2.0)
    return first, second


def morrey_norm(values: np.ndarray, extents, p: float = 1.5, q: float = 1.0,
                lattice_fraction: float = 8.0, n_radii: int = 7) -> float:
    """Finite-family Morrey seminorm sup_B r^{3/p - 3/q} (int_B |f|^q)^{1/q}.

    values samples |f| on a uniform 3D box with half-extents ``extents``
    (a 3-tuple); centers run over a lattice of spacing L/lattice_fraction and
    radii over {2^-k L}, k = 0..n_radii-1, with L the largest half-extent.
    The result under-approximates the true norm and is monotone under
    refinement of the ball family.  Ball integrals are evaluated for all
    grid cells at once by zero-padded FFT convolution with ball indicators,
    then sampled at the lattice centers.
    """
    values = np.abs(np.asarray(values, dtype=float))
    if values.ndim != 3:
        raise ValueError("values must be a 3D sample array")
    ex = np.asarray(extents, dtype=float)
    shape = values.shape
    steps = [2 * ex[d] / shape[d] for d in range(3)]
    axes = [(-ex[d] + steps[d] * (np.arange(shape[d]) + 0.5)) for d in range(3)]
    cell = float(np.prod(steps))
    big_l = float(np.max(ex))
    radii = [big_l * 2.0 ** (-k) for k in range(n_radii)]
    spacing = big_l / lattice_fraction

    pad_shape = tuple(2 * s for s in shape)
    vq_hat = np.fft.rfftn(values ** q, s=pad_shape, axes=(0, 1, 2))
    # displacement grid for the indicator kernels, centered at index 0
    disp = []
    for d in range(3):
        idx = np.fft.fftfreq(pad_shape[d], d=1.0 / pad_shape[d])
        disp.append(idx * steps[d])
    dx, dy, dz = np.meshgrid(disp[0], disp[1], disp[2], indexing="ij")
    d2 = dx ** 2 + dy ** 2 + dz ** 2

    # lattice centers snapped to nearest grid cells
    lat = [np.arange(-ex[d], ex[d] + 1e-12, spacing) for d in range(3)]
    lat_idx = [np.clip(np.round((lat[d] - axes[d][0]) / steps[d]).astype(int),
                       0, shape[d] - 1) for d in range(3)]

    best = 0.0
    for r in radii:
        kern_hat = np.fft.rfftn((d2 <= r * r).astype(float), s=pad_shape, axes=(0, 1, 2))
        conv = np.fft.irfftn(vq_hat * kern_hat, s=pad_shape, axes=(0, 1, 2))[:shape[0], :shape[1], :shape[2]]
        sampled = conv[np.ix_(lat_idx[0], lat_idx[1], lat_idx[2])]
        integral = max(float(np.max(sampled)), 0.0) * cell
        if integral > 0:
            cand = r ** (3.0 / p - 3.0 / q) * integral ** (1.0 / q)
            best = max(best, cand)
    return float(best)
