"""Inversion operators: screened resolvents and the per-frequency Biot-Savart law.

The default inversion works in the Fourier basis of the 2L-periodic box
(with mean-zero projection at lambda = 0); a free-space kernel-quadrature
path (Bessel K0 kernel, log kernel at lambda = 0, one-cell analytic
handling of the singularity) is kept as an independent cross-check.

Sign conventions, fixed module-wide: xi^perp = (-xi2, xi1) and
grad^perp = (-d2, d1).  The overall sign of the 2D velocity inversion is
pinned by requiring that the Gaussian vorticity alpha*G maps to the swirl
alpha*g; concretely u = -grad^perp (-Delta)^{-1} omega_z, which is the
zeta = 0 reduction of the per-frequency law below.

To keep that example exact despite the box truncation (the velocity of a
net-circulation vortex decays too slowly to periodize), the 2D inversion
splits off the swirl part: omega_z = c*G + omega', c = int omega_z, and
only the mean-zero remainder goes through the periodic inversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import k0 as bessel_k0

from .grids import Grid2D, SpectralField, fft2, ifft2, SELF_SIMILAR
from .oseen import gaussian_on_grid, swirl_on_grid


@dataclass(frozen=True)
class ResolventPlan:
    grid: Grid2D
    method: str = "fourier_periodic"
    lam: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.method not in ("fourier_periodic", "kernel_quadrature"):
            raise ValueError(f"unknown method {self.method}")


def screened_resolvent(f: np.ndarray, lam: float, plan: ResolventPlan | None = None,
                       grid: Grid2D | None = None) -> np.ndarray:
    """Solve (lam^2 - Delta) u = f on the grid.

    lam = 0 requires mean-zero data in the periodic method (the mean is
    projected out and must already be negligible, else we reject).
    """
    if plan is None:
        plan = ResolventPlan(grid=grid, lam=lam)
    grid = plan.grid
    f = np.asarray(f)
    if plan.method == "fourier_periodic":
        k1, k2 = grid.wavenumbers()
        sym = lam * lam + k1 ** 2 + k2 ** 2
        fh = fft2(f)
        if lam == 0.0:
            rel_mean = np.abs(fh[..., 0, 0]) / (np.sum(np.abs(f), axis=(-2, -1)) + 1e-300)
            if np.any(rel_mean > 1e-8):
                raise ValueError("lambda = 0 requires mean-zero data in periodic mode")
            sym = sym.copy()
            sym[0, 0] = 1.0
            fh = fh.copy()
            fh[..., 0, 0] = 0.0
        return ifft2(fh / sym)
    return _kernel_resolvent(f, lam, grid)


def _truncated_kernel_symbol(kmag: np.ndarray, lam: float, trunc: float) -> np.ndarray:
    """Continuous Fourier transform of the radially truncated free-space kernel.

    For lam > 0 the kernel is (1/2 pi) K0(lam rho) 1_{rho < T}; its transform
    follows from the Bessel cross-product identity,
      M(k) = [1 + T (k J1(kT) K0(lam T) - lam J0(kT) K1(lam T))] / (k^2 + lam^2).
    For lam = 0 the kernel is -(1/2 pi) ln(rho) 1_{rho < T} with
      N(k) = (1 - J0(kT)) / k^2 - (T ln T) J1(kT) / k,   N(0) = T^2/4 - T^2 ln T / 2.
    """
    from scipy.special import j0, j1, k1 as bessel_k1

    t = trunc
    out = np.empty_like(kmag)
    if lam > 0.0:
        out[:] = (1.0 + t * (kmag * j1(kmag * t) * bessel_k0(lam * t)
                             - lam * j0(kmag * t) * bessel_k1(lam * t)))
        out /= kmag ** 2 + lam ** 2
    else:
        nz = kmag > 0
        kn = kmag[nz]
        out[nz] = (1.0 - j0(kn * t)) / kn ** 2 - (t * np.log(t)) * j1(kn * t) / kn
        out[~nz] = t * t / 4.0 - t * t * np.log(t) / 2.0
    return out


def _kernel_resolvent(f: np.ndarray, lam: float, grid: Grid2D) -> np.ndarray:
    """Free-space inversion by padded FFT with the analytic transform of the
    truncated kernel (spectrally accurate for data decaying inside the box).

    Truncation radius T = 3L covers the box diagonal; the 4x padding keeps
    periodic images outside the kernel range.
    """
    n = grid.points_per_axis
    npad = 4 * n
    trunc = 3.0 * grid.half_extent
    k = 2.0 * np.pi * np.fft.fftfreq(npad, d=grid.spacing)
    k1g, k2g = np.meshgrid(k, k, indexing="ij")
    kmag = np.hypot(k1g, k2g)
    sym = _truncated_kernel_symbol(kmag, lam, trunc)
    pad = np.zeros(f.shape[:-2] + (npad, npad), dtype=complex)
    pad[..., :n, :n] = f
    out = np.fft.ifft2(np.fft.fft2(pad) * sym)[..., :n, :n]
    return out if np.iscomplexobj(f) else out.real


def boundary_mass(f: np.ndarray, grid: Grid2D, rings: int = 2) -> float:
    """Sup of |f| over the outermost grid rings, relative to the global sup."""
    mag = np.abs(np.asarray(f))
    peak = float(np.max(mag)) + 1e-300
    edge = max(
        float(np.max(mag[..., :rings, :])), float(np.max(mag[..., -rings:, :])),
        float(np.max(mag[..., :, :rings])), float(np.max(mag[..., :, -rings:])),
    )
    return edge / peak


def bs2d_velocity(omega_z: np.ndarray, grid: Grid2D, method: str = "fourier_periodic",
                  boundary_tol: float = 1e-8, on_boundary_fail: str = "warn") -> np.ndarray:
    """2D Biot-Savart: u = -grad^perp (-Delta)^{-1} omega_z, shape (2, N, N).

    The net circulation c = int omega_z rides on the closed-form swirl c*g;
    the mean-zero remainder is inverted by the requested method.
    """
    omega_z = np.asarray(omega_z)
    if boundary_mass(omega_z, grid) > boundary_tol:
        msg = "vorticity does not decay inside the box"
        if on_boundary_fail == "reject":
            raise ValueError(msg)
    c = np.sum(omega_z) * grid.cell_area()
    rem = omega_z - c * gaussian_on_grid(grid)
    base = swirl_on_grid(grid)
    if np.max(np.abs(rem)) <= 1e-13 * (np.max(np.abs(omega_z)) + 1e-300):
        u = c * base.astype(omega_z.dtype if np.iscomplexobj(omega_z) else float)
        return u
    plan = ResolventPlan(grid=grid, method=method, lam=0.0)
    phi = screened_resolvent(rem, 0.0, plan)
    d1, d2 = _spectral_gradient(phi, grid)
    u = np.stack([d2, -d1])  # -grad^perp phi with grad^perp = (-d2, d1)
    u = u + c * base
    return u if np.iscomplexobj(omega_z) else u.real


def _spectral_gradient(a: np.ndarray, grid: Grid2D):
    k1, k2 = grid.wavenumbers()
    ah = fft2(a)
    return ifft2(1j * k1 * ah), ifft2(1j * k2 * ah)


def bs3d_per_frequency(omega: SpectralField, tau: float | None = None,
                       divergence_tol: float = 1e-6) -> SpectralField:
    """Per-frequency Biot-Savart for the 3-component field.

    Self-similar frame (anisotropy factor s = e^{tau/2}):
      U^xi = i s zeta (s^2 zeta^2 - Delta)^{-1} (w^xi)^perp
             - grad^perp (s^2 zeta^2 - Delta)^{-1} w^z,
      U^z  = grad^perp . (s^2 zeta^2 - Delta)^{-1} w^xi.
    Physical frame: s = 1.  At zeta = 0 the x1x2-part reduces to the 2D law
    (with the swirl splitting), and the z-part to the scalar stream solve.
    """
    from .randomfields import discrete_divergence

    if omega.frame == SELF_SIMILAR:
        if tau is None:
            tau = omega.time
        s = float(np.exp(tau / 2.0))
    else:
        s = 1.0
    div = discrete_divergence(omega, scale_z=s)
    scale = np.max(np.abs(omega.data)) + 1e-300
    if div / scale > divergence_tol:
        raise ValueError(f"input vorticity has discrete divergence {div/scale:.3e} (tol {divergence_tol})")

    grid = omega.grid
    k1, k2 = grid.wavenumbers()
    k2norm = k1 ** 2 + k2 ** 2
    out = SpectralField.zeros(grid, omega.zfreqs, omega.frame, omega.time)
    for i, zeta in enumerate(omega.zfreqs.modes):
        lam2 = (s * zeta) ** 2
        w1h, w2h, wzh = (fft2(omega.data[i, c]) for c in range(3))
        if lam2 == 0.0:
            # 2D law for the transverse part, stream solve for the axial part
            uxy = bs2d_velocity(omega.data[i, 2], grid)
            out.data[i, 0] = uxy[0]
            out.data[i, 1] = uxy[1]
            sym = k2norm.copy()
            sym[0, 0] = 1.0
            p1 = w1h / sym
            p2 = w2h / sym
            p1[0, 0] = 0.0
            p2[0, 0] = 0.0
            # grad^perp . p = -d2 p1 + d1 p2
            out.data[i, 2] = ifft2(-1j * k2 * p1 + 1j * k1 * p2)
        else:
            sym = lam2 + k2norm
            r1h, r2h, rzh = w1h / sym, w2h / sym, wzh / sym
            coef = 1j * s * zeta
            # U^xi = coef * (w^xi)^perp-resolvent - grad^perp rz,
            # with (w^xi)^perp = (-w2, w1) and -grad^perp = (d2, -d1)
            u1h = coef * (-r2h) + 1j * k2 * rzh
            u2h = coef * r1h - 1j * k1 * rzh
            uzh = -1j * k2 * r1h + 1j * k1 * r2h
            out.data[i, 0] = ifft2(u1h)
            out.data[i, 1] = ifft2(u2h)
            out.data[i, 2] = ifft2(uzh)
    return out


def perturbative_z_terms(w: SpectralField, tau: float | None = None,
                         divergence_form: bool = True) -> SpectralField:
    """The coupling terms Z^xi, Z^z of the frequency-by-frequency linear system.

    Z^xi = i s zeta G [ i s zeta (s^2 zeta^2 - Delta)^{-1} (w^xi)^perp
                        - grad^perp (s^2 zeta^2 - Delta)^{-1} w^z ],
    Z^z  = i s zeta grad^perp . ( G (s^2 zeta^2 - Delta)^{-1} w^xi )
           + div( G ((s^2 zeta^2 - Delta)^{-1} - (-Delta)^{-1}) grad^perp w^z ),
    with s = e^{tau/2}.  Both vanish identically on the zeta = 0 slice.
    divergence_form=False evaluates the z-part in the expanded (non-divergence)
    form; the two agree up to aliasing of the pointwise products.
    """
    if tau is None:
        tau = w.time
    s = float(np.exp(tau / 2.0))
    grid = w.grid
    k1, k2 = grid.wavenumbers()
    k2norm = k1 ** 2 + k2 ** 2
    gauss = gaussian_on_grid(grid)
    x1, x2 = grid.meshgrid()
    grad_g = np.stack([-0.5 * x1 * gauss, -0.5 * x2 * gauss])
    out = SpectralField.zeros(grid, w.zfreqs, w.frame, w.time)
    for i, zeta in enumerate(w.zfreqs.modes):
        if zeta == 0:
            continue
        lam2 = (s * zeta) ** 2
        sym = lam2 + k2norm
        w1h, w2h, wzh = (fft2(w.data[i, c]) for c in range(3))
        coef = 1j * s * zeta
        # resolvent applied to the components
        r1 = ifft2(w1h / sym)
        r2 = ifft2(w2h / sym)
        # U^xi-like object entering Z^xi
        uxi1 = coef * (-r2) + ifft2(1j * k2 * (wzh / sym))
        uxi2 = coef * r1 - ifft2(1j * k1 * (wzh / sym))
        out.data[i, 0] = coef * gauss * uxi1
        out.data[i, 1] = coef * gauss * uxi2
        # z-component, first piece: i s zeta grad^perp . (G r^xi)
        a1 = gauss * r1
        a2 = gauss * r2
        a1h, a2h = fft2(a1), fft2(a2)
        piece1 = coef * ifft2(-1j * k2 * a1h + 1j * k1 * a2h)
        # second piece: resolvent difference acting on grad^perp w^z
        zero_sym = k2norm.copy()
        zero_sym[0, 0] = 1.0
        dperp1 = -1j * k2 * wzh
        dperp2 = 1j * k1 * wzh
        diff1h = dperp1 / sym - dperp1 / zero_sym
        diff2h = dperp2 / sym - dperp2 / zero_sym
        diff1h[0, 0] = 0.0
        diff2h[0, 0] = 0.0
        d1 = ifft2(diff1h)
        d2 = ifft2(diff2h)
        if divergence_form:
            b1h, b2h = fft2(gauss * d1), fft2(gauss * d2)
            piece2 = ifft2(1j * k1 * b1h + 1j * k2 * b2h)
        else:
            # expanded form of the display; div of the resolvent difference of
            # grad^perp w^z vanishes identically, leaving grad G . (...)
            piece2 = grad_g[0] * d1 + grad_g[1] * d2
        out.data[i, 2] = piece1 + piece2
    return out
